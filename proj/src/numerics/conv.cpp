#include "mrih/numerics/conv.hpp"

#include <algorithm>

namespace mrih {

namespace {

struct ConvDims {
  std::size_t cin, cout, h, w, k, r;
};

ConvDims check_conv(const RealTensor& x, const RealTensor& kernel, const RealTensor* bias) {
  if (x.rank() != 3) throw ValueError("conv2d: input must be [C, H, W], got " + to_string(x.shape()));
  if (kernel.rank() != 4) throw ValueError("conv2d: kernel must be [Cout, Cin, K, K]");
  const std::size_t k = kernel.dim(2);
  if (kernel.dim(3) != k || k % 2 == 0) throw ValueError("conv2d: kernel must be square with odd size");
  if (kernel.dim(1) != x.dim(0)) {
    throw ValueError("conv2d: channel mismatch, input has " + std::to_string(x.dim(0)) +
                     " channels, kernel expects " + std::to_string(kernel.dim(1)));
  }
  if (bias != nullptr && (bias->rank() != 1 || bias->dim(0) != kernel.dim(0))) {
    throw ValueError("conv2d: bias must be [Cout]");
  }
  return {x.dim(0), kernel.dim(0), x.dim(1), x.dim(2), k, k / 2};
}

// Row/column range of output positions whose tap (u, v) lands inside the image.
inline std::pair<std::size_t, std::size_t> valid_range(std::size_t n, std::size_t tap, std::size_t r) {
  const std::size_t lo = tap < r ? r - tap : 0;
  const std::size_t hi = tap > r ? n - std::min(n, tap - r) : n;
  return {lo, hi};
}

// Offset of input row (i + u - r), shifted by (v - r) columns; may be negative.
inline std::ptrdiff_t offset(std::size_t i, std::size_t u, std::size_t v, const ConvDims& d) {
  return static_cast<std::ptrdiff_t>((i + u - d.r) * d.w) + static_cast<std::ptrdiff_t>(v) -
         static_cast<std::ptrdiff_t>(d.r);
}

}  // namespace

RealTensor conv2d(const RealTensor& x, const RealTensor& kernel, const RealTensor& bias) {
  const ConvDims d = check_conv(x, kernel, &bias);
  RealTensor out({d.cout, d.h, d.w});
  const double* xp = x.data().data();
  const double* kp = kernel.data().data();
  double* op = out.data().data();
  const std::size_t plane = d.h * d.w;
  for (std::size_t o = 0; o < d.cout; ++o) {
    double* oplane = op + o * plane;
    std::fill(oplane, oplane + plane, bias[o]);
    for (std::size_t c = 0; c < d.cin; ++c) {
      const double* xplane = xp + c * plane;
      for (std::size_t u = 0; u < d.k; ++u) {
        const auto [i0, i1] = valid_range(d.h, u, d.r);
        for (std::size_t v = 0; v < d.k; ++v) {
          const double wt = kp[((o * d.cin + c) * d.k + u) * d.k + v];
          if (wt == 0.0) continue;
          const auto [j0, j1] = valid_range(d.w, v, d.r);
          for (std::size_t i = i0; i < i1; ++i) {
            const double* xrow = xplane + (offset(i, u, v, d) + static_cast<std::ptrdiff_t>(j0));
            double* orow = oplane + i * d.w + j0;
            for (std::size_t j = 0; j < j1 - j0; ++j) orow[j] += wt * xrow[j];
          }
        }
      }
    }
  }
  return out;
}

void conv2d_backward(const RealTensor& x, const RealTensor& kernel, const RealTensor& grad_out,
                     RealTensor* grad_x, RealTensor* grad_kernel, RealTensor* grad_bias) {
  const ConvDims d = check_conv(x, kernel, nullptr);
  require_same_shape(grad_out.shape(), Shape{d.cout, d.h, d.w}, "conv2d_backward");
  const std::size_t plane = d.h * d.w;
  const double* xp = x.data().data();
  const double* kp = kernel.data().data();
  const double* gp = grad_out.data().data();
  for (std::size_t o = 0; o < d.cout; ++o) {
    const double* gplane = gp + o * plane;
    if (grad_bias != nullptr) {
      double s = 0.0;
      for (std::size_t p = 0; p < plane; ++p) s += gplane[p];
      (*grad_bias)[o] += s;
    }
    for (std::size_t c = 0; c < d.cin; ++c) {
      const double* xplane = xp + c * plane;
      double* gxplane = grad_x != nullptr ? grad_x->data().data() + c * plane : nullptr;
      for (std::size_t u = 0; u < d.k; ++u) {
        const auto [i0, i1] = valid_range(d.h, u, d.r);
        for (std::size_t v = 0; v < d.k; ++v) {
          const std::size_t widx = ((o * d.cin + c) * d.k + u) * d.k + v;
          const double wt = kp[widx];
          const auto [j0, j1] = valid_range(d.w, v, d.r);
          double acc = 0.0;
          for (std::size_t i = i0; i < i1; ++i) {
            const std::ptrdiff_t xoff = offset(i, u, v, d) + static_cast<std::ptrdiff_t>(j0);
            const double* grow = gplane + i * d.w + j0;
            const double* xrow = xplane + xoff;
            const std::size_t n = j1 - j0;
            if (grad_kernel != nullptr) {
              for (std::size_t j = 0; j < n; ++j) acc += grow[j] * xrow[j];
            }
            if (gxplane != nullptr && wt != 0.0) {
              double* gxrow = gxplane + xoff;
              for (std::size_t j = 0; j < n; ++j) gxrow[j] += wt * grow[j];
            }
          }
          if (grad_kernel != nullptr) (*grad_kernel)[widx] += acc;
        }
      }
    }
  }
}

RealTensor relu(const RealTensor& x) {
  RealTensor out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
  return out;
}

RealTensor avg_pool2(const RealTensor& x) {
  const auto [h, w] = spatial_dims(x.shape());
  if (h % 2 != 0 || w % 2 != 0) throw ValueError("avg_pool2: spatial dims must be even");
  Shape s = x.shape();
  s[s.size() - 2] = h / 2;
  s[s.size() - 1] = w / 2;
  RealTensor out(s);
  const std::size_t planes = x.size() / (h * w);
  for (std::size_t p = 0; p < planes; ++p) {
    const double* src = x.data().data() + p * h * w;
    double* dst = out.data().data() + p * (h / 2) * (w / 2);
    for (std::size_t i = 0; i < h / 2; ++i) {
      for (std::size_t j = 0; j < w / 2; ++j) {
        dst[i * (w / 2) + j] = 0.25 * (src[2 * i * w + 2 * j] + src[2 * i * w + 2 * j + 1] +
                                       src[(2 * i + 1) * w + 2 * j] + src[(2 * i + 1) * w + 2 * j + 1]);
      }
    }
  }
  return out;
}

RealTensor upsample2(const RealTensor& x) {
  const auto [h, w] = spatial_dims(x.shape());
  Shape s = x.shape();
  s[s.size() - 2] = 2 * h;
  s[s.size() - 1] = 2 * w;
  RealTensor out(s);
  const std::size_t planes = x.size() / (h * w);
  for (std::size_t p = 0; p < planes; ++p) {
    const double* src = x.data().data() + p * h * w;
    double* dst = out.data().data() + p * 4 * h * w;
    for (std::size_t i = 0; i < 2 * h; ++i) {
      for (std::size_t j = 0; j < 2 * w; ++j) dst[i * 2 * w + j] = src[(i / 2) * w + j / 2];
    }
  }
  return out;
}

}  // namespace mrih
