#pragma once

// Independent reference implementations used only by tests. None of these
// share code paths with the library routines they check.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <vector>

#include "mrih/numerics/rng.hpp"
#include "mrih/numerics/tensor.hpp"

namespace oracle {

using mrih::cdouble;
using mrih::ComplexTensor;
using mrih::RealTensor;

/// Direct O(N^2) centered orthonormal DFT of an [H, W] plane:
/// Y[k, l] = (1/sqrt(HW)) sum_{m,n} X[m, n] exp(-2 pi i ((k-H/2)(m-H/2)/H + (l-W/2)(n-W/2)/W)).
inline ComplexTensor dft2c(const ComplexTensor& x, bool inverse = false) {
  const std::size_t h = x.dim(x.rank() - 2);
  const std::size_t w = x.dim(x.rank() - 1);
  const std::size_t planes = x.size() / (h * w);
  const double sign = inverse ? 1.0 : -1.0;
  ComplexTensor out(x.shape());
  for (std::size_t p = 0; p < planes; ++p) {
    for (std::size_t k = 0; k < h; ++k) {
      for (std::size_t l = 0; l < w; ++l) {
        cdouble acc = 0.0;
        for (std::size_t m = 0; m < h; ++m) {
          for (std::size_t n = 0; n < w; ++n) {
            const double km = (static_cast<double>(k) - static_cast<double>(h / 2)) *
                              (static_cast<double>(m) - static_cast<double>(h / 2)) / static_cast<double>(h);
            const double ln = (static_cast<double>(l) - static_cast<double>(w / 2)) *
                              (static_cast<double>(n) - static_cast<double>(w / 2)) / static_cast<double>(w);
            acc += x[p * h * w + m * w + n] * std::polar(1.0, sign * 2.0 * std::numbers::pi * (km + ln));
          }
        }
        out[p * h * w + k * w + l] = acc / std::sqrt(static_cast<double>(h * w));
      }
    }
  }
  return out;
}

/// Nested-loop same-padded cross-correlation.
inline RealTensor naive_conv2d(const RealTensor& x, const RealTensor& k, const RealTensor& b) {
  const std::size_t cin = x.dim(0), h = x.dim(1), w = x.dim(2);
  const std::size_t cout = k.dim(0), ks = k.dim(2);
  const long r = static_cast<long>(ks / 2);
  RealTensor out({cout, h, w});
  for (std::size_t o = 0; o < cout; ++o) {
    for (long i = 0; i < static_cast<long>(h); ++i) {
      for (long j = 0; j < static_cast<long>(w); ++j) {
        double acc = b[o];
        for (std::size_t c = 0; c < cin; ++c) {
          for (long u = 0; u < static_cast<long>(ks); ++u) {
            for (long v = 0; v < static_cast<long>(ks); ++v) {
              const long ii = i + u - r;
              const long jj = j + v - r;
              if (ii < 0 || jj < 0 || ii >= static_cast<long>(h) || jj >= static_cast<long>(w)) continue;
              acc += k[((o * cin + c) * ks + u) * ks + v] * x.at(c, ii, jj);
            }
          }
        }
        out.at(o, i, j) = acc;
      }
    }
  }
  return out;
}

/// Central finite difference of f at x along every coordinate.
inline std::vector<double> central_diff(const std::function<double(const std::vector<double>&)>& f,
                                        std::vector<double> x, double h = 1e-5) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double x0 = x[i];
    x[i] = x0 + h;
    const double fp = f(x);
    x[i] = x0 - h;
    const double fm = f(x);
    x[i] = x0;
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

/// Relative error used for gradient checks; scale-aware near zero.
inline double grad_rel_err(double analytic, double numeric, double floor = 1e-6) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

inline RealTensor random_real(mrih::Shape shape, mrih::Rng& rng, double lo = -1.0, double hi = 1.0) {
  RealTensor t(std::move(shape));
  for (auto& v : t.storage()) v = rng.uniform(lo, hi);
  return t;
}

inline ComplexTensor random_complex(mrih::Shape shape, mrih::Rng& rng) {
  ComplexTensor t(std::move(shape));
  for (auto& v : t.storage()) v = cdouble(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
  return t;
}

// Exact 1-D TV denoising objective for a piecewise-constant candidate.
inline double step_objective(const std::vector<double>& y, std::size_t jump, double u, double v, double lambda) {
  double f = lambda * std::abs(u - v);
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double x = i < jump ? u : v;
    f += 0.5 * (x - y[i]) * (x - y[i]);
  }
  return f;
}

struct StepFit {
  std::size_t jump;
  double u, v;
};

// Grid search over every jump position and level pair, refined once around the best cell.
inline StepFit grid_search_step(const std::vector<double>& y, double lambda) {
  StepFit best{0, 0, 0};
  double best_f = std::numeric_limits<double>::infinity();
  auto scan = [&](std::size_t jump, double u0, double v0, double span, double dx) {
    const int steps = static_cast<int>(std::lround(span / dx));
    for (int a = -steps; a <= steps; ++a) {
      for (int b = -steps; b <= steps; ++b) {
        const double u = u0 + a * dx, v = v0 + b * dx;
        const double f = step_objective(y, jump, u, v, lambda);
        if (f < best_f) {
          best_f = f;
          best = {jump, u, v};
        }
      }
    }
  };
  for (std::size_t jump = 1; jump < y.size(); ++jump) scan(jump, 0.5, 0.5, 0.5, 0.01);
  scan(best.jump, best.u, best.v, 0.01, 1e-5);
  return best;
}

// Per-window SSIM written directly from the definition.
inline double naive_ssim(const RealTensor& a, const RealTensor& b) {
  const std::size_t h = a.dim(0), w = a.dim(1), k = 7;
  double L = 0.0;
  for (double v : a.data()) L = std::max(L, v);
  const double c1 = std::pow(0.01 * L, 2), c2 = std::pow(0.03 * L, 2);
  double total = 0.0;
  std::size_t windows = 0;
  for (std::size_t i = 0; i + k <= h; ++i) {
    for (std::size_t j = 0; j + k <= w; ++j) {
      double ma = 0.0, mb = 0.0;
      for (std::size_t u = 0; u < k; ++u)
        for (std::size_t v = 0; v < k; ++v) {
          ma += a.at(i + u, j + v);
          mb += b.at(i + u, j + v);
        }
      ma /= 49.0;
      mb /= 49.0;
      double va = 0.0, vb = 0.0, cov = 0.0;
      for (std::size_t u = 0; u < k; ++u)
        for (std::size_t v = 0; v < k; ++v) {
          const double da = a.at(i + u, j + v) - ma, db = b.at(i + u, j + v) - mb;
          va += da * da;
          vb += db * db;
          cov += da * db;
        }
      va /= 48.0;
      vb /= 48.0;
      cov /= 48.0;
      total += (2 * ma * mb + c1) * (2 * cov + c2) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
      ++windows;
    }
  }
  return total / static_cast<double>(windows);
}

}  // namespace oracle
