#include "mrih/numerics/fft.hpp"

#include <cmath>
#include <memory>
#include <numbers>
#include <vector>

namespace mrih {

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

namespace {

// In-place iterative radix-2 transform of n = data.size() contiguous values
// spaced `stride` apart in `base`.
class Radix2 {
 public:
  explicit Radix2(std::size_t n) : n_(n), twiddle_(n / 2), rev_(n) {
    for (std::size_t k = 0; k < n / 2; ++k) {
      twiddle_[k] = std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n));
    }
    std::size_t bits = 0;
    while ((std::size_t{1} << bits) < n) ++bits;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t r = 0;
      for (std::size_t b = 0; b < bits; ++b) r |= ((i >> b) & 1U) << (bits - 1 - b);
      rev_[i] = r;
    }
  }

  void run(cdouble* buf, bool inverse) const {
    for (std::size_t i = 0; i < n_; ++i) {
      if (i < rev_[i]) std::swap(buf[i], buf[rev_[i]]);
    }
    for (std::size_t len = 2; len <= n_; len <<= 1) {
      const std::size_t half = len / 2;
      const std::size_t step = n_ / len;
      for (std::size_t start = 0; start < n_; start += len) {
        for (std::size_t k = 0; k < half; ++k) {
          cdouble w = twiddle_[k * step];
          if (inverse) w = std::conj(w);
          const cdouble u = buf[start + k];
          const cdouble v = buf[start + k + half] * w;
          buf[start + k] = u + v;
          buf[start + k + half] = u - v;
        }
      }
    }
  }

 private:
  std::size_t n_;
  std::vector<cdouble> twiddle_;
  std::vector<std::size_t> rev_;
};

const Radix2& plan(std::size_t n) {
  thread_local std::vector<std::unique_ptr<Radix2>> cache(64);
  std::size_t bits = 0;
  while ((std::size_t{1} << bits) < n) ++bits;
  if (!cache[bits]) cache[bits] = std::make_unique<Radix2>(n);
  return *cache[bits];
}

ComplexTensor centered_transform(const ComplexTensor& x, bool inverse) {
  const auto [h, w] = spatial_dims(x.shape());
  if (!is_power_of_two(h) || !is_power_of_two(w)) {
    throw ValueError("fft2c requires power-of-two spatial dims, got " + to_string(x.shape()));
  }
  const std::size_t plane = h * w;
  const std::size_t planes = x.size() / plane;
  const Radix2& row_fft = plan(w);
  const Radix2& col_fft = plan(h);
  const double scale = 1.0 / std::sqrt(static_cast<double>(plane));
  // For even sizes fftshift and ifftshift coincide; for size 1 both are the identity.
  const std::size_t sh = h / 2;
  const std::size_t sw = w / 2;

  ComplexTensor out(x.shape());
  std::vector<cdouble> buf(plane);
  std::vector<cdouble> col(h);
  for (std::size_t p = 0; p < planes; ++p) {
    const cdouble* src = x.data().data() + p * plane;
    for (std::size_t i = 0; i < h; ++i) {
      for (std::size_t j = 0; j < w; ++j) {
        buf[((i + sh) % h) * w + (j + sw) % w] = src[i * w + j];
      }
    }
    for (std::size_t i = 0; i < h; ++i) row_fft.run(buf.data() + i * w, inverse);
    for (std::size_t j = 0; j < w; ++j) {
      for (std::size_t i = 0; i < h; ++i) col[i] = buf[i * w + j];
      col_fft.run(col.data(), inverse);
      for (std::size_t i = 0; i < h; ++i) buf[i * w + j] = col[i];
    }
    cdouble* dst = out.data().data() + p * plane;
    for (std::size_t i = 0; i < h; ++i) {
      for (std::size_t j = 0; j < w; ++j) {
        dst[((i + sh) % h) * w + (j + sw) % w] = buf[i * w + j] * scale;
      }
    }
  }
  return out;
}

}  // namespace

ComplexTensor fft2c(const ComplexTensor& x) { return centered_transform(x, false); }

ComplexTensor ifft2c(const ComplexTensor& y) { return centered_transform(y, true); }

}  // namespace mrih
