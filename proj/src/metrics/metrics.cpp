#include "mrih/metrics/metrics.hpp"

#include <cmath>
#include <limits>

namespace mrih::metrics {

namespace {

void check_pair(const RealTensor& a, const RealTensor& b, const char* op) {
  if (a.empty() || b.empty()) throw ValueError(std::string(op) + ": empty image");
  require_same_shape(a.shape(), b.shape(), op);
}

// Summed-area table with a zero first row and column.
std::vector<double> integral(const RealTensor& x, std::size_t h, std::size_t w) {
  std::vector<double> s((h + 1) * (w + 1), 0.0);
  for (std::size_t i = 0; i < h; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < w; ++j) {
      row += x[i * w + j];
      s[(i + 1) * (w + 1) + j + 1] = s[i * (w + 1) + j + 1] + row;
    }
  }
  return s;
}

double box_sum(const std::vector<double>& s, std::size_t w, std::size_t i, std::size_t j, std::size_t k) {
  const std::size_t stride = w + 1;
  return s[(i + k) * stride + j + k] - s[i * stride + j + k] - s[(i + k) * stride + j] + s[i * stride + j];
}

}  // namespace

double psnr(const RealTensor& a, const RealTensor& b) {
  check_pair(a, b, "psnr");
  double mse = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) mse += (a[i] - b[i]) * (a[i] - b[i]);
  mse /= static_cast<double>(a.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  const double peak = max_value(a);
  return 10.0 * std::log10(peak * peak / mse);
}

double nrmse(const RealTensor& a, const RealTensor& b) {
  check_pair(a, b, "nrmse");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    den += a[i] * a[i];
  }
  if (den == 0.0) throw ValueError("nrmse: reference image is zero");
  return std::sqrt(num / den);
}

SsimValue ssim_detail(const RealTensor& a, const RealTensor& b) {
  check_pair(a, b, "ssim");
  if (a.rank() != 2) throw ValueError("ssim: expected [h, w] images");
  const std::size_t h = a.dim(0), w = a.dim(1), k = kSsimWindow;
  if (h < k || w < k) throw ValueError("ssim: images must be at least 7x7");

  double range = max_value(a);
  if (!(range > 0.0)) range = std::max(max_abs(a), max_abs(b));
  if (range == 0.0) return {1.0, true};
  const double c1 = (0.01 * range) * (0.01 * range);
  const double c2 = (0.03 * range) * (0.03 * range);

  RealTensor aa(a.shape()), bb(a.shape()), ab(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) {
    aa[i] = a[i] * a[i];
    bb[i] = b[i] * b[i];
    ab[i] = a[i] * b[i];
  }
  const auto sa = integral(a, h, w), sb = integral(b, h, w);
  const auto saa = integral(aa, h, w), sbb = integral(bb, h, w), sab = integral(ab, h, w);
  const double n = static_cast<double>(k * k);

  double total = 0.0;
  for (std::size_t i = 0; i + k <= h; ++i) {
    for (std::size_t j = 0; j + k <= w; ++j) {
      const double xa = box_sum(sa, w, i, j, k), xb = box_sum(sb, w, i, j, k);
      const double mu_a = xa / n, mu_b = xb / n;
      const double var_a = (box_sum(saa, w, i, j, k) - xa * mu_a) / (n - 1.0);
      const double var_b = (box_sum(sbb, w, i, j, k) - xb * mu_b) / (n - 1.0);
      const double cov = (box_sum(sab, w, i, j, k) - xa * mu_b) / (n - 1.0);
      total += ((2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)) /
               ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2));
    }
  }
  return {total / static_cast<double>((h - k + 1) * (w - k + 1)), false};
}

Triple compare(const RealTensor& a, const RealTensor& b) { return {psnr(a, b), nrmse(a, b), ssim(a, b)}; }

}  // namespace mrih::metrics
