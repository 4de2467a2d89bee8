#pragma once

#include "mrih/numerics/tensor.hpp"

namespace mrih::metrics {

inline constexpr std::size_t kSsimWindow = 7;

/// 10 log10(max(a)^2 / mse(a, b)); +inf when the images are identical.
double psnr(const RealTensor& a, const RealTensor& b);
/// ||a - b|| / ||a||.
double nrmse(const RealTensor& a, const RealTensor& b);

struct SsimValue {
  double value = 1.0;
  /// Both images are identically zero; the value is defined as 1.
  bool degenerate = false;
};

/// Mean SSIM over every valid 7x7 window (uniform weights, unbiased
/// variances), C1 = (0.01 L)^2, C2 = (0.03 L)^2 with L = max(a). If max(a)
/// is not positive, L falls back to max(|a|, |b|).
SsimValue ssim_detail(const RealTensor& a, const RealTensor& b);
inline double ssim(const RealTensor& a, const RealTensor& b) { return ssim_detail(a, b).value; }

struct Triple {
  double psnr = 0.0;
  double nrmse = 0.0;
  double ssim = 0.0;
};

/// All three metrics with `a` as the reference.
Triple compare(const RealTensor& a, const RealTensor& b);

}  // namespace mrih::metrics
