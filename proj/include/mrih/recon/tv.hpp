#pragma once

#include <vector>

#include "mrih/mri/acquisition.hpp"
#include "mrih/numerics/tensor.hpp"

namespace mrih::recon {

struct TvParams {
  double lambda = 1e-3;
  std::size_t iters = 100;
  /// Smoothing of the isotropic TV norm: sum sqrt(|Dx|^2 + eps^2).
  double eps = 1e-3;
};

struct TvResult {
  RealTensor image;               // |x| of the final iterate, [h, w]
  ComplexTensor estimate;         // final complex iterate, [h, w]
  std::vector<double> objective;  // objective at x_0 .. x_iters
  /// Objective finite and non-increasing (1e-12 slack) over every iteration.
  bool stable = true;
};

/// Smoothed-TV basis pursuit
///
///   min_x 1/2 ||z - mask .* fft2c(maps .* x)||^2 + lambda * sum sqrt(|Dh x|^2 + |Dv x|^2 + eps^2)
///
/// by gradient steps of size 1/L with L = 1 + 8 lambda / eps (the data term has
/// unit Lipschitz constant under orthonormal transforms and unit-RSS maps; the
/// smoothed TV adds at most 8 lambda / eps). Starts from the adjoint
/// reconstruction. D uses forward differences with a zero last difference.
TvResult tv_reconstruct(const ComplexTensor& z, const mri::Acquisition& acq, const TvParams& params);

/// Objective value of the problem above at x.
double tv_objective(const ComplexTensor& x, const ComplexTensor& z, const mri::Acquisition& acq,
                    const TvParams& params);

}  // namespace mrih::recon
