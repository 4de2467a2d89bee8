#pragma once

#include "mrih/numerics/tensor.hpp"

namespace mrih {

/// Centered, orthonormal 2-D DFT over the last two axes, applied independently
/// for every leading index:
///
///   fft2c(x) = fftshift(fft2(ifftshift(x))) / sqrt(H * W)
///
/// so the DC coefficient sits at index (H/2, W/2). Both spatial sizes must be
/// powers of two; anything else throws ValueError.
ComplexTensor fft2c(const ComplexTensor& x);

/// Exact inverse (and adjoint) of fft2c.
ComplexTensor ifft2c(const ComplexTensor& y);

bool is_power_of_two(std::size_t n);

}  // namespace mrih
