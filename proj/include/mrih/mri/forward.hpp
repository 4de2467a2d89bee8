#pragma once

#include <cstdint>

#include "mrih/mri/acquisition.hpp"
#include "mrih/numerics/tensor.hpp"

namespace mrih::mri {

/// Sum of `n_ellipses` random rotated ellipses, clipped to [0, 1]. The first
/// ellipse is a large positive "body"; later ones are smaller and may be
/// negative. Piecewise constant, deterministic per seed.
RealTensor gen_phantom(std::size_t h, std::size_t w, std::size_t n_ellipses, std::uint64_t seed);

/// y = mask .* fft2c(maps .* x) + e, with e complex Gaussian of per-component
/// standard deviation noise_sigma drawn only on sampled entries. Unsampled
/// entries are exactly zero. Returns [coils, h, w].
ComplexTensor forward_model(const RealTensor& x, const CoilMaps& maps, const SamplingMask& mask, double noise_sigma,
                            std::uint64_t noise_seed);

/// Root-sum-of-squares over axis 0 of [C, H, W] coil images.
RealTensor rss_combine(const ComplexTensor& coil_images);

/// Per-coil ifft2c followed by RSS; a single coil reduces to the magnitude.
RealTensor zero_fill(const ComplexTensor& kspace);

/// Multiplies a [C, H, W] k-space by a column mask in place.
void apply_mask(ComplexTensor& kspace, const SamplingMask& mask);

}  // namespace mrih::mri
