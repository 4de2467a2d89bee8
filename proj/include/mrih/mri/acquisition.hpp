#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mrih/numerics/tensor.hpp"

namespace mrih::mri {

enum class MaskKind { equispaced, random };

MaskKind parse_mask_kind(const std::string& name);
std::string to_string(MaskKind kind);

/// Cartesian column mask: column j of k-space is acquired in every row iff pattern[j] == 1.
struct SamplingMask {
  std::vector<std::uint8_t> pattern;
  double acceleration = 1.0;
  double center_fraction = 0.0;

  std::size_t width() const { return pattern.size(); }
  std::size_t sampled() const;
  /// Expanded 0/1 image of shape [h, width].
  RealTensor image(std::size_t h) const;
};

/// Number of fully-sampled low-frequency columns: ceil(center_fraction * width).
std::size_t center_columns(std::size_t width, double center_fraction);

/// fastMRI-style mask: the centred ACS band plus round(width / R) - center extra
/// columns, spread evenly (equispaced) or drawn without replacement (random)
/// from the remaining columns. Deterministic per seed.
///
/// Throws ValueError for R < 1, center_fraction outside (0, 1), or when the ACS
/// band alone exceeds width / R by more than one column.
SamplingMask make_mask(std::size_t width, double acceleration, double center_fraction, MaskKind kind,
                       std::uint64_t seed);

/// All columns sampled.
SamplingMask full_mask(std::size_t width);

/// Per-coil complex sensitivities, normalised to unit root-sum-of-squares per pixel.
struct CoilMaps {
  ComplexTensor maps;  // [coils, h, w]
  double smoothness = 0.0;

  std::size_t coils() const { return maps.dim(0); }
  std::size_t height() const { return maps.dim(1); }
  std::size_t width() const { return maps.dim(2); }
};

/// Smooth Gaussian-bump profiles placed around the field of view with linear
/// phase ramps (coil 0 carries no phase), normalised so RSS == 1. A single
/// coil yields the constant map 1.
CoilMaps make_coil_maps(std::size_t h, std::size_t w, std::size_t n_coils, std::uint64_t seed);

/// Everything besides the k-space needed to interpret one acquisition.
struct Acquisition {
  CoilMaps maps;
  SamplingMask mask;
};

}  // namespace mrih::mri
