#include "mrih/mri/acquisition.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "mrih/numerics/rng.hpp"

namespace mrih::mri {

MaskKind parse_mask_kind(const std::string& name) {
  if (name == "equispaced") return MaskKind::equispaced;
  if (name == "random") return MaskKind::random;
  throw ValueError("unknown mask kind '" + name + "' (expected equispaced|random)");
}

std::string to_string(MaskKind kind) { return kind == MaskKind::equispaced ? "equispaced" : "random"; }

std::size_t SamplingMask::sampled() const {
  return static_cast<std::size_t>(std::count(pattern.begin(), pattern.end(), std::uint8_t{1}));
}

RealTensor SamplingMask::image(std::size_t h) const {
  RealTensor out({h, width()});
  for (std::size_t i = 0; i < h; ++i) {
    for (std::size_t j = 0; j < width(); ++j) out.at(i, j) = pattern[j];
  }
  return out;
}

std::size_t center_columns(std::size_t width, double center_fraction) {
  return static_cast<std::size_t>(std::ceil(center_fraction * static_cast<double>(width) - 1e-12));
}

SamplingMask make_mask(std::size_t width, double acceleration, double center_fraction, MaskKind kind,
                       std::uint64_t seed) {
  if (width == 0) throw ValueError("make_mask: width must be positive");
  if (!(acceleration >= 1.0)) throw ValueError("make_mask: acceleration must be >= 1");
  if (!(center_fraction > 0.0 && center_fraction < 1.0)) {
    throw ValueError("make_mask: center_fraction must lie in (0, 1)");
  }
  SamplingMask mask;
  mask.acceleration = acceleration;
  mask.center_fraction = center_fraction;
  mask.pattern.assign(width, 0);
  if (acceleration == 1.0) {
    mask.pattern.assign(width, 1);
    return mask;
  }

  const auto target = static_cast<std::size_t>(std::llround(static_cast<double>(width) / acceleration));
  const std::size_t n_center = std::min(width, center_columns(width, center_fraction));
  if (n_center > target + 1) {
    throw ValueError("make_mask: center band of " + std::to_string(n_center) + " columns exceeds the " +
                     std::to_string(target) + " columns allowed by acceleration " + std::to_string(acceleration));
  }
  const std::size_t start = (width - n_center + 1) / 2;
  for (std::size_t j = start; j < start + n_center; ++j) mask.pattern[j] = 1;

  std::vector<std::size_t> outer;
  for (std::size_t j = 0; j < width; ++j) {
    if (!mask.pattern[j]) outer.push_back(j);
  }
  const std::size_t extra = target > n_center ? std::min(target - n_center, outer.size()) : 0;
  if (extra == 0) return mask;

  Rng rng(seed);
  if (kind == MaskKind::equispaced) {
    const double spacing = static_cast<double>(outer.size()) / static_cast<double>(extra);
    const double offset = rng.uniform() * spacing;
    for (std::size_t k = 0; k < extra; ++k) {
      const auto idx = static_cast<std::size_t>(offset + spacing * static_cast<double>(k));
      mask.pattern[outer[std::min(idx, outer.size() - 1)]] = 1;
    }
  } else {
    // Partial Fisher-Yates.
    for (std::size_t k = 0; k < extra; ++k) {
      const std::size_t pick = k + rng.below(outer.size() - k);
      std::swap(outer[k], outer[pick]);
      mask.pattern[outer[k]] = 1;
    }
  }
  return mask;
}

SamplingMask full_mask(std::size_t width) {
  SamplingMask mask;
  mask.pattern.assign(width, 1);
  mask.acceleration = 1.0;
  mask.center_fraction = 1.0;
  return mask;
}

CoilMaps make_coil_maps(std::size_t h, std::size_t w, std::size_t n_coils, std::uint64_t seed) {
  if (n_coils == 0) throw ValueError("make_coil_maps: need at least one coil");
  Rng rng(seed);
  const double width = rng.uniform(0.6, 0.9);
  const double rotation = rng.uniform(0.0, 2.0 * std::numbers::pi);
  CoilMaps out;
  out.smoothness = width;
  out.maps = ComplexTensor({n_coils, h, w});
  const double ch = static_cast<double>(h - 1) / 2.0;
  const double cw = static_cast<double>(w - 1) / 2.0;
  for (std::size_t c = 0; c < n_coils; ++c) {
    const double angle = rotation + 2.0 * std::numbers::pi * static_cast<double>(c) / static_cast<double>(n_coils);
    const double px = std::cos(angle);
    const double py = std::sin(angle);
    for (std::size_t i = 0; i < h; ++i) {
      for (std::size_t j = 0; j < w; ++j) {
        const double v = (static_cast<double>(i) - ch) / (static_cast<double>(h) / 2.0);
        const double u = (static_cast<double>(j) - cw) / (static_cast<double>(w) / 2.0);
        const double d2 = (u - px) * (u - px) + (v - py) * (v - py);
        const double mag = 0.05 + std::exp(-d2 / (2.0 * width * width));
        const double phase = c == 0 ? 0.0 : 0.8 * (u * px + v * py) + angle;
        out.maps.at(c, i, j) = std::polar(mag, phase);
      }
    }
  }
  for (std::size_t i = 0; i < h; ++i) {
    for (std::size_t j = 0; j < w; ++j) {
      double rss = 0.0;
      for (std::size_t c = 0; c < n_coils; ++c) rss += std::norm(out.maps.at(c, i, j));
      rss = std::sqrt(rss);
      for (std::size_t c = 0; c < n_coils; ++c) out.maps.at(c, i, j) /= rss;
    }
  }
  return out;
}

}  // namespace mrih::mri
