#include "mrih/mri/forward.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mrih/numerics/fft.hpp"
#include "mrih/numerics/rng.hpp"

namespace mrih::mri {

RealTensor gen_phantom(std::size_t h, std::size_t w, std::size_t n_ellipses, std::uint64_t seed) {
  if (n_ellipses == 0) throw ValueError("gen_phantom: n_ellipses must be >= 1");
  if (h == 0 || w == 0) throw ValueError("gen_phantom: empty image");
  Rng rng(seed);
  RealTensor img({h, w});
  const double ch = static_cast<double>(h - 1) / 2.0;
  const double cw = static_cast<double>(w - 1) / 2.0;
  for (std::size_t e = 0; e < n_ellipses; ++e) {
    const bool body = e == 0;
    const double cx = body ? rng.uniform(-0.1, 0.1) : rng.uniform(-0.5, 0.5);
    const double cy = body ? rng.uniform(-0.1, 0.1) : rng.uniform(-0.5, 0.5);
    const double ax = body ? rng.uniform(0.55, 0.85) : rng.uniform(0.1, 0.35);
    const double ay = body ? rng.uniform(0.55, 0.85) : rng.uniform(0.1, 0.35);
    const double theta = rng.uniform(0.0, std::numbers::pi);
    const double intensity = body ? rng.uniform(0.4, 0.8) : rng.uniform(-0.35, 0.5);
    const double ct = std::cos(theta);
    const double st = std::sin(theta);
    for (std::size_t i = 0; i < h; ++i) {
      for (std::size_t j = 0; j < w; ++j) {
        const double dy = (static_cast<double>(i) - ch) / (static_cast<double>(h) / 2.0) - cy;
        const double dx = (static_cast<double>(j) - cw) / (static_cast<double>(w) / 2.0) - cx;
        const double p = (dx * ct + dy * st) / ax;
        const double q = (-dx * st + dy * ct) / ay;
        if (p * p + q * q <= 1.0) img.at(i, j) += intensity;
      }
    }
  }
  for (auto& v : img.storage()) v = std::clamp(v, 0.0, 1.0);
  return img;
}

void apply_mask(ComplexTensor& kspace, const SamplingMask& mask) {
  const auto [h, w] = spatial_dims(kspace.shape());
  if (w != mask.width()) {
    throw ValueError("mask width " + std::to_string(mask.width()) + " does not match k-space " +
                     mrih::to_string(kspace.shape()));
  }
  const std::size_t planes = kspace.size() / (h * w);
  for (std::size_t p = 0; p < planes * h; ++p) {
    for (std::size_t j = 0; j < w; ++j) {
      if (!mask.pattern[j]) kspace[p * w + j] = 0.0;
    }
  }
}

ComplexTensor forward_model(const RealTensor& x, const CoilMaps& maps, const SamplingMask& mask, double noise_sigma,
                            std::uint64_t noise_seed) {
  if (!(noise_sigma >= 0.0)) throw ValueError("forward_model: noise_sigma must be >= 0");
  if (x.rank() != 2 || x.dim(0) != maps.height() || x.dim(1) != maps.width()) {
    throw ValueError("forward_model: image " + mrih::to_string(x.shape()) + " does not match coil maps " +
                     mrih::to_string(maps.maps.shape()));
  }
  const std::size_t plane = x.size();
  ComplexTensor coil_images(maps.maps.shape());
  for (std::size_t k = 0; k < coil_images.size(); ++k) coil_images[k] = maps.maps[k] * x[k % plane];
  ComplexTensor y = fft2c(coil_images);
  apply_mask(y, mask);
  if (noise_sigma > 0.0) {
    Rng rng(noise_seed);
    const std::size_t w = x.dim(1);
    for (std::size_t k = 0; k < y.size(); ++k) {
      if (!mask.pattern[k % w]) continue;
      const double re = rng.normal();
      const double im = rng.normal();
      y[k] += cdouble(noise_sigma * re, noise_sigma * im);
    }
  }
  return y;
}

RealTensor rss_combine(const ComplexTensor& coil_images) {
  if (coil_images.rank() != 3) throw ValueError("rss_combine: expected [C, H, W]");
  const std::size_t plane = coil_images.dim(1) * coil_images.dim(2);
  RealTensor out({coil_images.dim(1), coil_images.dim(2)});
  for (std::size_t c = 0; c < coil_images.dim(0); ++c) {
    for (std::size_t p = 0; p < plane; ++p) out[p] += std::norm(coil_images[c * plane + p]);
  }
  for (auto& v : out.storage()) v = std::sqrt(v);
  return out;
}

RealTensor zero_fill(const ComplexTensor& kspace) { return rss_combine(ifft2c(kspace)); }

}  // namespace mrih::mri
