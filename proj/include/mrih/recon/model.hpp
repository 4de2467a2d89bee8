#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mrih/mri/acquisition.hpp"
#include "mrih/numerics/tape.hpp"
#include "mrih/numerics/tensor.hpp"
#include "mrih/recon/tv.hpp"

namespace mrih::recon {

enum class Variant { zero_fill, tv, unet_lite, varnet_lite };

std::string to_string(Variant v);
Variant parse_variant(const std::string& name);

struct Hyper {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t coils = 0;
  std::size_t channels = 8;  // learned variants: first-scale width
  bool residual = true;      // unet_lite: add zero_fill to the CNN output
  std::size_t cascades = 4;  // varnet_lite
  TvParams tv;               // tv
};

struct NamedTensor {
  std::string name;
  RealTensor value;
};

/// Reconstruction map from multi-coil k-space to a real [h, w] image.
///
/// Learned variants run one architecture definition through two executors:
/// the tape (differentiable) and direct kernels (inference). Both use the same
/// arithmetic, so they agree to rounding.
class ReconModel {
 public:
  static ReconModel zero_fill(std::size_t h, std::size_t w, std::size_t coils);
  static ReconModel tv(std::size_t h, std::size_t w, std::size_t coils, const TvParams& params);
  /// He-initialized weights; with `residual` the final layer starts at zero so F = zero_fill.
  static ReconModel unet_lite(std::size_t h, std::size_t w, std::size_t coils, bool residual, std::uint64_t seed);
  /// Final CNN layer of each cascade starts at zero and every eta at 1, so F = zero_fill.
  static ReconModel varnet_lite(std::size_t h, std::size_t w, std::size_t coils, std::size_t cascades,
                                std::uint64_t seed);
  /// Rebuilds a model from stored parts; names and shapes must match the variant's layout.
  static ReconModel from_parts(Variant variant, const Hyper& hyper, std::vector<NamedTensor> params);

  Variant variant() const { return variant_; }
  const Hyper& hyper() const { return hyper_; }
  bool learned() const { return variant_ == Variant::unet_lite || variant_ == Variant::varnet_lite; }
  /// TV is iterative and has no taped form.
  bool differentiable() const { return variant_ != Variant::tv; }

  std::vector<NamedTensor>& parameters() { return params_; }
  const std::vector<NamedTensor>& parameters() const { return params_; }
  RealTensor& parameter(const std::string& name);
  std::size_t parameter_count() const;

  /// Inference path. Thread-safe.
  RealTensor apply(const ComplexTensor& z, const mri::Acquisition& acq) const;

  /// Registers the parameters on `tape`, as leaves when `trainable`, else as constants.
  std::vector<ad::Var> bind(ad::Tape& tape, bool trainable) const;
  /// Differentiable path. `z` is a complex [coils, h, w] node; `params` comes from bind().
  ad::Var apply(ad::Tape& tape, ad::Var z, const mri::Acquisition& acq, std::span<const ad::Var> params) const;

 private:
  ReconModel(Variant variant, const Hyper& hyper) : variant_(variant), hyper_(hyper) {}
  void check_input(const Shape& z, const mri::Acquisition& acq) const;

  Variant variant_;
  Hyper hyper_;
  std::vector<NamedTensor> params_;
};

/// Parameter names and shapes for a variant, in storage order.
std::vector<std::pair<std::string, Shape>> parameter_layout(Variant variant, const Hyper& hyper);

}  // namespace mrih::recon
