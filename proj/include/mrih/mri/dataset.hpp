#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mrih/mri/acquisition.hpp"
#include "mrih/numerics/tensor.hpp"

namespace mrih::mri {

/// One undersampled acquisition.
struct Sample {
  std::string id;
  ComplexTensor kspace;      // [coils, h, w], zero at unsampled columns
  SamplingMask mask;
  RealTensor ground_truth;   // [h, w]; empty when absent
  double noise_sigma = 0.0;
  std::uint64_t coil_seed = 0;

  std::size_t coils() const { return kspace.dim(0); }
  std::size_t height() const { return kspace.dim(1); }
  std::size_t width() const { return kspace.dim(2); }
  bool has_ground_truth() const { return !ground_truth.empty(); }
};

/// Checks the Sample invariants (mask width, zero unsampled columns, ground-truth shape).
void validate(const Sample& sample);

/// Coil maps + mask for a sample; maps are regenerated from the recorded coil seed.
Acquisition acquisition_of(const Sample& sample);

struct DatasetSpec {
  std::size_t count = 0;
  std::size_t height = 32;
  std::size_t width = 32;
  std::size_t coils = 4;
  double acceleration = 4.0;
  double center_fraction = 0.125;
  MaskKind mask_kind = MaskKind::equispaced;
  std::size_t n_ellipses = 6;
  double noise_sigma = 0.001;
  std::uint64_t seed = 0;
  std::uint64_t coil_seed = 0;
  std::string id_prefix = "sample";
};

/// Generates phantoms and their k-space. Sample i uses seeds derived from
/// (seed, i), so results do not depend on worker scheduling.
std::vector<Sample> generate_dataset(const DatasetSpec& spec);

// KSC v1 container: <id>.json header, <id>.kspace.bin (interleaved float64
// re/im, row-major [coils][h][w], little-endian) and, when ground truth is
// present, <id>.gt.bin (float64 [h][w]).
inline constexpr int kKscSchemaVersion = 1;

void write_ksc(const std::filesystem::path& dir, const Sample& sample);
Sample read_ksc(const std::filesystem::path& dir, const std::string& id);
/// Ids of every KSC header in `dir`, sorted.
std::vector<std::string> list_ksc(const std::filesystem::path& dir);
std::vector<Sample> read_ksc_dir(const std::filesystem::path& dir);

}  // namespace mrih::mri
