#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "mrih/attack/attack.hpp"
#include "mrih/io.hpp"
#include "mrih/mri/dataset.hpp"
#include "mrih/recon/model.hpp"
#include "mrih/recon/train.hpp"
#include "mrih/recon/tv.hpp"

namespace mrih::pipeline {

inline constexpr int kReportSchemaVersion = 1;

/// Every accepted key with its default; null marks "derived at run time".
io::Json default_config();

/// Overlays `patch` onto `base`. Keys absent from `base` are rejected.
io::Json merge_config(const io::Json& base, const io::Json& patch);

/// Defaults overlaid with the file (if any) and then with `overrides`, validated.
io::Json resolve_config(const std::filesystem::path& file, const io::Json& overrides);

/// Type and range checks for every section; throws ValueError naming the key.
void validate_config(const io::Json& cfg);

/// FNV-1a of the resolved config without the output directory.
std::string config_hash(const io::Json& cfg);

struct Seeds {
  std::uint64_t root = 0;
  std::uint64_t train_data = 0;
  std::uint64_t test_data = 0;
  std::uint64_t coils = 0;
  std::uint64_t model_init = 0;
  std::uint64_t shuffle = 0;
  std::uint64_t attack = 0;
};

Seeds seeds_of(const io::Json& cfg);
io::Json to_json(const Seeds& s);

mri::DatasetSpec dataset_spec(const io::Json& cfg, bool train_split);
recon::ReconModel initial_model(const io::Json& cfg);
recon::TrainConfig train_config(const io::Json& cfg);
attack::AttackSpec attack_spec(const io::Json& cfg);
recon::TvParams detect_tv(const io::Json& cfg);

}  // namespace mrih::pipeline
