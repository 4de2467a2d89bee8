#pragma once

#include <filesystem>

#include "mrih/io.hpp"
#include "mrih/recon/model.hpp"

namespace mrih::recon {

inline constexpr int kCheckpointSchemaVersion = 1;

/// Writes <dir>/model.json (variant, hyperparameters, tensor manifest) and
/// <dir>/model.bin (parameters as little-endian float64, manifest order).
void save_checkpoint(const ReconModel& model, const std::filesystem::path& dir);
ReconModel load_checkpoint(const std::filesystem::path& dir);

io::Json hyper_to_json(const Hyper& hp);
Hyper hyper_from_json(const io::Json& j);

}  // namespace mrih::recon
