#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace mrih::io {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

/// Raw little-endian float64 blobs.
void write_f64le(const fs::path& path, std::span<const double> values);
std::vector<double> read_f64le(const fs::path& path, std::size_t expected_count);

Json read_json(const fs::path& path);
/// Writes `j` with two-space indentation and a trailing newline.
void write_json(const fs::path& path, const Json& j);
void write_text(const fs::path& path, std::string_view text);

/// 64-bit FNV-1a, rendered as 16 hex digits.
std::string fnv1a_hex(std::string_view bytes);

/// Fails with DataError if `path` is missing, naming the stage that produces it.
void require_exists(const fs::path& path, std::string_view producing_stage);

}  // namespace mrih::io
