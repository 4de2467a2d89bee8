#pragma once

#include <filesystem>
#include <string>

#include "mrih/io.hpp"

namespace mrih::pipeline {

struct StageOptions {
  bool force = false;
};

// Each stage reads upstream artifacts under cfg["out"], writes its own
// directory there (data, model, attack, eval, detect, report) via a staging
// directory that is renamed into place only on success.
void cmd_phantom_gen(const io::Json& cfg, const StageOptions& opts);
void cmd_train(const io::Json& cfg, const StageOptions& opts);
void cmd_attack(const io::Json& cfg, const StageOptions& opts);
void cmd_eval(const io::Json& cfg, const StageOptions& opts);
void cmd_detect(const io::Json& cfg, const StageOptions& opts);
/// Writes report/report.json and report/table.txt and returns the table text.
std::string cmd_report(const io::Json& cfg, const StageOptions& opts);

std::filesystem::path stage_path(const io::Json& cfg, const std::string& stage);

}  // namespace mrih::pipeline
