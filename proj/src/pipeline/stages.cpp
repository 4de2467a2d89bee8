#include "mrih/pipeline/stages.hpp"

#include <cmath>
#include <cstdio>
#include <optional>

#include "mrih/attack/attack.hpp"
#include "mrih/detect/detect.hpp"
#include "mrih/metrics/report.hpp"
#include "mrih/numerics/parallel.hpp"
#include "mrih/numerics/rng.hpp"
#include "mrih/pipeline/config.hpp"
#include "mrih/recon/checkpoint.hpp"

namespace mrih::pipeline {

namespace fs = std::filesystem;
using io::Json;

namespace {

// Output directory that only appears under its final name once complete.
class StageOutput {
 public:
  StageOutput(fs::path final_dir, bool force) : final_(std::move(final_dir)), tmp_(final_) {
    tmp_ += ".partial";
    if (fs::exists(final_) && !force) {
      throw ValueError("output " + final_.string() + " already exists; pass --force to overwrite");
    }
    fs::remove_all(tmp_);
    fs::create_directories(tmp_);
  }
  StageOutput(const StageOutput&) = delete;
  StageOutput& operator=(const StageOutput&) = delete;
  ~StageOutput() {
    if (!committed_) {
      std::error_code ec;
      fs::remove_all(tmp_, ec);
    }
  }

  const fs::path& dir() const { return tmp_; }

  void commit() {
    fs::remove_all(final_);
    fs::rename(tmp_, final_);
    committed_ = true;
  }

 private:
  fs::path final_;
  fs::path tmp_;
  bool committed_ = false;
};

Json header(const Json& cfg, const std::string& stage) {
  return {{"schema_version", kReportSchemaVersion},
          {"stage", stage},
          {"config_hash", config_hash(cfg)},
          {"seeds", to_json(seeds_of(cfg))}};
}

void echo_config(const Json& cfg, const fs::path& dir) { io::write_json(dir / "config.resolved.json", cfg); }

void log(const char* stage, const std::string& msg) { std::fprintf(stderr, "[%s] %s\n", stage, msg.c_str()); }

std::vector<mri::Sample> load_split(const Json& cfg, const char* split) {
  const fs::path dir = stage_path(cfg, "data") / split;
  io::require_exists(dir, "phantom-gen");
  auto samples = mri::read_ksc_dir(dir);
  if (samples.empty()) throw DataError("no samples in " + dir.string() + "; run the 'phantom-gen' stage first");
  return samples;
}

recon::ReconModel load_model(const Json& cfg) {
  return recon::load_checkpoint(stage_path(cfg, "model"));
}

Json attack_echo(const attack::AttackSpec& a) {
  Json shape = {{"kind", attack::to_string(a.shape.kind)},
                {"length", a.shape.length},
                {"thickness", a.shape.thickness},
                {"vertical", a.shape.vertical},
                {"height", a.shape.height},
                {"width", a.shape.width},
                {"row", a.shape.row ? Json(*a.shape.row) : Json(nullptr)},
                {"col", a.shape.col ? Json(*a.shape.col) : Json(nullptr)}};
  return {{"epsilon_mode", attack::to_string(a.budget)},
          {"epsilon", a.epsilon},
          {"alpha", a.alpha},
          {"iters", a.iters},
          {"clip", attack::to_string(a.clip)},
          {"target", std::move(shape)},
          {"dilation", a.mask_dilation},
          {"seed", a.seed}};
}

double linf(const RealTensor& t) { return max_abs(t); }

}  // namespace

fs::path stage_path(const Json& cfg, const std::string& stage) { return fs::path(cfg.at("out").get<std::string>()) / stage; }

void cmd_phantom_gen(const Json& cfg, const StageOptions& opts) {
  const auto test_spec = dataset_spec(cfg, false);
  const auto train_spec = dataset_spec(cfg, true);
  StageOutput out(stage_path(cfg, "data"), opts.force);
  const auto test = mri::generate_dataset(test_spec);
  for (const auto& s : test) mri::write_ksc(out.dir() / "test", s);
  if (train_spec.count > 0) {
    const auto train = mri::generate_dataset(train_spec);
    for (const auto& s : train) mri::write_ksc(out.dir() / "train", s);
  }
  Json report = header(cfg, "phantom-gen");
  report["test_count"] = test_spec.count;
  report["train_count"] = train_spec.count;
  report["shape"] = {test_spec.coils, test_spec.height, test_spec.width};
  report["acceleration"] = test_spec.acceleration;
  report["center_fraction"] = test_spec.center_fraction;
  report["mask"] = mri::to_string(test_spec.mask_kind);
  report["noise_sigma"] = test_spec.noise_sigma;
  io::write_json(out.dir() / "dataset_report.json", report);
  echo_config(cfg, out.dir());
  out.commit();
  log("phantom-gen", "wrote " + std::to_string(test_spec.count) + " test and " + std::to_string(train_spec.count) +
                         " train samples to " + stage_path(cfg, "data").string());
}

void cmd_train(const Json& cfg, const StageOptions& opts) {
  recon::ReconModel model = initial_model(cfg);
  const auto tc = train_config(cfg);
  std::optional<std::vector<mri::Sample>> data;
  if (model.learned()) data = load_split(cfg, "train");
  StageOutput out(stage_path(cfg, "model"), opts.force);

  Json report = header(cfg, "train");
  report["variant"] = recon::to_string(model.variant());
  report["hyperparameters"] = recon::hyper_to_json(model.hyper());
  if (data) {
    log("train", "training " + recon::to_string(model.variant()) + " on " + std::to_string(data->size()) +
                     " samples for " + std::to_string(tc.epochs) + " epochs");
    const auto result = recon::train(model, *data, tc);
    report["train_config"] = {{"epochs", tc.epochs},     {"batch_size", tc.batch_size},
                              {"learning_rate", tc.learning_rate}, {"momentum", tc.momentum},
                              {"loss", recon::to_string(tc.loss)}, {"seed", tc.seed}};
    report["samples"] = data->size();
    report["steps"] = result.step_loss.size();
    report["epoch_loss"] = result.epoch_loss;
  } else {
    report["train_config"] = nullptr;
  }
  report["parameter_count"] = model.parameter_count();
  recon::save_checkpoint(model, out.dir());
  io::write_json(out.dir() / "train_report.json", report);
  echo_config(cfg, out.dir());
  out.commit();
  log("train", "saved " + recon::to_string(model.variant()) + " to " + stage_path(cfg, "model").string());
}

void cmd_attack(const Json& cfg, const StageOptions& opts) {
  const attack::AttackSpec spec = attack_spec(cfg);
  const auto data = load_split(cfg, "test");
  const auto model = load_model(cfg);
  if (!model.differentiable()) {
    throw ValueError("attack: " + recon::to_string(model.variant()) + " is not differentiable; train a learned model");
  }
  StageOutput out(stage_path(cfg, "attack"), opts.force);
  log("attack", "attacking " + std::to_string(data.size()) + " samples, " + std::to_string(spec.iters) +
                    " iterations each");

  fs::create_directories(out.dir() / "records");
  fs::create_directories(out.dir() / "delta");
  std::vector<attack::AttackResult> results(data.size());
  parallel_for(data.size(), [&](std::size_t i) {
    attack::AttackSpec s = spec;
    s.seed = derive_seed(spec.seed, i);
    results[i] = attack::masked_iterative_fgsm(model, data[i].kspace, mri::acquisition_of(data[i]), s);
  });

  Json summary = Json::array();
  std::size_t successes = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& s = data[i];
    const auto& r = results[i];
    const double baseline = r.target_term_clean;
    const bool success = r.best_loss <= 0.1 * baseline;
    successes += success ? 1 : 0;
    Json rec = header(cfg, "attack");
    rec["id"] = s.id;
    rec["seed"] = derive_seed(spec.seed, i);
    rec["epsilon_abs"] = r.epsilon_abs;
    rec["alpha_abs"] = r.alpha_abs;
    rec["clip_lo"] = r.clip_lo;
    rec["clip_hi"] = r.clip_hi;
    rec["best_loss"] = r.best_loss;
    rec["best_iter"] = r.best_iter;
    rec["baseline_loss"] = baseline;
    rec["target_term_best"] = r.target_term_best;
    rec["degenerate_target"] = r.target.degenerate;
    rec["delta_linf"] = linf(r.delta_star);
    rec["loss_trace"] = r.loss_trace;
    io::write_json(out.dir() / "records" / (s.id + ".json"), rec);
    io::write_f64le(out.dir() / "delta" / (s.id + ".delta.bin"), r.delta_star.data());
    mri::Sample p = s;
    p.kspace = r.perturbed_kspace;
    mri::write_ksc(out.dir() / "kspace", p);
    summary.push_back({{"id", s.id},
                       {"best_loss", r.best_loss},
                       {"baseline_loss", baseline},
                       {"success", success},
                       {"epsilon_abs", r.epsilon_abs},
                       {"delta_linf", linf(r.delta_star)},
                       {"degenerate_target", r.target.degenerate}});
  }
  Json report = header(cfg, "attack");
  report["model"] = recon::to_string(model.variant());
  report["attack"] = attack_echo(spec);
  report["samples"] = data.size();
  report["success_fraction"] = static_cast<double>(successes) / static_cast<double>(data.size());
  report["per_sample"] = std::move(summary);
  io::write_json(out.dir() / "attack_report.json", report);
  echo_config(cfg, out.dir());
  out.commit();
  log("attack", std::to_string(successes) + "/" + std::to_string(data.size()) +
                    " samples reached 10% of the unperturbed loss");
}

void cmd_eval(const Json& cfg, const StageOptions& opts) {
  const auto data = load_split(cfg, "test");
  const auto model = load_model(cfg);
  const fs::path attack_dir = stage_path(cfg, "attack");
  io::require_exists(attack_dir / "attack_report.json", "attack");
  const Json attack_report = io::read_json(attack_dir / "attack_report.json");
  std::vector<metrics::MetricReport> reports(data.size());
  parallel_for(data.size(), [&](std::size_t i) {
    const auto& s = data[i];
    const fs::path rec_path = attack_dir / "records" / (s.id + ".json");
    const fs::path delta_path = attack_dir / "delta" / (s.id + ".delta.bin");
    if (!fs::exists(rec_path) || !fs::exists(delta_path)) {
      throw DataError("missing perturbation for " + s.id + "; run the 'attack' stage first");
    }
    const Json rec = io::read_json(rec_path);
    const RealTensor delta(s.kspace.shape(), io::read_f64le(delta_path, s.kspace.size()));
    reports[i] = metrics::report_pair(s.id, s.kspace, delta, rec.at("clip_lo").get<double>(),
                                      rec.at("clip_hi").get<double>(), model, mri::acquisition_of(s),
                                      rec.at("best_loss").get<double>());
  });
  const std::string dataset = cfg.at("metrics").at("dataset_name").get<std::string>();
  const auto rows = metrics::aggregate(reports, recon::to_string(model.variant()), dataset);

  StageOutput out(stage_path(cfg, "eval"), opts.force);
  io::write_text(out.dir() / "metrics.jsonl", metrics::to_jsonl(reports));
  io::write_text(out.dir() / "summary.csv", metrics::to_csv(rows));
  Json report = header(cfg, "eval");
  report["model"] = recon::to_string(model.variant());
  report["dataset"] = dataset;
  report["attack"] = attack_report.at("attack");
  report["ssim_window"] = metrics::kSsimWindow;
  Json summary = Json::array();
  for (const auto& r : rows) {
    summary.push_back({{"pair", r.pair},
                       {"metric", r.metric},
                       {"mean", metrics::number_or_null(r.summary.mean)},
                       {"std", metrics::number_or_null(r.summary.std)},
                       {"finite", r.summary.count},
                       {"infinite", r.summary.infinite}});
  }
  report["summary"] = std::move(summary);
  io::write_json(out.dir() / "eval_report.json", report);
  echo_config(cfg, out.dir());
  out.commit();
  log("eval", "wrote metrics for " + std::to_string(reports.size()) + " samples");
}

void cmd_detect(const Json& cfg, const StageOptions& opts) {
  const auto data = load_split(cfg, "test");
  const auto model = load_model(cfg);
  const fs::path kdir = stage_path(cfg, "attack") / "kspace";
  io::require_exists(kdir, "attack");
  std::vector<ComplexTensor> perturbed;
  for (const auto& s : data) {
    if (!fs::exists(kdir / (s.id + ".json"))) {
      throw DataError("missing perturbed k-space for " + s.id + "; run the 'attack' stage first");
    }
    perturbed.push_back(mri::read_ksc(kdir, s.id).kspace);
  }
  const auto tv = detect_tv(cfg);
  const auto bins = cfg.at("detect").at("bins").get<std::size_t>();
  const auto run = detect::detection_records(data, perturbed, model, tv);

  StageOutput out(stage_path(cfg, "detect"), opts.force);
  std::string lines;
  for (const auto& r : run.records) lines += detect::to_json(r).dump() + "\n";
  io::write_text(out.dir() / "records.jsonl", lines);
  Json report = header(cfg, "detect");
  report["model"] = recon::to_string(model.variant());
  report["reference"] = "tv";
  report["tv"] = {{"lambda", tv.lambda}, {"iters", tv.iters}, {"eps", tv.eps}};
  Json skipped = Json::array();
  for (const auto& s : run.skipped) skipped.push_back({{"id", s.id}, {"reason", s.reason}});
  report["skipped"] = std::move(skipped);
  Json evals = Json::array();
  if (!run.records.empty()) {
    for (const char* metric : {"psnr", "nrmse", "ssim"}) {
      const auto e = detect::threshold_detector_eval(run.records, metric, bins);
      evals.push_back(detect::to_json(e));
      io::write_text(out.dir() / (std::string("hist_") + metric + ".csv"), detect::histogram_csv(e.hist));
    }
  }
  report["detectors"] = std::move(evals);
  io::write_json(out.dir() / "detector.json", report);
  echo_config(cfg, out.dir());
  out.commit();
  log("detect", "wrote " + std::to_string(run.records.size()) + " records (" + std::to_string(run.skipped.size()) +
                    " samples skipped)");
}

std::string cmd_report(const Json& cfg, const StageOptions& opts) {
  const fs::path eval_path = stage_path(cfg, "eval") / "eval_report.json";
  const fs::path detect_path = stage_path(cfg, "detect") / "detector.json";
  io::require_exists(eval_path, "eval");
  io::require_exists(detect_path, "detect");
  const Json ev = io::read_json(eval_path);
  const Json det = io::read_json(detect_path);

  std::string table = "model " + ev.at("model").get<std::string>() + ", dataset " +
                      ev.at("dataset").get<std::string>() + ", config " + config_hash(cfg) + "\n";
  table += "pair   metric      mean        std\n";
  char line[160];
  for (const auto& row : ev.at("summary")) {
    auto num = [](const Json& v) { return v.is_null() ? std::string("inf") : std::to_string(v.get<double>()); };
    std::snprintf(line, sizeof line, "%-6s %-6s %11s %10s\n", row.at("pair").get<std::string>().c_str(),
                  row.at("metric").get<std::string>().c_str(), num(row.at("mean")).c_str(),
                  num(row.at("std")).c_str());
    table += line;
  }
  table += "detector  direction   auc     overlap\n";
  for (const auto& d : det.at("detectors")) {
    std::snprintf(line, sizeof line, "%-9s %-9s %7.4f %9.4f\n", d.at("metric").get<std::string>().c_str(),
                  d.at("direction").get<std::string>().c_str(), d.at("auc").get<double>(),
                  d.at("overlap").get<double>());
    table += line;
  }

  StageOutput out(stage_path(cfg, "report"), opts.force);
  Json report = header(cfg, "report");
  report["model"] = ev.at("model");
  report["dataset"] = ev.at("dataset");
  report["attack"] = ev.at("attack");
  report["metrics"] = ev.at("summary");
  report["detection"] = det.at("detectors");
  report["detection_tv"] = det.at("tv");
  io::write_json(out.dir() / "report.json", report);
  io::write_text(out.dir() / "table.txt", table);
  echo_config(cfg, out.dir());
  out.commit();
  return table;
}

}  // namespace mrih::pipeline
