#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "mrih/error.hpp"
#include "mrih/pipeline/config.hpp"
#include "mrih/pipeline/stages.hpp"

namespace {

using mrih::io::Json;

struct Flags {
  std::string config;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  bool force = false;

  std::optional<std::size_t> count, train_count, size, coils;
  std::optional<double> acceleration, center_fraction, noise;
  std::optional<std::string> mask;

  std::optional<std::string> variant, loss;
  std::optional<std::size_t> epochs, batch_size, cascades;
  std::optional<double> lr;

  std::optional<double> epsilon, epsilon_abs, alpha;
  std::optional<std::size_t> iters;
  std::optional<std::string> clip, shape;

  std::optional<double> tv_lambda;
  std::optional<std::size_t> tv_iters, bins;
};

void add_flags(CLI::App* sub, Flags& f) {
  sub->add_option("-c,--config", f.config, "JSON config file")->check(CLI::ExistingFile);
  sub->add_option("-o,--out", f.out, "output directory");
  sub->add_option("--seed", f.seed, "root seed");
  sub->add_flag("--force", f.force, "overwrite existing stage output");

  sub->add_option("--count", f.count, "test phantoms")->group("Data");
  sub->add_option("--train-count", f.train_count, "training phantoms")->group("Data");
  sub->add_option("--size", f.size, "image height and width")->group("Data");
  sub->add_option("--coils", f.coils, "receive coils")->group("Data");
  sub->add_option("--acceleration", f.acceleration, "undersampling factor")->group("Data");
  sub->add_option("--center-fraction", f.center_fraction, "fully sampled centre fraction")->group("Data");
  sub->add_option("--mask", f.mask, "equispaced | random")->group("Data");
  sub->add_option("--noise", f.noise, "k-space noise sigma")->group("Data");

  sub->add_option("--variant", f.variant, "zero_fill | tv | unet_lite | varnet_lite")->group("Model");
  sub->add_option("--epochs", f.epochs)->group("Model");
  sub->add_option("--lr", f.lr, "learning rate")->group("Model");
  sub->add_option("--batch-size", f.batch_size)->group("Model");
  sub->add_option("--loss", f.loss, "l2 | l1")->group("Model");
  sub->add_option("--cascades", f.cascades, "varnet_lite cascades")->group("Model");

  auto* eps = sub->add_option("--epsilon", f.epsilon, "budget relative to max|Re z|")->group("Attack");
  sub->add_option("--epsilon-abs", f.epsilon_abs, "absolute budget")->group("Attack")->excludes(eps);
  sub->add_option("--alpha", f.alpha, "step size, in the same units as the budget")->group("Attack");
  sub->add_option("--iters", f.iters, "attack iterations")->group("Attack");
  sub->add_option("--clip", f.clip, "data_range | unit")->group("Attack");
  sub->add_option("--shape", f.shape, "line | rectangle | ellipse")->group("Attack");

  sub->add_option("--tv-lambda", f.tv_lambda, "TV weight for the tv model and the detector")->group("TV");
  sub->add_option("--tv-iters", f.tv_iters)->group("TV");
  sub->add_option("--bins", f.bins, "histogram bins")->group("Detect");
}

Json overrides(const Flags& f) {
  Json o = Json::object();
  auto set = [&o](const char* section, const char* key, const auto& v) {
    if (v) o[section][key] = *v;
  };
  if (f.out) o["out"] = *f.out;
  if (f.seed) o["seed"] = *f.seed;
  set("data", "count", f.count);
  set("data", "train_count", f.train_count);
  set("data", "height", f.size);
  set("data", "width", f.size);
  set("data", "coils", f.coils);
  set("data", "acceleration", f.acceleration);
  set("data", "center_fraction", f.center_fraction);
  set("data", "mask", f.mask);
  set("data", "noise_sigma", f.noise);
  set("model", "variant", f.variant);
  set("model", "epochs", f.epochs);
  set("model", "learning_rate", f.lr);
  set("model", "batch_size", f.batch_size);
  set("model", "loss", f.loss);
  set("model", "cascades", f.cascades);
  if (f.epsilon) {
    o["attack"]["epsilon_mode"] = "relative";
    o["attack"]["epsilon"] = *f.epsilon;
  }
  if (f.epsilon_abs) {
    o["attack"]["epsilon_mode"] = "absolute";
    o["attack"]["epsilon"] = *f.epsilon_abs;
  }
  set("attack", "alpha", f.alpha);
  set("attack", "iters", f.iters);
  set("attack", "clip", f.clip);
  set("attack", "shape", f.shape);
  set("model", "tv_lambda", f.tv_lambda);
  set("detect", "tv_lambda", f.tv_lambda);
  set("model", "tv_iters", f.tv_iters);
  set("detect", "tv_iters", f.tv_iters);
  set("detect", "bins", f.bins);
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hallucination attacks and detection for learned MRI reconstruction"};
  app.require_subcommand(1);
  Flags flags;

  using Stage = std::function<void(const Json&, const mrih::pipeline::StageOptions&)>;
  const std::pair<const char*, Stage> stages[] = {
      {"phantom-gen", mrih::pipeline::cmd_phantom_gen},
      {"train", mrih::pipeline::cmd_train},
      {"attack", mrih::pipeline::cmd_attack},
      {"eval", mrih::pipeline::cmd_eval},
      {"detect", mrih::pipeline::cmd_detect},
      {"report", [](const Json& cfg, const mrih::pipeline::StageOptions& o) {
         std::cout << mrih::pipeline::cmd_report(cfg, o);
       }}};
  const char* help[] = {"generate train and test phantoms", "fit the reconstruction model",
                        "run the masked iterative FGSM attack", "compute image-quality metrics",
                        "run the TV-referenced detection experiment", "summarise eval and detect outputs"};

  std::vector<CLI::App*> subs;
  for (std::size_t i = 0; i < std::size(stages); ++i) {
    subs.push_back(app.add_subcommand(stages[i].first, help[i]));
    add_flags(subs.back(), flags);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    const Json cfg = mrih::pipeline::resolve_config(flags.config, overrides(flags));
    for (std::size_t i = 0; i < subs.size(); ++i) {
      if (subs[i]->parsed()) stages[i].second(cfg, {flags.force});
    }
  } catch (const mrih::ValueError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const mrih::DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 2;
  } catch (const mrih::NumericError& e) {
    std::fprintf(stderr, "numeric failure: %s\n", e.what());
    return 3;
  } catch (const std::filesystem::filesystem_error& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 2;
  }
  return 0;
}
