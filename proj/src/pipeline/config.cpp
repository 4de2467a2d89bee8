#include "mrih/pipeline/config.hpp"

#include <cmath>
#include <type_traits>

#include "mrih/attack/attack.hpp"
#include "mrih/mri/acquisition.hpp"
#include "mrih/numerics/rng.hpp"

namespace mrih::pipeline {

namespace {

using io::Json;

template <class T>
T get(const Json& cfg, const char* section, const char* key) {
  try {
    const Json& v = cfg.at(section).at(key);
    if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
      if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) throw ValueError(std::string("config key '") + section + "." + key +
                                                    "' must be a non-negative integer");
    }
    return v.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ValueError(std::string("config key '") + section + "." + key + "' has the wrong type");
  }
}

bool is_null(const Json& cfg, const char* section, const char* key) { return cfg.at(section).at(key).is_null(); }

void require(bool ok, const std::string& key, const std::string& what) {
  if (!ok) throw ValueError("config key '" + key + "' " + what);
}

}  // namespace

Json default_config() {
  return Json::parse(R"({
    "seed": 0,
    "out": "run",
    "data": {
      "count": 50, "train_count": 200, "height": 32, "width": 32, "coils": 4,
      "acceleration": 4.0, "center_fraction": 0.125, "mask": "equispaced",
      "ellipses": 6, "noise_sigma": 0.001, "coil_seed": null
    },
    "model": {
      "variant": "unet_lite", "residual": true, "cascades": 4,
      "epochs": 30, "batch_size": 8, "learning_rate": null, "momentum": 0.9, "loss": "l2",
      "tv_lambda": 0.001, "tv_iters": 100, "tv_eps": 0.001
    },
    "attack": {
      "epsilon_mode": "relative", "epsilon": 0.01, "alpha": null, "iters": 150, "clip": "data_range",
      "shape": "line", "length": 11, "thickness": 2, "vertical": false, "height": 4, "width": 8,
      "row": null, "col": null, "dilation": 2
    },
    "metrics": { "dataset_name": "phantoms" },
    "detect": { "tv_lambda": 0.001, "tv_iters": 100, "tv_eps": 0.001, "bins": 20 }
  })");
}

Json merge_config(const Json& base, const Json& patch) {
  if (!patch.is_object()) throw ValueError("config must be a JSON object");
  Json out = base;
  for (const auto& [key, value] : patch.items()) {
    if (!out.contains(key)) throw ValueError("unknown config key '" + key + "'");
    if (out[key].is_object()) {
      if (!value.is_object()) throw ValueError("config section '" + key + "' must be an object");
      for (const auto& [k, v] : value.items()) {
        if (!out[key].contains(k)) throw ValueError("unknown config key '" + key + "." + k + "'");
        out[key][k] = v;
      }
    } else {
      out[key] = value;
    }
  }
  return out;
}

Json resolve_config(const std::filesystem::path& file, const Json& overrides) {
  Json cfg = default_config();
  if (!file.empty()) cfg = merge_config(cfg, io::read_json(file));
  cfg = merge_config(cfg, overrides);
  validate_config(cfg);
  cfg["out"] = std::filesystem::absolute(cfg["out"].get<std::string>()).lexically_normal().string();
  return cfg;
}

void validate_config(const Json& cfg) {
  if (!cfg.contains("seed") || !(cfg["seed"].is_number_unsigned() || (cfg["seed"].is_number_integer() && cfg["seed"].get<std::int64_t>() >= 0)) || !cfg.contains("out") || !cfg["out"].is_string()) {
    throw ValueError("config keys 'seed' (non-negative integer) and 'out' (string) are required");
  }
  const auto d = dataset_spec(cfg, false);
  require(d.count >= 1, "data.count", "must be >= 1");
  require(d.height >= 8 && d.width >= 8, "data.height/width", "must be >= 8");
  require(d.coils >= 1, "data.coils", "must be >= 1");
  require(d.acceleration >= 1.0 && std::isfinite(d.acceleration), "data.acceleration", "must be >= 1");
  require(d.center_fraction > 0.0 && d.center_fraction < 1.0, "data.center_fraction", "must be in (0, 1)");
  require(d.noise_sigma >= 0.0, "data.noise_sigma", "must be >= 0");
  require(d.n_ellipses >= 1, "data.ellipses", "must be >= 1");
  get<std::size_t>(cfg, "data", "train_count");
  // Exercise the mask rules now so a bad acceleration fails before any output.
  mri::make_mask(d.width, d.acceleration, d.center_fraction, d.mask_kind, 0);

  initial_model(cfg);
  const auto t = train_config(cfg);
  require(t.epochs >= 1, "model.epochs", "must be >= 1");
  require(t.batch_size >= 1, "model.batch_size", "must be >= 1");
  require(t.learning_rate > 0.0, "model.learning_rate", "must be > 0");
  require(t.momentum >= 0.0 && t.momentum < 1.0, "model.momentum", "must be in [0, 1)");

  const auto a = attack_spec(cfg);
  attack::validate(a);
  attack::render_target(RealTensor({d.height, d.width}), a.shape, a.mask_dilation);

  const auto tv = detect_tv(cfg);
  require(tv.lambda > 0.0, "detect.tv_lambda", "must be > 0");
  require(tv.iters >= 1, "detect.tv_iters", "must be >= 1");
  require(tv.eps > 0.0, "detect.tv_eps", "must be > 0");
  require(get<std::size_t>(cfg, "detect", "bins") >= 2, "detect.bins", "must be >= 2");
  get<std::string>(cfg, "metrics", "dataset_name");
}

std::string config_hash(const Json& cfg) {
  Json copy = cfg;
  copy.erase("out");
  return io::fnv1a_hex(copy.dump());
}

Seeds seeds_of(const Json& cfg) {
  Seeds s;
  s.root = cfg.at("seed").get<std::uint64_t>();
  s.train_data = derive_seed(s.root, 1);
  s.test_data = derive_seed(s.root, 2);
  s.coils = is_null(cfg, "data", "coil_seed") ? derive_seed(s.root, 3) : get<std::uint64_t>(cfg, "data", "coil_seed");
  s.model_init = derive_seed(s.root, 4);
  s.shuffle = derive_seed(s.root, 5);
  s.attack = derive_seed(s.root, 6);
  return s;
}

Json to_json(const Seeds& s) {
  return {{"root", s.root},          {"train_data", s.train_data}, {"test_data", s.test_data}, {"coils", s.coils},
          {"model_init", s.model_init}, {"shuffle", s.shuffle},    {"attack", s.attack}};
}

mri::DatasetSpec dataset_spec(const Json& cfg, bool train_split) {
  const Seeds seeds = seeds_of(cfg);
  mri::DatasetSpec d;
  d.count = get<std::size_t>(cfg, "data", train_split ? "train_count" : "count");
  d.height = get<std::size_t>(cfg, "data", "height");
  d.width = get<std::size_t>(cfg, "data", "width");
  d.coils = get<std::size_t>(cfg, "data", "coils");
  d.acceleration = get<double>(cfg, "data", "acceleration");
  d.center_fraction = get<double>(cfg, "data", "center_fraction");
  d.mask_kind = mri::parse_mask_kind(get<std::string>(cfg, "data", "mask"));
  d.n_ellipses = get<std::size_t>(cfg, "data", "ellipses");
  d.noise_sigma = get<double>(cfg, "data", "noise_sigma");
  d.seed = train_split ? seeds.train_data : seeds.test_data;
  d.coil_seed = seeds.coils;
  d.id_prefix = train_split ? "train" : "test";
  return d;
}

recon::ReconModel initial_model(const Json& cfg) {
  const auto d = dataset_spec(cfg, false);
  const auto variant = recon::parse_variant(get<std::string>(cfg, "model", "variant"));
  const std::uint64_t seed = seeds_of(cfg).model_init;
  switch (variant) {
    case recon::Variant::zero_fill: return recon::ReconModel::zero_fill(d.height, d.width, d.coils);
    case recon::Variant::tv:
      return recon::ReconModel::tv(d.height, d.width, d.coils,
                                   {get<double>(cfg, "model", "tv_lambda"), get<std::size_t>(cfg, "model", "tv_iters"),
                                    get<double>(cfg, "model", "tv_eps")});
    case recon::Variant::unet_lite:
      return recon::ReconModel::unet_lite(d.height, d.width, d.coils, get<bool>(cfg, "model", "residual"), seed);
    case recon::Variant::varnet_lite:
      return recon::ReconModel::varnet_lite(d.height, d.width, d.coils, get<std::size_t>(cfg, "model", "cascades"),
                                            seed);
  }
  throw ValueError("unknown model variant");
}

recon::TrainConfig train_config(const Json& cfg) {
  recon::TrainConfig t;
  t.epochs = get<std::size_t>(cfg, "model", "epochs");
  t.batch_size = get<std::size_t>(cfg, "model", "batch_size");
  if (is_null(cfg, "model", "learning_rate")) {
    // Unrolled cascades tolerate smaller steps than the residual CNN.
    t.learning_rate = get<std::string>(cfg, "model", "variant") == "varnet_lite" ? 2e-2 : 5e-2;
  } else {
    t.learning_rate = get<double>(cfg, "model", "learning_rate");
  }
  t.momentum = get<double>(cfg, "model", "momentum");
  t.loss = recon::parse_loss_kind(get<std::string>(cfg, "model", "loss"));
  t.seed = seeds_of(cfg).shuffle;
  return t;
}

attack::AttackSpec attack_spec(const Json& cfg) {
  attack::AttackSpec a;
  a.budget = attack::parse_budget_mode(get<std::string>(cfg, "attack", "epsilon_mode"));
  a.epsilon = get<double>(cfg, "attack", "epsilon");
  a.alpha = is_null(cfg, "attack", "alpha") ? 0.1 * a.epsilon : get<double>(cfg, "attack", "alpha");
  a.iters = get<std::size_t>(cfg, "attack", "iters");
  a.clip = attack::parse_clip_mode(get<std::string>(cfg, "attack", "clip"));
  a.shape.kind = attack::parse_shape_kind(get<std::string>(cfg, "attack", "shape"));
  a.shape.length = get<std::size_t>(cfg, "attack", "length");
  a.shape.thickness = get<std::size_t>(cfg, "attack", "thickness");
  a.shape.vertical = get<bool>(cfg, "attack", "vertical");
  a.shape.height = get<std::size_t>(cfg, "attack", "height");
  a.shape.width = get<std::size_t>(cfg, "attack", "width");
  if (!is_null(cfg, "attack", "row")) a.shape.row = get<std::size_t>(cfg, "attack", "row");
  if (!is_null(cfg, "attack", "col")) a.shape.col = get<std::size_t>(cfg, "attack", "col");
  a.mask_dilation = get<std::size_t>(cfg, "attack", "dilation");
  a.seed = seeds_of(cfg).attack;
  return a;
}

recon::TvParams detect_tv(const Json& cfg) {
  return {get<double>(cfg, "detect", "tv_lambda"), get<std::size_t>(cfg, "detect", "tv_iters"),
          get<double>(cfg, "detect", "tv_eps")};
}

}  // namespace mrih::pipeline
