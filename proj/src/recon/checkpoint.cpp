#include "mrih/recon/checkpoint.hpp"

#include <cstring>

namespace mrih::recon {

namespace fs = std::filesystem;

io::Json hyper_to_json(const Hyper& hp) {
  io::Json j;
  j["height"] = hp.height;
  j["width"] = hp.width;
  j["coils"] = hp.coils;
  j["channels"] = hp.channels;
  j["residual"] = hp.residual;
  j["cascades"] = hp.cascades;
  j["tv"] = {{"lambda", hp.tv.lambda}, {"iters", hp.tv.iters}, {"eps", hp.tv.eps}};
  return j;
}

Hyper hyper_from_json(const io::Json& j) {
  Hyper hp;
  hp.height = j.at("height").get<std::size_t>();
  hp.width = j.at("width").get<std::size_t>();
  hp.coils = j.at("coils").get<std::size_t>();
  hp.channels = j.at("channels").get<std::size_t>();
  hp.residual = j.at("residual").get<bool>();
  hp.cascades = j.at("cascades").get<std::size_t>();
  const auto& tv = j.at("tv");
  hp.tv.lambda = tv.at("lambda").get<double>();
  hp.tv.iters = tv.at("iters").get<std::size_t>();
  hp.tv.eps = tv.at("eps").get<double>();
  return hp;
}

void save_checkpoint(const ReconModel& model, const fs::path& dir) {
  fs::create_directories(dir);
  std::vector<double> blob;
  blob.reserve(model.parameter_count());
  io::Json tensors = io::Json::array();
  for (const auto& p : model.parameters()) {
    tensors.push_back({{"name", p.name}, {"shape", p.value.shape()}, {"offset", blob.size()}});
    blob.insert(blob.end(), p.value.storage().begin(), p.value.storage().end());
  }
  std::string bytes(blob.size() * sizeof(double), '\0');
  if (!blob.empty()) std::memcpy(bytes.data(), blob.data(), bytes.size());

  io::Json header;
  header["schema_version"] = kCheckpointSchemaVersion;
  header["variant"] = to_string(model.variant());
  header["hyperparameters"] = hyper_to_json(model.hyper());
  header["dtype"] = "f64le";
  header["count"] = blob.size();
  header["tensors"] = std::move(tensors);
  header["blob"] = "model.bin";
  header["blob_fnv1a"] = io::fnv1a_hex(bytes);
  io::write_f64le(dir / "model.bin", blob);
  io::write_json(dir / "model.json", header);
}

ReconModel load_checkpoint(const fs::path& dir) {
  io::require_exists(dir / "model.json", "train");
  const io::Json h = io::read_json(dir / "model.json");
  try {
    if (h.at("schema_version").get<int>() != kCheckpointSchemaVersion) {
      throw DataError("checkpoint " + dir.string() + ": unsupported schema_version");
    }
    const Variant variant = parse_variant(h.at("variant").get<std::string>());
    const Hyper hp = hyper_from_json(h.at("hyperparameters"));
    const auto count = h.at("count").get<std::size_t>();
    const std::vector<double> blob = io::read_f64le(dir / h.at("blob").get<std::string>(), count);

    std::vector<NamedTensor> params;
    for (const auto& t : h.at("tensors")) {
      const auto shape = t.at("shape").get<Shape>();
      const auto offset = t.at("offset").get<std::size_t>();
      const std::size_t n = numel(shape);
      if (offset > count || n > count - offset) {
        throw DataError("checkpoint " + dir.string() + ": tensor " + t.at("name").get<std::string>() +
                        " lies outside the blob");
      }
      params.push_back({t.at("name").get<std::string>(),
                        RealTensor(shape, std::vector<double>(blob.begin() + static_cast<std::ptrdiff_t>(offset),
                                                              blob.begin() + static_cast<std::ptrdiff_t>(offset + n)))});
    }
    return ReconModel::from_parts(variant, hp, std::move(params));
  } catch (const nlohmann::json::exception& e) {
    throw DataError("checkpoint " + dir.string() + ": malformed header: " + e.what());
  } catch (const ValueError& e) {
    throw DataError("checkpoint " + dir.string() + ": " + e.what());
  }
}

}  // namespace mrih::recon
