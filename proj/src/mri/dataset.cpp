#include "mrih/mri/dataset.hpp"

#include <algorithm>
#include <cstdio>

#include "mrih/io.hpp"
#include "mrih/mri/forward.hpp"
#include "mrih/numerics/parallel.hpp"
#include "mrih/numerics/rng.hpp"

namespace mrih::mri {

namespace fs = std::filesystem;

void validate(const Sample& s) {
  if (s.kspace.rank() != 3) throw DataError(s.id + ": k-space must be [coils, h, w]");
  if (s.mask.width() != s.width()) throw DataError(s.id + ": mask width does not match k-space");
  const std::size_t w = s.width();
  for (std::size_t k = 0; k < s.kspace.size(); ++k) {
    if (!s.mask.pattern[k % w] && s.kspace[k] != cdouble(0.0, 0.0)) {
      throw DataError(s.id + ": nonzero k-space at an unsampled column");
    }
  }
  if (s.has_ground_truth() && s.ground_truth.shape() != Shape{s.height(), s.width()}) {
    throw DataError(s.id + ": ground truth shape does not match k-space");
  }
}

Acquisition acquisition_of(const Sample& s) {
  return Acquisition{make_coil_maps(s.height(), s.width(), s.coils(), s.coil_seed), s.mask};
}

std::vector<Sample> generate_dataset(const DatasetSpec& spec) {
  const CoilMaps maps = make_coil_maps(spec.height, spec.width, spec.coils, spec.coil_seed);
  std::vector<Sample> out(spec.count);
  parallel_for(spec.count, [&](std::size_t i) {
    const std::uint64_t base = derive_seed(spec.seed, i);
    Sample s;
    char id[64];
    std::snprintf(id, sizeof id, "%s_%05zu", spec.id_prefix.c_str(), i);
    s.id = id;
    s.mask = make_mask(spec.width, spec.acceleration, spec.center_fraction, spec.mask_kind, derive_seed(base, 1));
    s.ground_truth = gen_phantom(spec.height, spec.width, spec.n_ellipses, derive_seed(base, 0));
    s.kspace = forward_model(s.ground_truth, maps, s.mask, spec.noise_sigma, derive_seed(base, 2));
    s.noise_sigma = spec.noise_sigma;
    s.coil_seed = spec.coil_seed;
    out[i] = std::move(s);
  });
  return out;
}

void write_ksc(const fs::path& dir, const Sample& s) {
  validate(s);
  fs::create_directories(dir);
  io::Json header;
  header["schema_version"] = kKscSchemaVersion;
  header["format"] = "KSC";
  header["id"] = s.id;
  header["shape"] = {s.coils(), s.height(), s.width()};
  header["dtype"] = "c64le";
  header["mask"] = s.mask.pattern;
  header["acceleration"] = s.mask.acceleration;
  header["center_fraction"] = s.mask.center_fraction;
  header["noise_sigma"] = s.noise_sigma;
  header["ground_truth"] = s.has_ground_truth();
  header["coil_seed"] = s.coil_seed;
  io::write_json(dir / (s.id + ".json"), header);

  const auto* interleaved = reinterpret_cast<const double*>(s.kspace.data().data());
  io::write_f64le(dir / (s.id + ".kspace.bin"), {interleaved, 2 * s.kspace.size()});
  if (s.has_ground_truth()) io::write_f64le(dir / (s.id + ".gt.bin"), s.ground_truth.data());
}

Sample read_ksc(const fs::path& dir, const std::string& id) {
  const io::Json h = io::read_json(dir / (id + ".json"));
  try {
    if (h.at("schema_version").get<int>() != kKscSchemaVersion) {
      throw DataError(id + ": unsupported KSC schema_version");
    }
    if (h.at("dtype").get<std::string>() != "c64le") throw DataError(id + ": unsupported dtype");
    Sample s;
    s.id = h.at("id").get<std::string>();
    const auto shape = h.at("shape").get<std::vector<std::size_t>>();
    if (shape.size() != 3) throw DataError(id + ": shape must have three entries");
    s.mask.pattern = h.at("mask").get<std::vector<std::uint8_t>>();
    s.mask.acceleration = h.at("acceleration").get<double>();
    s.mask.center_fraction = h.at("center_fraction").get<double>();
    s.noise_sigma = h.at("noise_sigma").get<double>();
    s.coil_seed = h.at("coil_seed").get<std::uint64_t>();

    const std::size_t n = numel(shape);
    const std::vector<double> raw = io::read_f64le(dir / (id + ".kspace.bin"), 2 * n);
    std::vector<cdouble> values(n);
    for (std::size_t i = 0; i < n; ++i) values[i] = cdouble(raw[2 * i], raw[2 * i + 1]);
    s.kspace = ComplexTensor(shape, std::move(values));
    if (h.at("ground_truth").get<bool>()) {
      s.ground_truth = RealTensor({shape[1], shape[2]}, io::read_f64le(dir / (id + ".gt.bin"), shape[1] * shape[2]));
    }
    validate(s);
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(id + ": malformed KSC header: " + e.what());
  }
}

std::vector<std::string> list_ksc(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw DataError("not a dataset directory: " + dir.string());
  std::vector<std::string> ids;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const fs::path p = entry.path();
    if (p.extension() != ".json") continue;
    const std::string stem = p.stem().string();
    if (fs::exists(dir / (stem + ".kspace.bin"))) ids.push_back(stem);
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::vector<Sample> read_ksc_dir(const fs::path& dir) {
  std::vector<Sample> out;
  for (const auto& id : list_ksc(dir)) out.push_back(read_ksc(dir, id));
  return out;
}

}  // namespace mrih::mri
