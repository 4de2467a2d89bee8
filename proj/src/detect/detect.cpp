#include "mrih/detect/detect.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>

#include "mrih/metrics/report.hpp"
#include "mrih/numerics/parallel.hpp"
#include "mrih/numerics/rng.hpp"

namespace mrih::detect {

namespace {

std::vector<double> finite_only(const std::vector<double>& v) {
  std::vector<double> out;
  for (double x : v) {
    if (std::isfinite(x)) out.push_back(x);
  }
  return out;
}

struct SampleOutcome {
  std::optional<std::pair<DetectionRecord, DetectionRecord>> records;
  std::string skip_reason;
};

SampleOutcome evaluate_sample(const mri::Sample& s, const ComplexTensor& perturbed, const recon::ReconModel& model,
                              const recon::TvParams& tv) {
  const auto acq = mri::acquisition_of(s);
  try {
    DetectionRecord clean{s.id, false, tv_model_pair(s.kspace, acq, model, tv)};
    DetectionRecord cont{s.id, true, tv_model_pair(perturbed, acq, model, tv)};
    return {std::make_pair(clean, cont), {}};
  } catch (const NumericError& e) {
    return {std::nullopt, e.what()};
  }
}

DetectionRun collect(const std::vector<mri::Sample>& data, std::vector<SampleOutcome>& outcomes) {
  DetectionRun run;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (outcomes[i].records) {
      run.records.push_back(outcomes[i].records->first);
      run.records.push_back(outcomes[i].records->second);
    } else {
      run.skipped.push_back({data[i].id, outcomes[i].skip_reason});
      std::fprintf(stderr, "warning: skipping %s: %s\n", data[i].id.c_str(), outcomes[i].skip_reason.c_str());
    }
  }
  return run;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

metrics::Triple tv_model_pair(const ComplexTensor& z, const mri::Acquisition& acq, const recon::ReconModel& model,
                              const recon::TvParams& tv) {
  const auto ref = recon::tv_reconstruct(z, acq, tv);
  if (!ref.stable) throw NumericError("TV reconstruction did not decrease its objective monotonically");
  return metrics::compare(ref.image, model.apply(z, acq));
}

DetectionRun detection_records(const std::vector<mri::Sample>& clean, const std::vector<ComplexTensor>& perturbed,
                               const recon::ReconModel& model, const recon::TvParams& tv) {
  if (clean.size() != perturbed.size()) throw ValueError("detection: clean and perturbed sets differ in size");
  std::vector<SampleOutcome> outcomes(clean.size());
  parallel_for(clean.size(), [&](std::size_t i) { outcomes[i] = evaluate_sample(clean[i], perturbed[i], model, tv); });
  return collect(clean, outcomes);
}

DetectionRun run_detection_experiment(const std::vector<mri::Sample>& data, const recon::ReconModel& model,
                                      const attack::AttackSpec& spec, const recon::TvParams& tv) {
  if (data.empty()) throw ValueError("detection: dataset is empty");
  attack::validate(spec);
  std::vector<SampleOutcome> outcomes(data.size());
  parallel_for(data.size(), [&](std::size_t i) {
    attack::AttackSpec s = spec;
    s.seed = derive_seed(spec.seed, i);
    const auto res = attack::masked_iterative_fgsm(model, data[i].kspace, mri::acquisition_of(data[i]), s);
    outcomes[i] = evaluate_sample(data[i], res.perturbed_kspace, model, tv);
  });
  return collect(data, outcomes);
}

Histogram histogram(const std::vector<double>& clean_in, const std::vector<double>& cont_in, std::size_t bins) {
  if (bins < 2) throw ValueError("histogram: bins must be >= 2");
  const auto clean = finite_only(clean_in);
  const auto cont = finite_only(cont_in);
  if (clean.empty() || cont.empty()) throw ValueError("histogram: both value lists need finite entries");
  double lo = std::min(*std::min_element(clean.begin(), clean.end()), *std::min_element(cont.begin(), cont.end()));
  double hi = std::max(*std::max_element(clean.begin(), clean.end()), *std::max_element(cont.begin(), cont.end()));
  Histogram h;
  h.p_clean.assign(bins, 0.0);
  h.p_cont.assign(bins, 0.0);
  for (std::size_t b = 0; b <= bins; ++b) {
    h.edges.push_back(lo + (hi - lo) * static_cast<double>(b) / static_cast<double>(bins));
  }
  auto bin_of = [&](double v) {
    if (hi == lo) return std::size_t{0};
    const auto b = static_cast<std::size_t>((v - lo) / (hi - lo) * static_cast<double>(bins));
    return std::min(b, bins - 1);
  };
  for (double v : clean) h.p_clean[bin_of(v)] += 1.0 / static_cast<double>(clean.size());
  for (double v : cont) h.p_cont[bin_of(v)] += 1.0 / static_cast<double>(cont.size());
  for (std::size_t b = 0; b < bins; ++b) h.overlap += std::min(h.p_clean[b], h.p_cont[b]);
  h.overlap = std::clamp(h.overlap, 0.0, 1.0);
  return h;
}

double histogram_overlap(const std::vector<double>& clean, const std::vector<double>& cont, std::size_t bins) {
  return histogram(clean, cont, bins).overlap;
}

double metric_value(const metrics::Triple& t, const std::string& metric) {
  if (metric == "psnr") return t.psnr;
  if (metric == "nrmse") return t.nrmse;
  if (metric == "ssim") return t.ssim;
  throw ValueError("unknown metric '" + metric + "' (expected psnr, nrmse or ssim)");
}

DetectorEval threshold_detector_eval(const std::vector<DetectionRecord>& records, const std::string& metric,
                                     std::size_t bins) {
  std::vector<double> clean, cont;
  for (const auto& r : records) {
    const double v = metric_value(r.metrics, metric);
    if (std::isnan(v)) continue;
    (r.contaminated ? cont : clean).push_back(v);
  }
  if (clean.empty() || cont.empty()) throw ValueError("detector: records must contain both clean and contaminated samples");

  std::vector<double> values(clean);
  values.insert(values.end(), cont.begin(), cont.end());
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  std::vector<double> thresholds{-std::numeric_limits<double>::infinity()};
  for (std::size_t i = 0; i + 1 < values.size(); ++i) {
    const double a = values[i], b = values[i + 1];
    if (std::isinf(b)) {
      thresholds.push_back(a);
    } else if (std::isinf(a)) {
      thresholds.push_back(std::nextafter(b, -std::numeric_limits<double>::infinity()));
    } else {
      thresholds.push_back(a + (b - a) / 2.0);
    }
  }
  thresholds.push_back(std::numeric_limits<double>::infinity());

  // Counts of values strictly above each threshold; the ROC for "higher" is
  // traced from the largest threshold downwards.
  const auto n0 = static_cast<long long>(clean.size());
  const auto n1 = static_cast<long long>(cont.size());
  auto above = [](const std::vector<double>& v, double t) {
    return static_cast<long long>(std::count_if(v.begin(), v.end(), [t](double x) { return x > t; }));
  };
  std::vector<long long> fp, tp;
  for (auto it = thresholds.rbegin(); it != thresholds.rend(); ++it) {
    fp.push_back(above(clean, *it));
    tp.push_back(above(cont, *it));
  }
  long long twice_area = 0;
  for (std::size_t k = 1; k < fp.size(); ++k) twice_area += (fp[k] - fp[k - 1]) * (tp[k] + tp[k - 1]);
  const double auc_higher = static_cast<double>(twice_area) / static_cast<double>(2 * n0 * n1);
  const double auc_lower = static_cast<double>(2 * n0 * n1 - twice_area) / static_cast<double>(2 * n0 * n1);

  DetectorEval e;
  e.metric = metric;
  const bool higher = auc_higher >= auc_lower;
  e.direction = higher ? "higher" : "lower";
  e.auc = higher ? auc_higher : auc_lower;
  for (std::size_t k = 0; k < fp.size(); ++k) {
    const double t = thresholds[thresholds.size() - 1 - k];
    const double fpr = static_cast<double>(fp[k]) / static_cast<double>(n0);
    const double tpr = static_cast<double>(tp[k]) / static_cast<double>(n1);
    if (higher) {
      e.roc.push_back({t, fpr, tpr});
    } else {
      e.roc.push_back({t, 1.0 - fpr, 1.0 - tpr});
    }
  }
  if (!higher) std::reverse(e.roc.begin(), e.roc.end());
  e.hist = histogram(clean, cont, bins);
  e.overlap = e.hist.overlap;
  return e;
}

io::Json to_json(const DetectionRecord& r) {
  return {{"id", r.id}, {"contaminated", r.contaminated}, {"metrics", metrics::to_json(r.metrics)}};
}

DetectionRecord record_from_json(const io::Json& j) {
  try {
    DetectionRecord r;
    r.id = j.at("id").get<std::string>();
    r.contaminated = j.at("contaminated").get<bool>();
    const auto& m = j.at("metrics");
    r.metrics.psnr = m.at("psnr").is_null() ? std::numeric_limits<double>::infinity() : m.at("psnr").get<double>();
    r.metrics.nrmse = m.at("nrmse").get<double>();
    r.metrics.ssim = m.at("ssim").get<double>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed detection record: ") + e.what());
  }
}

io::Json to_json(const DetectorEval& e) {
  io::Json roc = io::Json::array();
  for (const auto& p : e.roc) roc.push_back({{"threshold", metrics::number_or_null(p.threshold)}, {"fpr", p.fpr}, {"tpr", p.tpr}});
  return {{"metric", e.metric}, {"direction", e.direction}, {"auc", e.auc}, {"overlap", e.overlap},
          {"bins", e.hist.p_clean.size()}, {"roc", std::move(roc)}};
}

std::string histogram_csv(const Histogram& h) {
  std::string out = "bin_lo,bin_hi,p_clean,p_cont\n";
  for (std::size_t b = 0; b < h.p_clean.size(); ++b) {
    out += fmt(h.edges[b]) + "," + fmt(h.edges[b + 1]) + "," + fmt(h.p_clean[b]) + "," + fmt(h.p_cont[b]) + "\n";
  }
  return out;
}

}  // namespace mrih::detect
