#include "mrih/metrics/report.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

#include "mrih/attack/attack.hpp"
#include "mrih/mri/forward.hpp"

namespace mrih::metrics {

MetricReport report_pair(const std::string& id, const ComplexTensor& z, const RealTensor& delta, double clip_lo,
                         double clip_hi, const recon::ReconModel& model, const mri::Acquisition& acq,
                         double objective) {
  if (delta.empty()) throw DataError(id + ": missing perturbation");
  if (delta.shape() != z.shape()) throw DataError(id + ": perturbation shape does not match k-space");
  const ComplexTensor zp = attack::apply_perturbation(z, delta, clip_lo, clip_hi);
  MetricReport r;
  r.id = id;
  r.input_pair = compare(mri::zero_fill(z), mri::zero_fill(zp));
  r.recon_pair = compare(model.apply(z, acq), model.apply(zp, acq));
  r.objective = objective;
  return r;
}

Summary summarize(const std::vector<double>& values) {
  Summary s;
  double sum = 0.0;
  for (double v : values) {
    if (std::isfinite(v)) {
      sum += v;
      ++s.count;
    } else if (std::isinf(v)) {
      ++s.infinite;
    }
  }
  if (s.count == 0) {
    s.mean = s.infinite > 0 ? std::numeric_limits<double>::infinity() : std::numeric_limits<double>::quiet_NaN();
    s.std = s.infinite > 0 ? 0.0 : std::numeric_limits<double>::quiet_NaN();
    return s;
  }
  s.mean = sum / static_cast<double>(s.count);
  double ss = 0.0;
  for (double v : values) {
    if (std::isfinite(v)) ss += (v - s.mean) * (v - s.mean);
  }
  s.std = std::sqrt(ss / static_cast<double>(s.count));
  return s;
}

std::vector<SummaryRow> aggregate(const std::vector<MetricReport>& reports, const std::string& model,
                                  const std::string& dataset) {
  std::vector<SummaryRow> rows;
  for (const char* pair : {"input", "recon"}) {
    const bool input = std::string(pair) == "input";
    for (const char* metric : {"psnr", "nrmse", "ssim"}) {
      std::vector<double> v;
      for (const auto& r : reports) {
        const Triple& t = input ? r.input_pair : r.recon_pair;
        const std::string m = metric;
        v.push_back(m == "psnr" ? t.psnr : (m == "nrmse" ? t.nrmse : t.ssim));
      }
      rows.push_back({model, dataset, pair, metric, summarize(v)});
    }
  }
  return rows;
}

io::Json number_or_null(double v) { return std::isfinite(v) ? io::Json(v) : io::Json(nullptr); }

io::Json to_json(const Triple& t) {
  return {{"psnr", number_or_null(t.psnr)},
          {"psnr_infinite", std::isinf(t.psnr) && t.psnr > 0},
          {"nrmse", t.nrmse},
          {"ssim", t.ssim}};
}

io::Json to_json(const MetricReport& r) {
  return {{"id", r.id}, {"input_pair", to_json(r.input_pair)}, {"recon_pair", to_json(r.recon_pair)},
          {"objective", number_or_null(r.objective)}};
}

namespace {

Triple triple_from_json(const io::Json& j) {
  Triple t;
  if (j.at("psnr").is_null()) {
    t.psnr = j.value("psnr_infinite", false) ? std::numeric_limits<double>::infinity()
                                             : std::numeric_limits<double>::quiet_NaN();
  } else {
    t.psnr = j.at("psnr").get<double>();
  }
  t.nrmse = j.at("nrmse").get<double>();
  t.ssim = j.at("ssim").get<double>();
  return t;
}

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

MetricReport report_from_json(const io::Json& j) {
  try {
    MetricReport r;
    r.id = j.at("id").get<std::string>();
    r.input_pair = triple_from_json(j.at("input_pair"));
    r.recon_pair = triple_from_json(j.at("recon_pair"));
    r.objective = j.at("objective").is_null() ? std::numeric_limits<double>::quiet_NaN()
                                              : j.at("objective").get<double>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed metric record: ") + e.what());
  }
}

std::string to_jsonl(const std::vector<MetricReport>& reports) {
  std::string out;
  for (const auto& r : reports) out += to_json(r).dump() + "\n";
  return out;
}

std::string to_csv(const std::vector<SummaryRow>& rows) {
  std::string out = "model,dataset,pair,metric,mean,std\n";
  for (const auto& r : rows) {
    out += r.model + "," + r.dataset + "," + r.pair + "," + r.metric + "," + fmt(r.summary.mean) + "," +
           fmt(r.summary.std) + "\n";
  }
  return out;
}

}  // namespace mrih::metrics
