#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mrih/io.hpp"
#include "mrih/metrics/metrics.hpp"
#include "mrih/mri/acquisition.hpp"
#include "mrih/recon/model.hpp"

namespace mrih::metrics {

struct MetricReport {
  std::string id;
  Triple input_pair;  // (ZF(z), ZF(z + delta))
  Triple recon_pair;  // (F(z), F(z + delta))
  double objective = 0.0;
};

/// Builds the report for one attacked sample. The perturbed input is
/// clip(Re z + delta, lo, hi) + i Im z; an empty delta is a DataError.
MetricReport report_pair(const std::string& id, const ComplexTensor& z, const RealTensor& delta, double clip_lo,
                         double clip_hi, const recon::ReconModel& model, const mri::Acquisition& acq,
                         double objective);

struct Summary {
  double mean = 0.0;
  double std = 0.0;       // population standard deviation
  std::size_t count = 0;  // finite values used
  std::size_t infinite = 0;
};

/// Mean and population std over the finite values. With no finite values the
/// mean is +inf if any value was +inf, else NaN.
Summary summarize(const std::vector<double>& values);

struct SummaryRow {
  std::string model;
  std::string dataset;
  std::string pair;    // "input" or "recon"
  std::string metric;  // "psnr", "nrmse" or "ssim"
  Summary summary;
};

std::vector<SummaryRow> aggregate(const std::vector<MetricReport>& reports, const std::string& model,
                                  const std::string& dataset);

/// JSON number, or null for non-finite values.
io::Json number_or_null(double v);
io::Json to_json(const Triple& t);
io::Json to_json(const MetricReport& r);
MetricReport report_from_json(const io::Json& j);

/// One JSON object per line.
std::string to_jsonl(const std::vector<MetricReport>& reports);
/// Header "model,dataset,pair,metric,mean,std" plus one row per SummaryRow.
std::string to_csv(const std::vector<SummaryRow>& rows);

}  // namespace mrih::metrics
