#pragma once

#include <string>
#include <vector>

#include "mrih/attack/attack.hpp"
#include "mrih/io.hpp"
#include "mrih/metrics/metrics.hpp"
#include "mrih/mri/dataset.hpp"
#include "mrih/recon/model.hpp"
#include "mrih/recon/tv.hpp"

namespace mrih::detect {

struct DetectionRecord {
  std::string id;
  bool contaminated = false;
  metrics::Triple metrics;  // TV reconstruction as the reference, F as the test image
};

struct Skipped {
  std::string id;
  std::string reason;
};

struct DetectionRun {
  std::vector<DetectionRecord> records;  // clean then contaminated, per sample in input order
  std::vector<Skipped> skipped;
};

/// Metrics of (TV(z), F(z)). Throws NumericError when TV reports instability.
metrics::Triple tv_model_pair(const ComplexTensor& z, const mri::Acquisition& acq, const recon::ReconModel& model,
                              const recon::TvParams& tv);

/// Records for given clean and perturbed k-space pairs. Samples whose TV
/// reconstruction is unstable are skipped and listed.
DetectionRun detection_records(const std::vector<mri::Sample>& clean, const std::vector<ComplexTensor>& perturbed,
                               const recon::ReconModel& model, const recon::TvParams& tv);

/// Attacks every sample (seed derived from spec.seed and the sample index) and
/// collects the clean and contaminated records.
DetectionRun run_detection_experiment(const std::vector<mri::Sample>& data, const recon::ReconModel& model,
                                      const attack::AttackSpec& spec, const recon::TvParams& tv);

struct Histogram {
  std::vector<double> edges;  // bins + 1
  std::vector<double> p_clean;
  std::vector<double> p_cont;
  double overlap = 0.0;
};

/// Shared-edge histograms over the pooled finite range and sum_b min(p_clean, p_cont).
Histogram histogram(const std::vector<double>& clean, const std::vector<double>& cont, std::size_t bins);
double histogram_overlap(const std::vector<double>& clean, const std::vector<double>& cont, std::size_t bins);

struct RocPoint {
  double threshold;
  double fpr;
  double tpr;
};

struct DetectorEval {
  std::string metric;
  std::string direction;  // "higher" or "lower" values flag contamination
  std::vector<RocPoint> roc;
  double auc = 0.5;
  double overlap = 0.0;
  Histogram hist;
};

/// Sweeps thresholds at midpoints between sorted unique values (plus both
/// ends), keeps the direction with the larger trapezoid AUC. Needs both classes.
DetectorEval threshold_detector_eval(const std::vector<DetectionRecord>& records, const std::string& metric,
                                     std::size_t bins = 20);

double metric_value(const metrics::Triple& t, const std::string& metric);

io::Json to_json(const DetectionRecord& r);
DetectionRecord record_from_json(const io::Json& j);
io::Json to_json(const DetectorEval& e);
/// bin_lo,bin_hi,p_clean,p_cont
std::string histogram_csv(const Histogram& h);

}  // namespace mrih::detect
