#include <cmath>

#include "doctest.h"
#include "mrih/detect/detect.hpp"
#include "mrih/numerics/rng.hpp"

using namespace mrih;
using namespace mrih::detect;

namespace {

std::vector<DetectionRecord> records(const std::vector<double>& clean, const std::vector<double>& cont) {
  std::vector<DetectionRecord> out;
  for (double v : clean) out.push_back({"c", false, {v, v, v}});
  for (double v : cont) out.push_back({"x", true, {v, v, v}});
  return out;
}

mri::Sample sample(std::uint64_t seed) {
  mri::DatasetSpec spec;
  spec.count = 1;
  spec.height = 16;
  spec.width = 16;
  spec.coils = 2;
  spec.seed = seed;
  return mri::generate_dataset(spec).front();
}

}  // namespace

TEST_CASE("histogram overlap extremes and symmetry") {
  const std::vector<double> a{0.1, 0.2, 0.3, 0.4}, b{5.0, 6.0, 7.0};
  CHECK(histogram_overlap(a, a, 10) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(histogram_overlap(a, b, 10) == 0.0);
  const std::vector<double> c{0.15, 0.3, 0.35, 5.5};
  CHECK(histogram_overlap(a, c, 7) == histogram_overlap(c, a, 7));
  CHECK_THROWS_AS(histogram_overlap(a, b, 1), ValueError);
  CHECK_THROWS_AS(histogram_overlap({}, b, 4), ValueError);
}

TEST_CASE("overlap of shifted uniforms is one half") {
  Rng rng(1);
  std::vector<double> u, v;
  for (int i = 0; i < 10000; ++i) {
    u.push_back(rng.uniform());
    v.push_back(0.5 + rng.uniform());
  }
  CHECK(std::abs(histogram_overlap(u, v, 20) - 0.5) < 0.05);
}

TEST_CASE("non-finite values are dropped from histograms") {
  const double inf = std::numeric_limits<double>::infinity();
  const Histogram h = histogram({1.0, 2.0, inf}, {1.0, 2.0}, 4);
  CHECK(h.overlap == doctest::Approx(1.0));
  CHECK(h.edges.front() == 1.0);
  CHECK(h.edges.back() == 2.0);
  CHECK(histogram_csv(h).rfind("bin_lo,bin_hi,p_clean,p_cont\n", 0) == 0);
}

TEST_CASE("threshold detector on hand-built cases") {
  const auto e = threshold_detector_eval(records({1, 2}, {3, 4}), "ssim");
  CHECK(e.auc == 1.0);
  CHECK(e.overlap == 0.0);
  CHECK(e.direction == "higher");
  REQUIRE(e.roc.size() == 5);
  CHECK(e.roc.front().fpr == 0.0);
  CHECK(e.roc.front().tpr == 0.0);
  CHECK(e.roc.back().fpr == 1.0);
  CHECK(e.roc.back().tpr == 1.0);

  const auto low = threshold_detector_eval(records({3, 4}, {1, 2}), "psnr");
  CHECK(low.auc == 1.0);
  CHECK(low.direction == "lower");

  const auto same = threshold_detector_eval(records({1, 2, 2, 5}, {1, 2, 2, 5}), "nrmse");
  CHECK(same.auc == 0.5);
  CHECK(same.overlap == doctest::Approx(1.0));

  CHECK_THROWS_AS(threshold_detector_eval(records({1, 2}, {}), "ssim"), ValueError);
  CHECK_THROWS_AS(threshold_detector_eval(records({1}, {2}), "lpips"), ValueError);
}

TEST_CASE("auc is rank based") {
  Rng rng(2);
  std::vector<double> a, b, ea, eb;
  for (int i = 0; i < 40; ++i) {
    a.push_back(rng.normal());
    b.push_back(rng.normal() + 0.7);
  }
  for (double v : a) ea.push_back(std::exp(3.0 * v));
  for (double v : b) eb.push_back(std::exp(3.0 * v));
  const double auc = threshold_detector_eval(records(a, b), "ssim").auc;
  CHECK(auc > 0.5);
  CHECK(auc <= 1.0);
  CHECK(threshold_detector_eval(records(ea, eb), "ssim").auc == auc);
}

TEST_CASE("detection experiment emits paired records") {
  const std::vector<mri::Sample> one{sample(3)};
  const auto model = recon::ReconModel::unet_lite(16, 16, 2, true, 1);
  attack::AttackSpec spec;
  spec.iters = 3;
  spec.shape.length = 5;
  const recon::TvParams tv{1e-3, 20, 1e-2};
  const auto run = run_detection_experiment(one, model, spec, tv);
  REQUIRE(run.records.size() == 2);
  CHECK_FALSE(run.records[0].contaminated);
  CHECK(run.records[1].contaminated);
  CHECK(run.records[0].id == run.records[1].id);

  const auto again = run_detection_experiment(one, model, spec, tv);
  CHECK(again.records[1].metrics.ssim == run.records[1].metrics.ssim);
}

TEST_CASE("zero budget contamination is undetectable") {
  const std::vector<mri::Sample> data{sample(4), sample(5), sample(6)};
  const auto model = recon::ReconModel::unet_lite(16, 16, 2, true, 2);
  attack::AttackSpec spec;
  spec.epsilon = 0.0;
  spec.alpha = 0.0;
  spec.iters = 2;
  spec.shape.length = 5;
  const auto run = run_detection_experiment(data, model, spec, {1e-3, 20, 1e-2});
  REQUIRE(run.records.size() == 6);
  for (std::size_t i = 0; i < 6; i += 2) {
    CHECK(run.records[i].metrics.psnr == run.records[i + 1].metrics.psnr);
    CHECK(run.records[i].metrics.ssim == run.records[i + 1].metrics.ssim);
  }
  for (const char* m : {"psnr", "nrmse", "ssim"}) CHECK(threshold_detector_eval(run.records, m).auc == 0.5);
}

TEST_CASE("records round-trip through json") {
  const DetectionRecord r{"s1", true, {31.5, 0.12, 0.91}};
  const auto back = record_from_json(io::Json::parse(to_json(r).dump()));
  CHECK(back.id == "s1");
  CHECK(back.contaminated);
  CHECK(back.metrics.psnr == 31.5);
  CHECK(back.metrics.ssim == 0.91);
}
