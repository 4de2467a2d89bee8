#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "doctest.h"
#include "graphs.hpp"
#include "mrih/mri/dataset.hpp"
#include "mrih/mri/forward.hpp"
#include "mrih/recon/checkpoint.hpp"
#include "mrih/recon/model.hpp"
#include "mrih/recon/train.hpp"
#include "mrih/recon/tv.hpp"
#include "oracles.hpp"

using namespace mrih;
using namespace mrih::recon;
namespace fs = std::filesystem;

namespace {

double max_abs_diff(const RealTensor& a, const RealTensor& b) {
  REQUIRE(a.shape() == b.shape());
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

mri::Sample small_sample(std::size_t n, std::size_t coils, std::uint64_t seed) {
  mri::DatasetSpec spec;
  spec.count = 1;
  spec.height = n;
  spec.width = n;
  spec.coils = coils;
  spec.seed = seed;
  spec.coil_seed = seed + 1;
  spec.center_fraction = n <= 8 ? 0.25 : 0.125;
  return mri::generate_dataset(spec).front();
}

}  // namespace

TEST_CASE("tv rejects non-positive lambda") {
  const auto s = small_sample(8, 2, 3);
  const auto acq = mri::acquisition_of(s);
  CHECK_THROWS_AS(tv_reconstruct(s.kspace, acq, {0.0, 10, 1e-3}), ValueError);
  CHECK_THROWS_AS(tv_reconstruct(s.kspace, acq, {-1.0, 10, 1e-3}), ValueError);
  CHECK_THROWS_AS(tv_reconstruct(s.kspace, acq, {1e-3, 0, 1e-3}), ValueError);
}

TEST_CASE("tv of zero k-space is the zero image") {
  const auto s = small_sample(16, 2, 4);
  const auto acq = mri::acquisition_of(s);
  const auto r = tv_reconstruct(ComplexTensor(s.kspace.shape()), acq, {1e-2, 25, 1e-3});
  CHECK(max_value(r.image) == 0.0);
  CHECK(r.stable);
}

TEST_CASE("tv objective never increases") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto s = small_sample(32, 4, seed);
    const auto acq = mri::acquisition_of(s);
    for (double lambda : {1e-3, 1e-2, 1e-1}) {
      const auto r = tv_reconstruct(s.kspace, acq, {lambda, 60, 1e-2});
      REQUIRE(r.objective.size() == 61);
      CHECK(r.stable);
      for (std::size_t k = 1; k < r.objective.size(); ++k) CHECK(r.objective[k] <= r.objective[k - 1] + 1e-12);
      CHECK(r.objective.back() < r.objective.front());
      CHECK(r.image.shape() == Shape{32, 32});
    }
  }
}

TEST_CASE("tv with full sampling and vanishing lambda recovers the image") {
  const std::size_t n = 32;
  const auto gt = mri::gen_phantom(n, n, 6, 11);
  const auto maps = mri::make_coil_maps(n, n, 4, 12);
  const auto mask = mri::full_mask(n);
  const auto z = mri::forward_model(gt, maps, mask, 0.0, 0);
  const auto r = tv_reconstruct(z, {maps, mask}, {1e-8, 20, 1e-3});
  CHECK(max_abs_diff(r.image, gt) < 1e-3);
}

TEST_CASE("tv on a 1-D step matches a grid-search oracle") {
  const std::size_t n = 16;
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = i < 6 ? 0.3 : 0.8;
  const double lambda = 0.05;
  const oracle::StepFit fit = oracle::grid_search_step(y, lambda);
  CHECK(fit.jump == 6);

  const RealTensor img({n, 1}, y);
  const mri::CoilMaps maps{ComplexTensor({1, n, 1}, cdouble(1.0, 0.0)), 0.0};
  const auto mask = mri::full_mask(1);
  const auto z = mri::forward_model(img, maps, mask, 0.0, 0);
  const auto r = tv_reconstruct(z, {maps, mask}, {lambda, 80000, 1e-4});
  CHECK(r.stable);
  for (std::size_t i = 0; i < n; ++i) {
    const double expected = i < fit.jump ? fit.u : fit.v;
    CHECK(std::abs(r.image[i] - expected) < 1e-3);
  }
}

TEST_CASE("zero_fill model matches the forward-model zero fill") {
  const auto s = small_sample(16, 3, 5);
  const auto m = ReconModel::zero_fill(16, 16, 3);
  CHECK(max_abs_diff(m.apply(s.kspace, mri::acquisition_of(s)), mri::zero_fill(s.kspace)) == 0.0);
}

TEST_CASE("unet_lite with all-zero weights and no residual yields zero") {
  const auto s = small_sample(16, 2, 6);
  auto m = ReconModel::unet_lite(16, 16, 2, false, 1);
  for (auto& p : m.parameters()) std::fill(p.value.storage().begin(), p.value.storage().end(), 0.0);
  const RealTensor out = m.apply(s.kspace, mri::acquisition_of(s));
  CHECK(max_abs(out) == 0.0);
}

TEST_CASE("residual unet_lite starts as zero fill") {
  const auto s = small_sample(32, 4, 7);
  const auto m = ReconModel::unet_lite(32, 32, 4, true, 2);
  CHECK(max_abs_diff(m.apply(s.kspace, mri::acquisition_of(s)), mri::zero_fill(s.kspace)) < 1e-12);
}

TEST_CASE("varnet_lite with zero CNN reduces to zero fill for eta 0 and 1") {
  const auto s = small_sample(32, 4, 8);
  const auto acq = mri::acquisition_of(s);
  auto m = ReconModel::varnet_lite(32, 32, 4, 4, 3);
  CHECK(max_abs_diff(m.apply(s.kspace, acq), mri::zero_fill(s.kspace)) < 1e-12);
  for (std::size_t k = 0; k < 4; ++k) m.parameter("cascade" + std::to_string(k) + ".eta")[0] = 0.0;
  CHECK(max_abs_diff(m.apply(s.kspace, acq), mri::zero_fill(s.kspace)) < 1e-12);
}

TEST_CASE("taped and inference paths agree") {
  const auto s = small_sample(32, 4, 9);
  const auto acq = mri::acquisition_of(s);
  Rng rng(77);
  auto unet = ReconModel::unet_lite(32, 32, 4, true, 4);
  for (auto& v : unet.parameter("out.weight").storage()) v = 0.1 * rng.normal();
  auto varnet = ReconModel::varnet_lite(32, 32, 4, 4, 5);
  for (std::size_t k = 0; k < 4; ++k) {
    for (auto& v : varnet.parameter("cascade" + std::to_string(k) + ".conv2.weight").storage()) v = 0.1 * rng.normal();
    varnet.parameter("cascade" + std::to_string(k) + ".eta")[0] = 0.3 + 0.2 * static_cast<double>(k);
  }
  for (const ReconModel* m : {&unet, &varnet}) {
    ad::Tape tape;
    const auto params = m->bind(tape, true);
    const auto out = m->apply(tape, tape.constant(s.kspace), acq, params);
    CHECK(max_abs_diff(tape.real(out), m->apply(s.kspace, acq)) <= 1e-10);
  }
}

TEST_CASE("models reject inputs of the wrong shape") {
  const auto s = small_sample(16, 2, 10);
  const auto acq = mri::acquisition_of(s);
  CHECK_THROWS_AS(ReconModel::unet_lite(32, 32, 2, true, 0).apply(s.kspace, acq), ValueError);
  CHECK_THROWS_AS(ReconModel::varnet_lite(16, 16, 4, 2, 0).apply(s.kspace, acq), ValueError);
  CHECK_THROWS_AS(ReconModel::zero_fill(16, 8, 2).apply(s.kspace, acq), ValueError);
  ad::Tape tape;
  const auto m = ReconModel::tv(16, 16, 2, {});
  CHECK_THROWS_AS(m.apply(tape, tape.constant(s.kspace), acq, {}), ValueError);
}

TEST_CASE("learned models have finite-difference gradients in k-space") {
  const std::size_t n = 8, coils = 2;
  const auto s = small_sample(n, coils, 12);
  const auto acq = mri::acquisition_of(s);
  Rng rng(5);
  auto unet = ReconModel::unet_lite(n, n, coils, false, 21);
  auto varnet = ReconModel::varnet_lite(n, n, coils, 2, 22);
  for (std::size_t k = 0; k < 2; ++k) {
    for (auto& v : varnet.parameter("cascade" + std::to_string(k) + ".conv2.weight").storage()) v = 0.3 * rng.normal();
    varnet.parameter("cascade" + std::to_string(k) + ".eta")[0] = 0.6;
  }
  const RealTensor re = real_part(s.kspace);
  const RealTensor im = imag_part(s.kspace);
  const RealTensor target = oracle::random_real({n, n}, rng, 0.0, 1.0);
  const RealTensor weights({n, n}, 1.0);
  for (const ReconModel* m : {&unet, &varnet}) {
    const graphs::Builder build = [&](ad::Tape& t, const std::vector<ad::Var>& v) {
      const auto params = m->bind(t, false);
      const auto z = t.complex_from(v[0], t.constant(im));
      return t.weighted_sq_dist(m->apply(t, z, acq, params), t.constant(target), t.constant(weights));
    };
    CHECK(graphs::max_grad_error(build, {re}, 1e-6, 1e-6) < 1e-4);
  }
}

TEST_CASE("learning rate zero leaves the model untouched") {
  std::vector<mri::Sample> data{small_sample(16, 2, 13), small_sample(16, 2, 14)};
  auto m = ReconModel::unet_lite(16, 16, 2, true, 6);
  const auto before = m.parameters();
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.batch_size = 1;
  cfg.learning_rate = 0.0;
  const auto r = train(m, data, cfg);
  REQUIRE(r.epoch_loss.size() == 3);
  CHECK(r.epoch_loss[1] == r.epoch_loss[0]);
  CHECK(r.epoch_loss[2] == r.epoch_loss[0]);
  for (std::size_t i = 0; i < before.size(); ++i) CHECK(before[i].value == m.parameters()[i].value);
}

TEST_CASE("training is deterministic per seed") {
  std::vector<mri::Sample> data;
  for (std::uint64_t s = 0; s < 4; ++s) data.push_back(small_sample(16, 2, 20 + s));
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 2;
  cfg.learning_rate = 1e-2;
  cfg.seed = 9;
  auto a = ReconModel::varnet_lite(16, 16, 2, 2, 7);
  auto b = ReconModel::varnet_lite(16, 16, 2, 2, 7);
  const auto ra = train(a, data, cfg);
  const auto rb = train(b, data, cfg);
  CHECK(ra.step_loss == rb.step_loss);
  for (std::size_t i = 0; i < a.parameters().size(); ++i) CHECK(a.parameters()[i].value == b.parameters()[i].value);
}

TEST_CASE("a single phantom can be overfit") {
  const std::vector<mri::Sample> data{small_sample(16, 2, 30)};
  auto m = ReconModel::unet_lite(16, 16, 2, true, 8);
  TrainConfig cfg;
  cfg.epochs = 500;
  cfg.batch_size = 1;
  cfg.learning_rate = 1e-1;
  const auto r = train(m, data, cfg);
  CHECK(r.step_loss.size() == 500);
  CHECK(r.epoch_loss.back() < 0.1 * r.epoch_loss.front());
}

TEST_CASE("non-finite loss aborts training") {
  const std::vector<mri::Sample> data{small_sample(16, 2, 31)};
  auto m = ReconModel::unet_lite(16, 16, 2, true, 9);
  m.parameter("out.bias")[0] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(train(m, data, TrainConfig{}), NumericError);
}

TEST_CASE("training checks its inputs") {
  auto m = ReconModel::unet_lite(16, 16, 2, true, 9);
  CHECK_THROWS_AS(train(m, {}, TrainConfig{}), ValueError);
  TrainConfig bad;
  bad.epochs = 0;
  CHECK_THROWS_AS(train(m, {small_sample(16, 2, 1)}, bad), ValueError);
  CHECK_THROWS_AS(train(m, {small_sample(8, 2, 1)}, TrainConfig{}), ValueError);
}

TEST_CASE("checkpoints round-trip bit-exactly") {
  const fs::path dir = fs::temp_directory_path() / "mrih_test_ckpt";
  fs::remove_all(dir);
  Rng rng(3);
  auto m = ReconModel::varnet_lite(16, 16, 2, 3, 10);
  for (auto& p : m.parameters()) {
    for (auto& v : p.value.storage()) v = rng.normal() * 1e-3 + std::ldexp(1.0, -40);
  }
  save_checkpoint(m, dir);
  const auto back = load_checkpoint(dir);
  CHECK(back.variant() == Variant::varnet_lite);
  CHECK(back.hyper().cascades == 3);
  REQUIRE(back.parameters().size() == m.parameters().size());
  for (std::size_t i = 0; i < m.parameters().size(); ++i) {
    CHECK(back.parameters()[i].name == m.parameters()[i].name);
    CHECK(back.parameters()[i].value == m.parameters()[i].value);
  }

  const auto tvm = ReconModel::tv(16, 16, 2, {3e-3, 40, 1e-2});
  save_checkpoint(tvm, dir / "tv");
  const auto tvb = load_checkpoint(dir / "tv");
  CHECK(tvb.hyper().tv.lambda == 3e-3);
  CHECK(tvb.hyper().tv.iters == 40);

  fs::resize_file(dir / "model.bin", 16);
  CHECK_THROWS_AS(load_checkpoint(dir), DataError);
  CHECK_THROWS_AS(load_checkpoint(dir / "missing"), DataError);
  fs::remove_all(dir);
}
