#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "mrih/attack/attack.hpp"
#include "mrih/mri/dataset.hpp"
#include "mrih/mri/forward.hpp"
#include "oracles.hpp"

using namespace mrih;
using namespace mrih::attack;

namespace {

mri::Sample sample(std::size_t n, std::uint64_t seed) {
  mri::DatasetSpec spec;
  spec.count = 1;
  spec.height = n;
  spec.width = n;
  spec.coils = 2;
  spec.seed = seed;
  spec.coil_seed = seed;
  return mri::generate_dataset(spec).front();
}

double sum(const RealTensor& t) {
  double s = 0.0;
  for (double v : t.data()) s += v;
  return s;
}

// Elementwise transcription of the loss definition.
double naive_loss(const RealTensor& x, const RealTensor& clean, const RealTensor& y, const RealTensor& m) {
  double a = 0.0, b = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (m[i] == 1.0) {
      a += (x[i] - y[i]) * (x[i] - y[i]);
      na += 1.0;
    } else {
      b += (x[i] - clean[i]) * (x[i] - clean[i]);
      nb += 1.0;
    }
  }
  return a / na + b / nb;
}

AttackSpec quick_spec(std::size_t iters, std::uint64_t seed) {
  AttackSpec s;
  s.epsilon = 0.05;
  s.alpha = 0.005;
  s.iters = iters;
  s.seed = seed;
  s.shape.length = 5;
  s.shape.thickness = 1;
  s.mask_dilation = 1;
  return s;
}

}  // namespace

TEST_CASE("default target is an 11x2 centred line") {
  RealTensor img({32, 32}, 0.25);
  img.at(0, 0) = 0.75;
  const Target t = render_target(img, TargetShape{}, 0);
  CHECK(sum(t.support) == 22.0);
  CHECK(t.mask == t.support);
  CHECK(t.support.at(15, 11) == 1.0);
  CHECK(t.support.at(16, 21) == 1.0);
  CHECK(t.support.at(17, 16) == 0.0);
  CHECK(t.y_t.at(16, 16) == 0.75);
  CHECK_FALSE(t.degenerate);
}

TEST_CASE("one-pixel line without dilation marks exactly its pixels") {
  TargetShape line;
  line.thickness = 1;
  line.length = 7;
  line.vertical = true;
  const Target t = render_target(mri::gen_phantom(16, 16, 4, 2), line, 0);
  CHECK(sum(t.mask) == 7.0);
}

TEST_CASE("target leaves the image untouched outside the shape") {
  const RealTensor clean = mri::gen_phantom(32, 32, 6, 3);
  for (ShapeKind kind : {ShapeKind::line, ShapeKind::rectangle, ShapeKind::ellipse}) {
    TargetShape s;
    s.kind = kind;
    s.height = 6;
    s.width = 10;
    const Target t = render_target(clean, s, 2);
    for (std::size_t i = 0; i < clean.size(); ++i) {
      if (t.support[i] == 0.0) CHECK(t.y_t[i] == clean[i]);
      else CHECK(t.y_t[i] == max_value(clean));
      CHECK((t.mask[i] == 0.0 || t.mask[i] == 1.0));
      if (t.support[i] == 1.0) CHECK(t.mask[i] == 1.0);
    }
    CHECK(sum(t.mask) > sum(t.support));
  }
}

TEST_CASE("square dilation grows a single pixel into a block") {
  TargetShape dot;
  dot.kind = ShapeKind::rectangle;
  dot.height = 1;
  dot.width = 1;
  const Target t = render_target(RealTensor({16, 16}, 1.0), dot, 2);
  CHECK(sum(t.mask) == 25.0);
}

TEST_CASE("all-zero image gives an invisible but marked target") {
  const Target t = render_target(RealTensor({16, 16}), TargetShape{}, 2);
  CHECK(max_abs(t.y_t) == 0.0);
  CHECK(sum(t.mask) > 0.0);
  CHECK(t.degenerate);
}

TEST_CASE("targets outside the image are rejected") {
  TargetShape s;
  s.length = 40;
  CHECK_THROWS_AS(render_target(RealTensor({32, 32}), s, 0), ValueError);
  TargetShape corner;
  corner.row = 0;
  CHECK_THROWS_AS(render_target(RealTensor({32, 32}), corner, 0), ValueError);
}

TEST_CASE("attack loss matches a direct sum") {
  Rng rng(4);
  const RealTensor x = oracle::random_real({8, 8}, rng);
  const RealTensor clean = oracle::random_real({8, 8}, rng);
  const RealTensor y = oracle::random_real({8, 8}, rng);
  RealTensor m({8, 8});
  for (std::size_t i = 10; i < 30; ++i) m[i] = 1.0;
  const double expected = naive_loss(x, clean, y, m);
  CHECK(std::abs(attack_loss(x, clean, y, m) - expected) < 1e-12);
  ad::Tape tape;
  CHECK(std::abs(tape.scalar(attack_loss(tape, tape.constant(x), clean, y, m)) - expected) < 1e-12);
}

TEST_CASE("attack loss special cases") {
  const RealTensor clean = mri::gen_phantom(16, 16, 5, 5);
  const Target t = render_target(clean, TargetShape{}, 1);
  CHECK(attack_loss(t.y_t, clean, t.y_t, t.mask) == 0.0);
  double in = 0.0;
  for (std::size_t i = 0; i < clean.size(); ++i) in += t.mask[i] * (clean[i] - t.y_t[i]) * (clean[i] - t.y_t[i]);
  CHECK(attack_loss(clean, clean, t.y_t, t.mask) == doctest::Approx(in / sum(t.mask)).epsilon(1e-14));
  CHECK_THROWS_AS(attack_loss(clean, clean, clean, RealTensor({16, 16})), ValueError);
  CHECK_THROWS_AS(attack_loss(clean, clean, clean, RealTensor({16, 16}, 1.0)), ValueError);
}

TEST_CASE("attack spec validation") {
  AttackSpec s;
  s.alpha = 2.0 * s.epsilon;
  CHECK_THROWS_AS(validate(s), ValueError);
  s = AttackSpec{};
  s.iters = 0;
  CHECK_THROWS_AS(validate(s), ValueError);
  s = AttackSpec{};
  s.epsilon = -1.0;
  CHECK_THROWS_AS(validate(s), ValueError);
}

TEST_CASE("tv cannot be attacked") {
  const auto s = sample(16, 1);
  const auto m = recon::ReconModel::tv(16, 16, 2, {});
  CHECK_THROWS_AS(masked_iterative_fgsm(m, s.kspace, mri::acquisition_of(s), quick_spec(2, 0)), ValueError);
}

TEST_CASE("single step with zero alpha returns the random start") {
  const auto s = sample(16, 2);
  const auto acq = mri::acquisition_of(s);
  const auto m = recon::ReconModel::zero_fill(16, 16, 2);
  AttackSpec spec = quick_spec(1, 7);
  spec.alpha = 0.0;
  const auto r = masked_iterative_fgsm(m, s.kspace, acq, spec);
  Rng rng(7);
  for (std::size_t k = 0; k < r.delta_star.size(); ++k) {
    const double expected = acq.mask.pattern[k % 16] ? rng.uniform(-r.epsilon_abs, r.epsilon_abs) : 0.0;
    CHECK(r.delta_star[k] == expected);
  }
  REQUIRE(r.loss_trace.size() == 1);
  CHECK(r.best_loss == r.loss_trace[0]);
}

TEST_CASE("zero budget leaves the reconstruction unchanged") {
  const auto s = sample(16, 3);
  const auto acq = mri::acquisition_of(s);
  const auto m = recon::ReconModel::unet_lite(16, 16, 2, true, 1);
  AttackSpec spec = quick_spec(3, 1);
  spec.epsilon = 0.0;
  spec.alpha = 0.0;
  const auto r = masked_iterative_fgsm(m, s.kspace, acq, spec);
  CHECK(max_abs(r.delta_star) == 0.0);
  CHECK(r.perturbed_recon == r.clean_recon);
  CHECK(r.best_loss == doctest::Approx(attack_loss(r.clean_recon, r.clean_recon, r.target.y_t, r.target.mask))
                           .epsilon(1e-12));
}

TEST_CASE("attack invariants on a learned model") {
  const auto s = sample(16, 4);
  const auto acq = mri::acquisition_of(s);
  auto m = recon::ReconModel::varnet_lite(16, 16, 2, 2, 3);
  Rng rng(8);
  for (auto& v : m.parameter("cascade0.conv2.weight").storage()) v = 0.2 * rng.normal();
  const AttackSpec spec = quick_spec(12, 5);
  const auto r = masked_iterative_fgsm(m, s.kspace, acq, spec);

  CHECK(max_abs(r.delta_star) <= r.epsilon_abs);
  CHECK(r.best_loss == *std::min_element(r.loss_trace.begin(), r.loss_trace.end()));
  CHECK(r.best_loss == r.loss_trace[r.best_iter]);
  CHECK(r.best_loss < r.loss_trace.front());
  for (std::size_t k = 0; k < s.kspace.size(); ++k) {
    CHECK(r.perturbed_kspace[k].imag() == s.kspace[k].imag());
    if (!acq.mask.pattern[k % 16]) CHECK(r.delta_star[k] == 0.0);
  }

  // Re-evaluating the loss at delta* reproduces best_loss.
  ad::Tape tape;
  const auto params = m.bind(tape, false);
  const auto out = m.apply(tape, tape.constant(r.perturbed_kspace), acq, params);
  const double again = tape.scalar(attack_loss(tape, out, r.clean_recon, r.target.y_t, r.target.mask));
  CHECK(std::abs(again - r.best_loss) <= 1e-12);

  // Deterministic per seed, and the best loss can only improve with more iterations.
  const auto r2 = masked_iterative_fgsm(m, s.kspace, acq, spec);
  CHECK(r2.delta_star == r.delta_star);
  CHECK(r2.loss_trace == r.loss_trace);
  double previous = std::numeric_limits<double>::infinity();
  for (std::size_t t : {1u, 4u, 8u, 12u}) {
    const double b = masked_iterative_fgsm(m, s.kspace, acq, quick_spec(t, 5)).best_loss;
    CHECK(b <= previous);
    previous = b;
  }
}

TEST_CASE("absolute budget and unit clipping") {
  const auto s = sample(16, 6);
  const auto acq = mri::acquisition_of(s);
  const auto m = recon::ReconModel::zero_fill(16, 16, 2);
  AttackSpec spec = quick_spec(4, 2);
  spec.budget = BudgetMode::absolute;
  spec.epsilon = 1e-6;
  spec.alpha = 1e-7;
  auto r = masked_iterative_fgsm(m, s.kspace, acq, spec);
  CHECK(r.epsilon_abs == 1e-6);
  CHECK(r.alpha_abs == 1e-7);
  CHECK(max_abs(r.delta_star) <= 1e-6);

  spec.clip = ClipMode::unit;
  r = masked_iterative_fgsm(m, s.kspace, acq, spec);
  CHECK(r.clip_lo == 0.0);
  CHECK(r.clip_hi == 1.0);
  for (const auto& v : r.perturbed_kspace.data()) CHECK((v.real() >= 0.0 && v.real() <= 1.0));
}

TEST_CASE("apply_perturbation clips only the real part") {
  const ComplexTensor z({1, 1, 3}, {cdouble(0.5, -2.0), cdouble(-1.0, 3.0), cdouble(2.0, 0.25)});
  const RealTensor d({1, 1, 3}, {0.1, -0.5, 1.0});
  const ComplexTensor out = apply_perturbation(z, d, -1.0, 2.0);
  CHECK(out[0] == cdouble(0.6, -2.0));
  CHECK(out[1] == cdouble(-1.0, 3.0));
  CHECK(out[2] == cdouble(2.0, 0.25));
}
