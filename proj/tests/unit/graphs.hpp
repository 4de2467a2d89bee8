#pragma once

// Gradient-check harness shared by the tape unit tests and the acceptance suite.

#include <algorithm>
#include <functional>
#include <vector>

#include "mrih/numerics/tape.hpp"
#include "oracles.hpp"

namespace graphs {

using mrih::RealTensor;
using mrih::ad::Tape;
using mrih::ad::Var;

/// Builds a scalar from real leaves registered on the tape.
using Builder = std::function<Var(Tape&, const std::vector<Var>&)>;

/// Largest per-coordinate relative error between taped and central-difference
/// gradients over all leaves.
inline double max_grad_error(const Builder& build, const std::vector<RealTensor>& leaves, double h = 1e-5,
                             double floor = 1e-6) {
  Tape tape;
  std::vector<Var> vars;
  for (const auto& t : leaves) vars.push_back(tape.leaf(t));
  const Var root = build(tape, vars);
  tape.backward(root);

  double worst = 0.0;
  for (std::size_t li = 0; li < leaves.size(); ++li) {
    const RealTensor analytic = tape.grad_real(vars[li]);
    auto f = [&](const std::vector<double>& flat) {
      Tape t;
      std::vector<Var> vs;
      for (std::size_t k = 0; k < leaves.size(); ++k) {
        vs.push_back(t.constant(k == li ? RealTensor(leaves[k].shape(), flat) : leaves[k]));
      }
      return t.scalar(build(t, vs));
    };
    const auto numeric = oracle::central_diff(f, leaves[li].storage(), h);
    for (std::size_t i = 0; i < numeric.size(); ++i) {
      worst = std::max(worst, oracle::grad_rel_err(analytic[i], numeric[i], floor));
    }
  }
  return worst;
}

/// conv -> relu -> fft2c -> magnitude -> masked squared error, over leaves
/// (image [1, n, n], kernel [2, 1, 3, 3], bias [2], second conv [1, 2, 3, 3]).
inline double composite_graph_error(std::uint64_t seed, std::size_t n) {
  mrih::Rng rng(seed);
  const RealTensor x = oracle::random_real({1, n, n}, rng);
  const RealTensor k1 = oracle::random_real({2, 1, 3, 3}, rng);
  const RealTensor b1 = oracle::random_real({2}, rng, -0.2, 0.2);
  const RealTensor k2 = oracle::random_real({1, 2, 3, 3}, rng);
  const RealTensor imag = oracle::random_real({n, n}, rng);
  const RealTensor target = oracle::random_real({n, n}, rng, 0.0, 2.0);
  RealTensor weights({n, n});
  for (auto& w : weights.storage()) w = rng.uniform() < 0.5 ? 1.0 : 0.0;
  weights[0] = 1.0;

  const Builder build = [&](Tape& t, const std::vector<Var>& v) {
    const Var h1 = t.relu(t.conv2d(v[0], v[1], v[2]));
    const Var h2 = t.conv2d(h1, v[3], t.constant(RealTensor({1})));
    const Var img = t.reshape(h2, {n, n});
    const Var z = t.complex_from(img, t.constant(imag));
    const Var mag = t.abs(t.fft2c(z));
    return t.weighted_sq_dist(mag, t.constant(target), t.constant(weights));
  };
  return max_grad_error(build, {x, k1, b1, k2});
}

}  // namespace graphs
