#include "mrih/attack/attack.hpp"

#include <algorithm>
#include <cmath>

#include "mrih/numerics/rng.hpp"

namespace mrih::attack {

namespace {

template <class E>
E parse_enum(const std::string& s, std::initializer_list<E> values, const char* what) {
  for (E v : values) {
    if (to_string(v) == s) return v;
  }
  throw ValueError(std::string("unknown ") + what + " '" + s + "'");
}

struct Box {
  std::size_t r0, c0, rows, cols;
};

Box shape_box(const TargetShape& s, std::size_t h, std::size_t w) {
  std::size_t rows = 0, cols = 0;
  switch (s.kind) {
    case ShapeKind::line:
      rows = s.vertical ? s.length : s.thickness;
      cols = s.vertical ? s.thickness : s.length;
      break;
    case ShapeKind::rectangle:
    case ShapeKind::ellipse:
      rows = s.height;
      cols = s.width;
      break;
  }
  if (rows == 0 || cols == 0) throw ValueError("target shape has zero extent");
  const std::size_t cr = s.row.value_or(h / 2);
  const std::size_t cc = s.col.value_or(w / 2);
  if (cr < rows / 2 || cc < cols / 2 || cr - rows / 2 + rows > h || cc - cols / 2 + cols > w) {
    throw ValueError("target " + to_string(s.kind) + " of " + std::to_string(rows) + "x" + std::to_string(cols) +
                     " at (" + std::to_string(cr) + ", " + std::to_string(cc) + ") exceeds the " +
                     std::to_string(h) + "x" + std::to_string(w) + " image");
  }
  return {cr - rows / 2, cc - cols / 2, rows, cols};
}

bool inside(const TargetShape& s, const Box& b, std::size_t i, std::size_t j) {
  if (i < b.r0 || i >= b.r0 + b.rows || j < b.c0 || j >= b.c0 + b.cols) return false;
  if (s.kind != ShapeKind::ellipse) return true;
  const double ry = static_cast<double>(b.rows) / 2.0;
  const double rx = static_cast<double>(b.cols) / 2.0;
  const double y = (static_cast<double>(i - b.r0) + 0.5 - ry) / ry;
  const double x = (static_cast<double>(j - b.c0) + 0.5 - rx) / rx;
  return x * x + y * y <= 1.0;
}

double target_term(const RealTensor& x, const RealTensor& y_t, const RealTensor& m) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    num += m[i] * (x[i] - y_t[i]) * (x[i] - y_t[i]);
    den += m[i];
  }
  return num / den;
}

void check_loss_args(const RealTensor& a, const RealTensor& b, const RealTensor& y_t, const RealTensor& m) {
  require_same_shape(a.shape(), b.shape(), "attack_loss");
  require_same_shape(a.shape(), y_t.shape(), "attack_loss");
  require_same_shape(a.shape(), m.shape(), "attack_loss");
  double on = 0.0;
  for (double v : m.data()) on += v;
  if (on == 0.0) throw ValueError("attack_loss: target mask is empty");
  if (on == static_cast<double>(m.size())) throw ValueError("attack_loss: target mask covers the whole image");
}

}  // namespace

std::string to_string(ShapeKind k) {
  switch (k) {
    case ShapeKind::line: return "line";
    case ShapeKind::rectangle: return "rectangle";
    case ShapeKind::ellipse: return "ellipse";
  }
  return "?";
}
ShapeKind parse_shape_kind(const std::string& s) {
  return parse_enum(s, {ShapeKind::line, ShapeKind::rectangle, ShapeKind::ellipse}, "target shape");
}
std::string to_string(BudgetMode m) { return m == BudgetMode::absolute ? "absolute" : "relative"; }
BudgetMode parse_budget_mode(const std::string& s) {
  return parse_enum(s, {BudgetMode::absolute, BudgetMode::relative}, "epsilon mode");
}
std::string to_string(ClipMode m) { return m == ClipMode::data_range ? "data_range" : "unit"; }
ClipMode parse_clip_mode(const std::string& s) {
  return parse_enum(s, {ClipMode::data_range, ClipMode::unit}, "clip mode");
}

void validate(const AttackSpec& s) {
  if (!(s.epsilon >= 0.0) || !std::isfinite(s.epsilon)) throw ValueError("attack: epsilon must be finite and >= 0");
  if (!(s.alpha >= 0.0) || s.alpha > s.epsilon) throw ValueError("attack: alpha must satisfy 0 <= alpha <= epsilon");
  if (s.iters < 1) throw ValueError("attack: iters must be >= 1");
}

Target render_target(const RealTensor& clean, const TargetShape& shape, std::size_t dilation) {
  if (clean.rank() != 2) throw ValueError("render_target: expected an [h, w] image");
  if (!all_finite(clean)) throw ValueError("render_target: clean reconstruction is not finite");
  const std::size_t h = clean.dim(0), w = clean.dim(1);
  const Box box = shape_box(shape, h, w);
  const double white = max_value(clean);

  Target t{clean, RealTensor({h, w}), RealTensor({h, w}), false};
  for (std::size_t i = 0; i < h; ++i) {
    for (std::size_t j = 0; j < w; ++j) {
      if (!inside(shape, box, i, j)) continue;
      t.support.at(i, j) = 1.0;
      t.y_t.at(i, j) = white;
    }
  }
  const auto d = static_cast<std::ptrdiff_t>(dilation);
  for (std::size_t i = 0; i < h; ++i) {
    for (std::size_t j = 0; j < w; ++j) {
      if (t.support.at(i, j) == 0.0) continue;
      for (std::ptrdiff_t di = -d; di <= d; ++di) {
        for (std::ptrdiff_t dj = -d; dj <= d; ++dj) {
          const std::ptrdiff_t r = static_cast<std::ptrdiff_t>(i) + di;
          const std::ptrdiff_t c = static_cast<std::ptrdiff_t>(j) + dj;
          if (r < 0 || c < 0 || r >= static_cast<std::ptrdiff_t>(h) || c >= static_cast<std::ptrdiff_t>(w)) continue;
          t.mask.at(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) = 1.0;
        }
      }
    }
  }
  double change = 0.0;
  for (std::size_t k = 0; k < clean.size(); ++k) change = std::max(change, t.y_t[k] - clean[k]);
  t.degenerate = change <= 1e-3 * max_abs(clean);
  return t;
}

double attack_loss(const RealTensor& x, const RealTensor& clean, const RealTensor& y_t, const RealTensor& m) {
  check_loss_args(x, clean, y_t, m);
  double in = 0.0, out = 0.0, n_in = 0.0, n_out = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double a = x[i] - y_t[i];
    const double b = x[i] - clean[i];
    in += m[i] * a * a;
    out += (1.0 - m[i]) * b * b;
    n_in += m[i];
    n_out += 1.0 - m[i];
  }
  return in / n_in + out / n_out;
}

ad::Var attack_loss(ad::Tape& tape, ad::Var x, const RealTensor& clean, const RealTensor& y_t, const RealTensor& m) {
  check_loss_args(tape.real(x), clean, y_t, m);
  double n_in = 0.0;
  for (double v : m.data()) n_in += v;
  const double n_out = static_cast<double>(m.size()) - n_in;
  RealTensor w_in(m.shape()), w_out(m.shape());
  for (std::size_t i = 0; i < m.size(); ++i) {
    w_in[i] = m[i] / n_in;
    w_out[i] = (1.0 - m[i]) / n_out;
  }
  const auto target = tape.weighted_sq_dist(x, tape.constant(y_t), tape.constant(std::move(w_in)));
  const auto keep = tape.weighted_sq_dist(x, tape.constant(clean), tape.constant(std::move(w_out)));
  return tape.add(target, keep);
}

ComplexTensor apply_perturbation(const ComplexTensor& z, const RealTensor& delta, double lo, double hi) {
  require_same_shape(z.shape(), delta.shape(), "apply_perturbation");
  ComplexTensor out(z.shape());
  for (std::size_t k = 0; k < z.size(); ++k) out[k] = cdouble(std::clamp(z[k].real() + delta[k], lo, hi), z[k].imag());
  return out;
}

AttackResult masked_iterative_fgsm(const recon::ReconModel& model, const ComplexTensor& z,
                                   const mri::Acquisition& acq, const AttackSpec& spec) {
  validate(spec);
  if (!model.differentiable()) {
    throw ValueError("attack: " + recon::to_string(model.variant()) +
                     " is not differentiable; only zero_fill, unet_lite and varnet_lite can be attacked");
  }
  AttackResult res;
  const RealTensor re = real_part(z);
  const RealTensor im = imag_part(z);
  const double scale = spec.budget == BudgetMode::relative ? max_abs(re) : 1.0;
  res.epsilon_abs = spec.epsilon * scale;
  res.alpha_abs = spec.alpha * scale;
  if (spec.clip == ClipMode::unit) {
    res.clip_lo = 0.0;
    res.clip_hi = 1.0;
  } else {
    const auto [lo, hi] = std::minmax_element(re.storage().begin(), re.storage().end());
    res.clip_lo = *lo;
    res.clip_hi = *hi;
  }

  res.clean_recon = model.apply(z, acq);
  res.target = render_target(res.clean_recon, spec.shape, spec.mask_dilation);
  const RealTensor& y_t = res.target.y_t;
  const RealTensor& m = res.target.mask;
  res.target_term_clean = target_term(res.clean_recon, y_t, m);

  const std::size_t w = z.dim(2);
  auto sampled = [&](std::size_t k) { return acq.mask.pattern[k % w] != 0; };
  Rng rng(spec.seed);
  RealTensor delta(re.shape());
  for (std::size_t k = 0; k < delta.size(); ++k) {
    if (sampled(k)) delta[k] = rng.uniform(-res.epsilon_abs, res.epsilon_abs);
  }

  res.best_loss = std::numeric_limits<double>::infinity();
  res.loss_trace.reserve(spec.iters);
  for (std::size_t it = 0; it < spec.iters; ++it) {
    ad::Tape tape;
    const auto params = model.bind(tape, false);
    const auto d = tape.leaf(delta);
    const auto shifted = tape.clip(tape.add(tape.constant(re), d), res.clip_lo, res.clip_hi);
    const auto z_adv = tape.complex_from(shifted, tape.constant(im));
    const auto loss = attack_loss(tape, model.apply(tape, z_adv, acq, params), res.clean_recon, y_t, m);
    const double value = tape.scalar(loss);
    res.loss_trace.push_back(value);
    if (!std::isfinite(value)) {
      std::string trace;
      for (std::size_t k = it >= 5 ? it - 5 : 0; k <= it; ++k) trace += " " + std::to_string(res.loss_trace[k]);
      throw NumericError("attack: loss became non-finite at iteration " + std::to_string(it) + "; recent losses:" +
                         trace);
    }
    if (value < res.best_loss) {
      res.best_loss = value;
      res.best_iter = it;
      res.delta_star = delta;
    }
    tape.backward(loss);
    const RealTensor& g = tape.grad_real(d);
    for (std::size_t k = 0; k < delta.size(); ++k) {
      if (!sampled(k)) continue;
      const double s = g[k] > 0.0 ? 1.0 : (g[k] < 0.0 ? -1.0 : 0.0);
      delta[k] = std::clamp(delta[k] - res.alpha_abs * s, -res.epsilon_abs, res.epsilon_abs);
    }
  }

  res.perturbed_kspace = apply_perturbation(z, res.delta_star, res.clip_lo, res.clip_hi);
  res.perturbed_recon = model.apply(res.perturbed_kspace, acq);
  res.target_term_best = target_term(res.perturbed_recon, y_t, m);
  return res;
}

}  // namespace mrih::attack
