#include "mrih/numerics/tape.hpp"

#include <algorithm>
#include <cmath>

#include "mrih/numerics/conv.hpp"
#include "mrih/numerics/fft.hpp"

namespace mrih::ad {

namespace {

// Broadcast factor of a mask over the leading dims of x; trailing dims must match.
std::size_t broadcast_count(const Shape& x, const Shape& mask) {
  if (mask.size() > x.size() || !std::equal(mask.rbegin(), mask.rend(), x.rbegin())) {
    throw ValueError("mul_mask: mask shape " + to_string(mask) + " does not match trailing dims of " +
                     to_string(x));
  }
  return numel(x) / numel(mask);
}

}  // namespace

const Tape::Node& Tape::node(Var v) const {
  if (v.id >= nodes_.size()) throw ValueError("tape: invalid variable handle");
  return nodes_[v.id];
}

Var Tape::push(Node n) {
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

Var Tape::push_real(Op op, RealTensor value, std::initializer_list<Var> inputs) {
  Node n;
  n.op = op;
  n.rv = std::move(value);
  auto it = inputs.begin();
  if (it != inputs.end()) n.a = (it++)->id;
  if (it != inputs.end()) n.b = (it++)->id;
  if (it != inputs.end()) n.c = (it++)->id;
  for (Var v : inputs) n.needs_grad = n.needs_grad || node(v).needs_grad;
  return push(std::move(n));
}

Var Tape::push_complex(Op op, ComplexTensor value, std::initializer_list<Var> inputs) {
  Node n;
  n.op = op;
  n.is_complex = true;
  n.cv = std::move(value);
  auto it = inputs.begin();
  if (it != inputs.end()) n.a = (it++)->id;
  if (it != inputs.end()) n.b = (it++)->id;
  if (it != inputs.end()) n.c = (it++)->id;
  for (Var v : inputs) n.needs_grad = n.needs_grad || node(v).needs_grad;
  return push(std::move(n));
}

void Tape::require_real(Var v, const char* op) const {
  if (node(v).is_complex) throw ValueError(std::string(op) + ": expected a real operand");
}

void Tape::require_complex(Var v, const char* op) const {
  if (!node(v).is_complex) throw ValueError(std::string(op) + ": expected a complex operand");
}

void Tape::require_scalar(Var v, const char* op) const {
  require_real(v, op);
  if (node(v).rv.size() != 1) throw ValueError(std::string(op) + ": expected a scalar operand");
}

Var Tape::leaf(RealTensor value) {
  Node n;
  n.op = Op::Leaf;
  n.needs_grad = true;
  n.rv = std::move(value);
  return push(std::move(n));
}

Var Tape::leaf(ComplexTensor value) {
  Node n;
  n.op = Op::Leaf;
  n.is_complex = true;
  n.needs_grad = true;
  n.cv = std::move(value);
  return push(std::move(n));
}

Var Tape::constant(RealTensor value) {
  Node n;
  n.op = Op::Constant;
  n.rv = std::move(value);
  return push(std::move(n));
}

Var Tape::constant(ComplexTensor value) {
  Node n;
  n.op = Op::Constant;
  n.is_complex = true;
  n.cv = std::move(value);
  return push(std::move(n));
}

Var Tape::add(Var a, Var b) {
  const Node& na = node(a);
  const Node& nb = node(b);
  if (na.is_complex != nb.is_complex) throw ValueError("add: operands differ in kind");
  if (na.is_complex) {
    require_same_shape(na.cv.shape(), nb.cv.shape(), "add");
    ComplexTensor out = na.cv;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += nb.cv[i];
    return push_complex(Op::Add, std::move(out), {a, b});
  }
  require_same_shape(na.rv.shape(), nb.rv.shape(), "add");
  RealTensor out = na.rv;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += nb.rv[i];
  return push_real(Op::Add, std::move(out), {a, b});
}

Var Tape::sub(Var a, Var b) {
  const Node& na = node(a);
  const Node& nb = node(b);
  if (na.is_complex != nb.is_complex) throw ValueError("sub: operands differ in kind");
  if (na.is_complex) {
    require_same_shape(na.cv.shape(), nb.cv.shape(), "sub");
    ComplexTensor out = na.cv;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= nb.cv[i];
    return push_complex(Op::Sub, std::move(out), {a, b});
  }
  require_same_shape(na.rv.shape(), nb.rv.shape(), "sub");
  RealTensor out = na.rv;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= nb.rv[i];
  return push_real(Op::Sub, std::move(out), {a, b});
}

Var Tape::mul(Var a, Var b) {
  const Node& na = node(a);
  const Node& nb = node(b);
  if (na.is_complex != nb.is_complex) throw ValueError("mul: operands differ in kind");
  if (na.is_complex) {
    require_same_shape(na.cv.shape(), nb.cv.shape(), "mul");
    ComplexTensor out = na.cv;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= nb.cv[i];
    return push_complex(Op::Mul, std::move(out), {a, b});
  }
  require_same_shape(na.rv.shape(), nb.rv.shape(), "mul");
  RealTensor out = na.rv;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= nb.rv[i];
  return push_real(Op::Mul, std::move(out), {a, b});
}

Var Tape::mul_mask(Var x, Var mask) {
  require_real(mask, "mul_mask");
  if (node(mask).needs_grad) throw ValueError("mul_mask: mask must be a constant");
  const Node& nx = node(x);
  const RealTensor& m = node(mask).rv;
  const Shape& xs = nx.is_complex ? nx.cv.shape() : nx.rv.shape();
  broadcast_count(xs, m.shape());
  const std::size_t period = m.size();
  if (nx.is_complex) {
    ComplexTensor out = nx.cv;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= m[i % period];
    return push_complex(Op::MulMask, std::move(out), {x, mask});
  }
  RealTensor out = nx.rv;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= m[i % period];
  return push_real(Op::MulMask, std::move(out), {x, mask});
}

Var Tape::scale(Var x, double c) {
  const Node& nx = node(x);
  Var out;
  if (nx.is_complex) {
    ComplexTensor v = nx.cv;
    for (auto& e : v.storage()) e *= c;
    out = push_complex(Op::Scale, std::move(v), {x});
  } else {
    RealTensor v = nx.rv;
    for (auto& e : v.storage()) e *= c;
    out = push_real(Op::Scale, std::move(v), {x});
  }
  nodes_[out.id].p0 = c;
  return out;
}

Var Tape::add_scalar(Var x, double c) {
  require_real(x, "add_scalar");
  RealTensor v = node(x).rv;
  for (auto& e : v.storage()) e += c;
  return push_real(Op::AddScalar, std::move(v), {x});
}

Var Tape::scale_by(Var x, Var s) {
  require_scalar(s, "scale_by");
  const double sv = node(s).rv[0];
  const Node& nx = node(x);
  if (nx.is_complex) {
    ComplexTensor v = nx.cv;
    for (auto& e : v.storage()) e *= sv;
    return push_complex(Op::ScaleBy, std::move(v), {x, s});
  }
  RealTensor v = nx.rv;
  for (auto& e : v.storage()) e *= sv;
  return push_real(Op::ScaleBy, std::move(v), {x, s});
}

Var Tape::divide_by(Var x, Var s) {
  require_scalar(s, "divide_by");
  const double sv = node(s).rv[0];
  if (sv == 0.0) throw NumericError("divide_by: division by zero");
  const Node& nx = node(x);
  if (nx.is_complex) {
    ComplexTensor v = nx.cv;
    for (auto& e : v.storage()) e /= sv;
    return push_complex(Op::DivideBy, std::move(v), {x, s});
  }
  RealTensor v = nx.rv;
  for (auto& e : v.storage()) e /= sv;
  return push_real(Op::DivideBy, std::move(v), {x, s});
}

Var Tape::conv2d(Var x, Var kernel, Var bias) {
  require_real(x, "conv2d");
  require_real(kernel, "conv2d");
  require_real(bias, "conv2d");
  return push_real(Op::Conv2d, mrih::conv2d(node(x).rv, node(kernel).rv, node(bias).rv), {x, kernel, bias});
}

Var Tape::relu(Var x) {
  require_real(x, "relu");
  return push_real(Op::Relu, mrih::relu(node(x).rv), {x});
}

Var Tape::avg_pool2(Var x) {
  require_real(x, "avg_pool2");
  return push_real(Op::AvgPool2, mrih::avg_pool2(node(x).rv), {x});
}

Var Tape::upsample2(Var x) {
  require_real(x, "upsample2");
  return push_real(Op::Upsample2, mrih::upsample2(node(x).rv), {x});
}

Var Tape::concat(Var a, Var b) {
  require_real(a, "concat");
  require_real(b, "concat");
  const RealTensor& ra = node(a).rv;
  const RealTensor& rb = node(b).rv;
  if (ra.rank() != 3 || rb.rank() != 3 || ra.dim(1) != rb.dim(1) || ra.dim(2) != rb.dim(2)) {
    throw ValueError("concat: expected [C, H, W] operands with equal spatial size");
  }
  std::vector<double> data(ra.storage());
  data.insert(data.end(), rb.storage().begin(), rb.storage().end());
  return push_real(Op::Concat, RealTensor({ra.dim(0) + rb.dim(0), ra.dim(1), ra.dim(2)}, std::move(data)), {a, b});
}

Var Tape::reshape(Var x, Shape shape) {
  const Node& nx = node(x);
  if (nx.is_complex) return push_complex(Op::Reshape, nx.cv.reshaped(std::move(shape)), {x});
  return push_real(Op::Reshape, nx.rv.reshaped(std::move(shape)), {x});
}

Var Tape::clip(Var x, double lo, double hi) {
  require_real(x, "clip");
  if (!(lo <= hi)) throw ValueError("clip: lo must not exceed hi");
  RealTensor v = node(x).rv;
  for (auto& e : v.storage()) e = std::clamp(e, lo, hi);
  const Var out = push_real(Op::Clip, std::move(v), {x});
  nodes_[out.id].p0 = lo;
  nodes_[out.id].p1 = hi;
  return out;
}

Var Tape::fft2c(Var x) {
  require_complex(x, "fft2c");
  return push_complex(Op::Fft2c, mrih::fft2c(node(x).cv), {x});
}

Var Tape::ifft2c(Var x) {
  require_complex(x, "ifft2c");
  return push_complex(Op::Ifft2c, mrih::ifft2c(node(x).cv), {x});
}

Var Tape::abs(Var x) {
  require_complex(x, "abs");
  return push_real(Op::Abs, mrih::abs(node(x).cv), {x});
}

Var Tape::rss(Var x) {
  require_complex(x, "rss");
  const ComplexTensor& v = node(x).cv;
  if (v.rank() != 3) throw ValueError("rss: expected [C, H, W], got " + to_string(v.shape()));
  const std::size_t plane = v.dim(1) * v.dim(2);
  RealTensor out({v.dim(1), v.dim(2)});
  for (std::size_t c = 0; c < v.dim(0); ++c) {
    for (std::size_t p = 0; p < plane; ++p) out[p] += std::norm(v[c * plane + p]);
  }
  for (auto& e : out.storage()) e = std::sqrt(e);
  return push_real(Op::Rss, std::move(out), {x});
}

Var Tape::complex_from(Var re, Var im) {
  require_real(re, "complex_from");
  require_real(im, "complex_from");
  return push_complex(Op::ComplexFrom, to_complex(node(re).rv, node(im).rv), {re, im});
}

Var Tape::real_part(Var x) {
  require_complex(x, "real_part");
  return push_real(Op::RealPart, mrih::real_part(node(x).cv), {x});
}

Var Tape::expand_coils(Var maps, Var image) {
  require_complex(maps, "expand_coils");
  require_real(image, "expand_coils");
  const ComplexTensor& m = node(maps).cv;
  const RealTensor& img = node(image).rv;
  if (m.rank() != 3 || img.rank() != 2 || m.dim(1) != img.dim(0) || m.dim(2) != img.dim(1)) {
    throw ValueError("expand_coils: maps " + to_string(m.shape()) + " incompatible with image " +
                     to_string(img.shape()));
  }
  ComplexTensor out(m.shape());
  const std::size_t plane = img.size();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = m[i] * img[i % plane];
  return push_complex(Op::ExpandCoils, std::move(out), {maps, image});
}

Var Tape::sum(Var x) {
  require_real(x, "sum");
  double s = 0.0;
  for (double v : node(x).rv.data()) s += v;
  return push_real(Op::Sum, RealTensor({1}, {s}), {x});
}

Var Tape::max(Var x) {
  require_real(x, "max");
  const RealTensor& v = node(x).rv;
  if (v.empty()) throw ValueError("max: empty operand");
  const auto it = std::max_element(v.data().begin(), v.data().end());
  const auto index = static_cast<std::size_t>(it - v.data().begin());
  const double value = *it;
  const Var out = push_real(Op::Max, RealTensor({1}, {value}), {x});
  nodes_[out.id].index = index;
  return out;
}

Var Tape::weighted_sq_dist(Var x, Var target, Var weights) {
  require_real(x, "weighted_sq_dist");
  require_real(target, "weighted_sq_dist");
  require_real(weights, "weighted_sq_dist");
  if (node(weights).needs_grad) throw ValueError("weighted_sq_dist: weights must be constant");
  const RealTensor& xv = node(x).rv;
  const RealTensor& tv = node(target).rv;
  const RealTensor& wv = node(weights).rv;
  require_same_shape(xv.shape(), tv.shape(), "weighted_sq_dist");
  require_same_shape(xv.shape(), wv.shape(), "weighted_sq_dist");
  double s = 0.0;
  for (std::size_t i = 0; i < xv.size(); ++i) {
    const double d = xv[i] - tv[i];
    s += wv[i] * d * d;
  }
  return push_real(Op::WeightedSqDist, RealTensor({1}, {s}), {x, target, weights});
}

Var Tape::weighted_abs_dist(Var x, Var target, Var weights) {
  require_real(x, "weighted_abs_dist");
  require_real(target, "weighted_abs_dist");
  require_real(weights, "weighted_abs_dist");
  if (node(weights).needs_grad) throw ValueError("weighted_abs_dist: weights must be constant");
  const RealTensor& xv = node(x).rv;
  const RealTensor& tv = node(target).rv;
  const RealTensor& wv = node(weights).rv;
  require_same_shape(xv.shape(), tv.shape(), "weighted_abs_dist");
  require_same_shape(xv.shape(), wv.shape(), "weighted_abs_dist");
  double s = 0.0;
  for (std::size_t i = 0; i < xv.size(); ++i) s += wv[i] * std::abs(xv[i] - tv[i]);
  return push_real(Op::WeightedAbsDist, RealTensor({1}, {s}), {x, target, weights});
}

Var Tape::sum_squares(Var x) {
  const Node& nx = node(x);
  const double s = nx.is_complex ? mrih::sum_squares(nx.cv) : mrih::sum_squares(nx.rv);
  return push_real(Op::SumSquares, RealTensor({1}, {s}), {x});
}

bool Tape::is_complex(Var v) const { return node(v).is_complex; }
bool Tape::requires_grad(Var v) const { return node(v).needs_grad; }

const Shape& Tape::shape(Var v) const {
  const Node& n = node(v);
  return n.is_complex ? n.cv.shape() : n.rv.shape();
}

const RealTensor& Tape::real(Var v) const {
  require_real(v, "real");
  return node(v).rv;
}

const ComplexTensor& Tape::complex(Var v) const {
  require_complex(v, "complex");
  return node(v).cv;
}

double Tape::scalar(Var v) const {
  require_scalar(v, "scalar");
  return node(v).rv[0];
}

const RealTensor& Tape::grad_real(Var v) const {
  require_real(v, "grad_real");
  const Node& n = node(v);
  if (n.rg.size() != n.rv.size()) throw ValueError("grad_real: no gradient; call backward first");
  return n.rg;
}

const ComplexTensor& Tape::grad_complex(Var v) const {
  require_complex(v, "grad_complex");
  const Node& n = node(v);
  if (n.cg.size() != n.cv.size()) throw ValueError("grad_complex: no gradient; call backward first");
  return n.cg;
}

void Tape::backward(Var root) {
  const Node& r = node(root);
  if (r.is_complex || r.rv.size() != 1) {
    throw ValueError("backward: root must be a real scalar, got shape " + to_string(shape(root)));
  }
  for (Node& n : nodes_) {
    if (n.is_complex) {
      n.cg = ComplexTensor(n.cv.shape());
    } else {
      n.rg = RealTensor(n.rv.shape());
    }
  }
  nodes_[root.id].rg[0] = 1.0;
  for (std::size_t i = root.id + 1; i-- > 0;) {
    if (nodes_[i].needs_grad) backprop(i);
  }
}

void Tape::backprop(std::size_t i) {
  Node& n = nodes_[i];
  auto wants = [&](std::size_t id) { return id != Var::npos && nodes_[id].needs_grad; };

  switch (n.op) {
    case Op::Leaf:
    case Op::Constant:
      break;

    case Op::Add:
    case Op::Sub: {
      const double sign = n.op == Op::Add ? 1.0 : -1.0;
      if (n.is_complex) {
        if (wants(n.a)) for (std::size_t k = 0; k < n.cg.size(); ++k) nodes_[n.a].cg[k] += n.cg[k];
        if (wants(n.b)) for (std::size_t k = 0; k < n.cg.size(); ++k) nodes_[n.b].cg[k] += sign * n.cg[k];
      } else {
        if (wants(n.a)) for (std::size_t k = 0; k < n.rg.size(); ++k) nodes_[n.a].rg[k] += n.rg[k];
        if (wants(n.b)) for (std::size_t k = 0; k < n.rg.size(); ++k) nodes_[n.b].rg[k] += sign * n.rg[k];
      }
      break;
    }

    case Op::Mul: {
      Node& na = nodes_[n.a];
      Node& nb = nodes_[n.b];
      if (n.is_complex) {
        if (wants(n.a)) for (std::size_t k = 0; k < n.cg.size(); ++k) na.cg[k] += n.cg[k] * std::conj(nb.cv[k]);
        if (wants(n.b)) for (std::size_t k = 0; k < n.cg.size(); ++k) nb.cg[k] += n.cg[k] * std::conj(na.cv[k]);
      } else {
        if (wants(n.a)) for (std::size_t k = 0; k < n.rg.size(); ++k) na.rg[k] += n.rg[k] * nb.rv[k];
        if (wants(n.b)) for (std::size_t k = 0; k < n.rg.size(); ++k) nb.rg[k] += n.rg[k] * na.rv[k];
      }
      break;
    }

    case Op::MulMask: {
      const RealTensor& m = nodes_[n.b].rv;
      const std::size_t period = m.size();
      Node& na = nodes_[n.a];
      if (n.is_complex) {
        for (std::size_t k = 0; k < n.cg.size(); ++k) na.cg[k] += n.cg[k] * m[k % period];
      } else {
        for (std::size_t k = 0; k < n.rg.size(); ++k) na.rg[k] += n.rg[k] * m[k % period];
      }
      break;
    }

    case Op::Scale: {
      Node& na = nodes_[n.a];
      if (n.is_complex) {
        for (std::size_t k = 0; k < n.cg.size(); ++k) na.cg[k] += n.p0 * n.cg[k];
      } else {
        for (std::size_t k = 0; k < n.rg.size(); ++k) na.rg[k] += n.p0 * n.rg[k];
      }
      break;
    }

    case Op::AddScalar: {
      Node& na = nodes_[n.a];
      for (std::size_t k = 0; k < n.rg.size(); ++k) na.rg[k] += n.rg[k];
      break;
    }

    case Op::ScaleBy:
    case Op::DivideBy: {
      Node& na = nodes_[n.a];
      Node& ns = nodes_[n.b];
      const double s = ns.rv[0];
      const double f = n.op == Op::ScaleBy ? s : 1.0 / s;
      // d out / d s = a (ScaleBy) or -a / s^2 (DivideBy).
      double ds = 0.0;
      if (n.is_complex) {
        if (wants(n.a)) for (std::size_t k = 0; k < n.cg.size(); ++k) na.cg[k] += f * n.cg[k];
        for (std::size_t k = 0; k < n.cg.size(); ++k) ds += std::real(std::conj(n.cg[k]) * na.cv[k]);
      } else {
        if (wants(n.a)) for (std::size_t k = 0; k < n.rg.size(); ++k) na.rg[k] += f * n.rg[k];
        for (std::size_t k = 0; k < n.rg.size(); ++k) ds += n.rg[k] * na.rv[k];
      }
      if (wants(n.b)) ns.rg[0] += n.op == Op::ScaleBy ? ds : -ds / (s * s);
      break;
    }

    case Op::Conv2d: {
      Node& nx = nodes_[n.a];
      Node& nk = nodes_[n.b];
      Node& nbias = nodes_[n.c];
      conv2d_backward(nx.rv, nk.rv, n.rg, wants(n.a) ? &nx.rg : nullptr, wants(n.b) ? &nk.rg : nullptr,
                      wants(n.c) ? &nbias.rg : nullptr);
      break;
    }

    case Op::Relu: {
      Node& na = nodes_[n.a];
      for (std::size_t k = 0; k < n.rg.size(); ++k) {
        if (na.rv[k] > 0.0) na.rg[k] += n.rg[k];
      }
      break;
    }

    case Op::AvgPool2: {
      Node& na = nodes_[n.a];
      const auto [h, w] = spatial_dims(na.rv.shape());
      const std::size_t planes = na.rv.size() / (h * w);
      for (std::size_t p = 0; p < planes; ++p) {
        for (std::size_t r = 0; r < h; ++r) {
          for (std::size_t c = 0; c < w; ++c) {
            na.rg[p * h * w + r * w + c] += 0.25 * n.rg[p * (h / 2) * (w / 2) + (r / 2) * (w / 2) + c / 2];
          }
        }
      }
      break;
    }

    case Op::Upsample2: {
      Node& na = nodes_[n.a];
      const auto [h, w] = spatial_dims(na.rv.shape());
      const std::size_t planes = na.rv.size() / (h * w);
      for (std::size_t p = 0; p < planes; ++p) {
        for (std::size_t r = 0; r < 2 * h; ++r) {
          for (std::size_t c = 0; c < 2 * w; ++c) {
            na.rg[p * h * w + (r / 2) * w + c / 2] += n.rg[p * 4 * h * w + r * 2 * w + c];
          }
        }
      }
      break;
    }

    case Op::Concat: {
      const std::size_t split = nodes_[n.a].rv.size();
      if (wants(n.a)) for (std::size_t k = 0; k < split; ++k) nodes_[n.a].rg[k] += n.rg[k];
      if (wants(n.b)) {
        for (std::size_t k = split; k < n.rg.size(); ++k) nodes_[n.b].rg[k - split] += n.rg[k];
      }
      break;
    }

    case Op::Reshape: {
      Node& na = nodes_[n.a];
      if (n.is_complex) {
        for (std::size_t k = 0; k < n.cg.size(); ++k) na.cg[k] += n.cg[k];
      } else {
        for (std::size_t k = 0; k < n.rg.size(); ++k) na.rg[k] += n.rg[k];
      }
      break;
    }

    case Op::Clip: {
      Node& na = nodes_[n.a];
      for (std::size_t k = 0; k < n.rg.size(); ++k) {
        if (na.rv[k] >= n.p0 && na.rv[k] <= n.p1) na.rg[k] += n.rg[k];
      }
      break;
    }

    case Op::Fft2c:
    case Op::Ifft2c: {
      // Unitary maps: the adjoint is the inverse.
      const ComplexTensor back = n.op == Op::Fft2c ? mrih::ifft2c(n.cg) : mrih::fft2c(n.cg);
      Node& na = nodes_[n.a];
      for (std::size_t k = 0; k < back.size(); ++k) na.cg[k] += back[k];
      break;
    }

    case Op::Abs: {
      Node& na = nodes_[n.a];
      for (std::size_t k = 0; k < n.rg.size(); ++k) {
        if (n.rv[k] > 0.0) na.cg[k] += n.rg[k] * na.cv[k] / n.rv[k];
      }
      break;
    }

    case Op::Rss: {
      Node& na = nodes_[n.a];
      const std::size_t plane = n.rv.size();
      for (std::size_t k = 0; k < na.cv.size(); ++k) {
        const double r = n.rv[k % plane];
        if (r > 0.0) na.cg[k] += n.rg[k % plane] * na.cv[k] / r;
      }
      break;
    }

    case Op::ComplexFrom: {
      if (wants(n.a)) for (std::size_t k = 0; k < n.cg.size(); ++k) nodes_[n.a].rg[k] += n.cg[k].real();
      if (wants(n.b)) for (std::size_t k = 0; k < n.cg.size(); ++k) nodes_[n.b].rg[k] += n.cg[k].imag();
      break;
    }

    case Op::RealPart: {
      Node& na = nodes_[n.a];
      for (std::size_t k = 0; k < n.rg.size(); ++k) na.cg[k] += cdouble(n.rg[k], 0.0);
      break;
    }

    case Op::ExpandCoils: {
      Node& nm = nodes_[n.a];
      Node& ni = nodes_[n.b];
      const std::size_t plane = ni.rv.size();
      if (wants(n.b)) {
        for (std::size_t k = 0; k < n.cg.size(); ++k) ni.rg[k % plane] += std::real(std::conj(nm.cv[k]) * n.cg[k]);
      }
      if (wants(n.a)) {
        for (std::size_t k = 0; k < n.cg.size(); ++k) nm.cg[k] += n.cg[k] * ni.rv[k % plane];
      }
      break;
    }

    case Op::Sum: {
      Node& na = nodes_[n.a];
      for (auto& g : na.rg.storage()) g += n.rg[0];
      break;
    }

    case Op::Max: {
      nodes_[n.a].rg[n.index] += n.rg[0];
      break;
    }

    case Op::WeightedSqDist:
    case Op::WeightedAbsDist: {
      Node& nx = nodes_[n.a];
      Node& nt = nodes_[n.b];
      const RealTensor& w = nodes_[n.c].rv;
      for (std::size_t k = 0; k < nx.rv.size(); ++k) {
        const double d = nx.rv[k] - nt.rv[k];
        double g = 0.0;
        if (n.op == Op::WeightedSqDist) {
          g = 2.0 * w[k] * d * n.rg[0];
        } else if (d != 0.0) {
          g = w[k] * (d > 0.0 ? 1.0 : -1.0) * n.rg[0];
        }
        if (wants(n.a)) nx.rg[k] += g;
        if (wants(n.b)) nt.rg[k] -= g;
      }
      break;
    }

    case Op::SumSquares: {
      Node& na = nodes_[n.a];
      if (na.is_complex) {
        for (std::size_t k = 0; k < na.cv.size(); ++k) na.cg[k] += 2.0 * n.rg[0] * na.cv[k];
      } else {
        for (std::size_t k = 0; k < na.rv.size(); ++k) na.rg[k] += 2.0 * n.rg[0] * na.rv[k];
      }
      break;
    }
  }
}

}  // namespace mrih::ad
