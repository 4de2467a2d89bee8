#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

#include "mrih/numerics/tensor.hpp"

namespace mrih::ad {

/// Handle to a node on a Tape.
struct Var {
  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();
  std::size_t id = npos;
  bool valid() const { return id != npos; }
};

/// Reverse-mode tape over a fixed vocabulary of tensor operations.
///
/// Values are computed eagerly when an operation is recorded, so nodes are
/// stored in topological order by construction. Complex nodes carry adjoints
/// in the convention g = dL/dRe(x) + i dL/dIm(x); for a real scalar loss this
/// is the steepest-ascent direction in the (Re, Im) plane and makes the
/// adjoint of a unitary map its conjugate transpose.
///
/// A Tape is single-threaded; use one per worker.
class Tape {
 public:
  Tape() = default;

  Var leaf(RealTensor value);
  Var leaf(ComplexTensor value);
  Var constant(RealTensor value);
  Var constant(ComplexTensor value);

  // Elementwise; operands share kind and shape.
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);

  /// x * mask, where mask is a real node whose shape equals the trailing dims of x.
  Var mul_mask(Var x, Var mask);
  Var scale(Var x, double c);
  Var add_scalar(Var x, double c);
  /// x * s and x / s for a real scalar node s (shape [1]).
  Var scale_by(Var x, Var s);
  Var divide_by(Var x, Var s);

  // Real image ops, [C, H, W] layout.
  Var conv2d(Var x, Var kernel, Var bias);
  Var relu(Var x);
  Var avg_pool2(Var x);
  Var upsample2(Var x);
  Var concat(Var a, Var b);
  Var reshape(Var x, Shape shape);
  Var clip(Var x, double lo, double hi);

  // Fourier and complex ops.
  Var fft2c(Var x);
  Var ifft2c(Var x);
  Var abs(Var x);
  /// Root-sum-of-squares over axis 0: complex [C, H, W] -> real [H, W].
  Var rss(Var x);
  Var complex_from(Var re, Var im);
  Var real_part(Var x);
  /// maps (complex [C, H, W]) times a real image [H, W] broadcast over coils.
  Var expand_coils(Var maps, Var image);

  // Reductions to a real scalar of shape [1].
  Var sum(Var x);
  Var max(Var x);
  /// sum_i w_i (x_i - t_i)^2 for real x, t, w of equal shape; w receives no gradient.
  Var weighted_sq_dist(Var x, Var target, Var weights);
  /// sum_i w_i |x_i - t_i|.
  Var weighted_abs_dist(Var x, Var target, Var weights);
  /// ||x||_2^2 for real or complex x.
  Var sum_squares(Var x);

  /// Propagates adjoints from a scalar root. Adjoint buffers of every node
  /// are reset first, so backward may be called repeatedly.
  void backward(Var root);

  bool is_complex(Var v) const;
  bool requires_grad(Var v) const;
  const Shape& shape(Var v) const;
  const RealTensor& real(Var v) const;
  const ComplexTensor& complex(Var v) const;
  double scalar(Var v) const;
  const RealTensor& grad_real(Var v) const;
  const ComplexTensor& grad_complex(Var v) const;

  std::size_t size() const { return nodes_.size(); }

 private:
  enum class Op : std::uint8_t {
    Leaf, Constant, Add, Sub, Mul, MulMask, Scale, AddScalar, ScaleBy, DivideBy,
    Conv2d, Relu, AvgPool2, Upsample2, Concat, Reshape, Clip,
    Fft2c, Ifft2c, Abs, Rss, ComplexFrom, RealPart, ExpandCoils,
    Sum, Max, WeightedSqDist, WeightedAbsDist, SumSquares,
  };

  struct Node {
    Op op = Op::Leaf;
    bool is_complex = false;
    bool needs_grad = false;
    std::size_t a = Var::npos;
    std::size_t b = Var::npos;
    std::size_t c = Var::npos;
    double p0 = 0.0;
    double p1 = 0.0;
    std::size_t index = 0;
    RealTensor rv;
    ComplexTensor cv;
    RealTensor rg;
    ComplexTensor cg;
  };

  const Node& node(Var v) const;
  Var push(Node n);
  Var push_real(Op op, RealTensor value, std::initializer_list<Var> inputs);
  Var push_complex(Op op, ComplexTensor value, std::initializer_list<Var> inputs);
  void require_real(Var v, const char* op) const;
  void require_complex(Var v, const char* op) const;
  void require_scalar(Var v, const char* op) const;
  void backprop(std::size_t i);

  std::vector<Node> nodes_;
};

}  // namespace mrih::ad
