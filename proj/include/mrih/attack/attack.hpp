#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mrih/mri/acquisition.hpp"
#include "mrih/numerics/tape.hpp"
#include "mrih/numerics/tensor.hpp"
#include "mrih/recon/model.hpp"

namespace mrih::attack {

enum class ShapeKind { line, rectangle, ellipse };
enum class BudgetMode { absolute, relative };
enum class ClipMode { data_range, unit };

std::string to_string(ShapeKind k);
ShapeKind parse_shape_kind(const std::string& s);
std::string to_string(BudgetMode m);
BudgetMode parse_budget_mode(const std::string& s);
std::string to_string(ClipMode m);
ClipMode parse_clip_mode(const std::string& s);

/// Drawn target. A line is a `thickness` x `length` box (transposed when
/// vertical); rectangles and ellipses fill or inscribe a `height` x `width` box.
/// The box is centred on (row, col), defaulting to (h/2, w/2).
struct TargetShape {
  ShapeKind kind = ShapeKind::line;
  std::size_t length = 11;
  std::size_t thickness = 2;
  bool vertical = false;
  std::size_t height = 4;
  std::size_t width = 8;
  std::optional<std::size_t> row;
  std::optional<std::size_t> col;
};

struct AttackSpec {
  BudgetMode budget = BudgetMode::relative;
  /// L-infinity budget on the real part; a fraction of max|Re(z)| in relative mode.
  double epsilon = 1e-2;
  /// Step size, in the same units as epsilon.
  double alpha = 1e-3;
  std::size_t iters = 150;
  /// data_range clips Re(z) + delta to [min, max] of Re(z); unit clips to [0, 1].
  ClipMode clip = ClipMode::data_range;
  TargetShape shape;
  std::size_t mask_dilation = 2;
  std::uint64_t seed = 0;
};

/// Throws ValueError unless 0 <= alpha <= epsilon and iters >= 1.
void validate(const AttackSpec& spec);

struct Target {
  RealTensor y_t;      // clean recon with the shape painted at max(clean)
  RealTensor support;  // 0/1 shape pixels
  RealTensor mask;     // 0/1 support dilated by mask_dilation
  /// The painted shape is not visible (e.g. constant or all-zero image).
  bool degenerate = false;
};

Target render_target(const RealTensor& clean_recon, const TargetShape& shape, std::size_t mask_dilation);

/// ||m (x - y_t)||^2 / ||m||_1 + ||(1 - m)(x - clean)||^2 / ||1 - m||_1.
double attack_loss(const RealTensor& recon_pert, const RealTensor& recon_clean, const RealTensor& y_t,
                   const RealTensor& m);
/// Taped form; `recon_pert` is a real [h, w] node.
ad::Var attack_loss(ad::Tape& tape, ad::Var recon_pert, const RealTensor& recon_clean, const RealTensor& y_t,
                    const RealTensor& m);

struct AttackResult {
  RealTensor delta_star;           // [coils, h, w], zero at unsampled columns
  double best_loss = 0.0;
  std::size_t best_iter = 0;
  std::vector<double> loss_trace;  // loss at the delta evaluated in each iteration
  RealTensor clean_recon;
  RealTensor perturbed_recon;
  ComplexTensor perturbed_kspace;  // clip(Re z + delta*) + i Im z
  Target target;
  double epsilon_abs = 0.0;
  double alpha_abs = 0.0;
  double clip_lo = 0.0;
  double clip_hi = 0.0;
  /// Target-region term of the loss at delta = 0 and at delta*.
  double target_term_clean = 0.0;
  double target_term_best = 0.0;
};

/// clip(Re z + delta, lo, hi) + i Im z.
ComplexTensor apply_perturbation(const ComplexTensor& z, const RealTensor& delta, double lo, double hi);

/// Masked iterative FGSM on the real part of the sampled k-space entries.
/// Each iteration evaluates the loss at the current delta, keeps the lowest,
/// then steps delta -= alpha sign(grad) and clips it to [-eps, eps].
AttackResult masked_iterative_fgsm(const recon::ReconModel& model, const ComplexTensor& z,
                                   const mri::Acquisition& acq, const AttackSpec& spec);

}  // namespace mrih::attack
