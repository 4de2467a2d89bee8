#include "mrih/recon/train.hpp"

#include <cmath>
#include <numeric>

#include "mrih/numerics/rng.hpp"

namespace mrih::recon {

namespace {

void check_config(const TrainConfig& c) {
  if (c.epochs < 1) throw ValueError("train: epochs must be >= 1");
  if (c.batch_size < 1) throw ValueError("train: batch_size must be >= 1");
  if (!(c.learning_rate >= 0.0) || !std::isfinite(c.learning_rate)) {
    throw ValueError("train: learning_rate must be finite and >= 0");
  }
  if (!(c.momentum >= 0.0 && c.momentum < 1.0)) throw ValueError("train: momentum must be in [0, 1)");
}

void check_sample(const ReconModel& model, const mri::Sample& s) {
  const Hyper& hp = model.hyper();
  if (s.coils() != hp.coils || s.height() != hp.height || s.width() != hp.width) {
    throw ValueError("sample " + s.id + " has shape " + mrih::to_string(s.kspace.shape()) +
                     " but the model expects [" + std::to_string(hp.coils) + ", " + std::to_string(hp.height) +
                     ", " + std::to_string(hp.width) + "]");
  }
  if (!s.has_ground_truth()) throw DataError("sample " + s.id + " has no ground truth");
}

ad::Var loss_node(ad::Tape& tape, ad::Var recon, const RealTensor& gt, LossKind kind) {
  const auto target = tape.constant(gt);
  const auto weights = tape.constant(RealTensor(gt.shape(), 1.0 / static_cast<double>(gt.size())));
  return kind == LossKind::l2 ? tape.weighted_sq_dist(recon, target, weights)
                              : tape.weighted_abs_dist(recon, target, weights);
}

}  // namespace

std::string to_string(LossKind k) { return k == LossKind::l2 ? "l2" : "l1"; }

LossKind parse_loss_kind(const std::string& name) {
  if (name == "l2" || name == "L2") return LossKind::l2;
  if (name == "l1" || name == "L1") return LossKind::l1;
  throw ValueError("unknown loss '" + name + "' (expected l2 or l1)");
}

double sample_loss(const ReconModel& model, const mri::Sample& sample, LossKind kind) {
  check_sample(model, sample);
  const RealTensor f = model.apply(sample.kspace, mri::acquisition_of(sample));
  double acc = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double d = f[i] - sample.ground_truth[i];
    acc += kind == LossKind::l2 ? d * d : std::abs(d);
  }
  return acc / static_cast<double>(f.size());
}

TrainResult train(ReconModel& model, const std::vector<mri::Sample>& data, const TrainConfig& config) {
  check_config(config);
  if (data.empty()) throw ValueError("train: dataset is empty");
  if (!model.learned()) throw ValueError("train: " + to_string(model.variant()) + " has no trainable parameters");
  std::vector<mri::Acquisition> acqs;
  acqs.reserve(data.size());
  for (const auto& s : data) {
    check_sample(model, s);
    acqs.push_back(mri::acquisition_of(s));
  }

  auto& params = model.parameters();
  std::vector<RealTensor> velocity;
  for (const auto& p : params) velocity.emplace_back(p.value.shape());

  Rng rng(config.seed);
  std::vector<std::size_t> order(data.size());
  TrainResult out;
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

    std::vector<double> per_sample(data.size(), 0.0);
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      const double inv_batch = 1.0 / static_cast<double>(stop - start);
      std::vector<RealTensor> grad;
      for (const auto& p : params) grad.emplace_back(p.value.shape());
      double batch_loss = 0.0;
      for (std::size_t b = start; b < stop; ++b) {
        const std::size_t idx = order[b];
        ad::Tape tape;
        const auto bound = model.bind(tape, true);
        const auto z = tape.constant(data[idx].kspace);
        const auto loss = loss_node(tape, model.apply(tape, z, acqs[idx], bound), data[idx].ground_truth, config.loss);
        const double value = tape.scalar(loss);
        if (!std::isfinite(value)) {
          throw NumericError("training diverged at epoch " + std::to_string(epoch) + ", step " + std::to_string(step) +
                             " (sample " + data[idx].id + ", loss " + std::to_string(value) +
                             "); lower the learning rate");
        }
        tape.backward(loss);
        for (std::size_t k = 0; k < params.size(); ++k) {
          const RealTensor& g = tape.grad_real(bound[k]);
          for (std::size_t e = 0; e < g.size(); ++e) grad[k][e] += g[e];
        }
        per_sample[idx] = value;
        batch_loss += value;
      }
      out.step_loss.push_back(batch_loss * inv_batch);
      for (std::size_t k = 0; k < params.size(); ++k) {
        RealTensor& p = params[k].value;
        RealTensor& v = velocity[k];
        for (std::size_t e = 0; e < p.size(); ++e) {
          v[e] = config.momentum * v[e] + grad[k][e] * inv_batch;
          p[e] -= config.learning_rate * v[e];
        }
      }
      ++step;
    }
    double total = 0.0;
    for (double l : per_sample) total += l;
    out.epoch_loss.push_back(total / static_cast<double>(data.size()));
  }
  return out;
}

}  // namespace mrih::recon
