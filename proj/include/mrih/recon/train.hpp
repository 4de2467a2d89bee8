#pragma once

#include <cstdint>
#include <vector>

#include "mrih/mri/dataset.hpp"
#include "mrih/recon/model.hpp"

namespace mrih::recon {

enum class LossKind { l2, l1 };

std::string to_string(LossKind k);
LossKind parse_loss_kind(const std::string& name);

struct TrainConfig {
  std::size_t epochs = 10;
  std::size_t batch_size = 8;
  double learning_rate = 5e-2;
  double momentum = 0.9;
  LossKind loss = LossKind::l2;
  std::uint64_t seed = 0;
};

struct TrainResult {
  std::vector<double> epoch_loss;  // mean per-sample loss seen during each epoch
  std::vector<double> step_loss;   // mean batch loss before each update
};

/// Pixel-mean L2 or L1 distance between F(z) and the ground truth.
double sample_loss(const ReconModel& model, const mri::Sample& sample, LossKind kind);

/// Minibatch SGD with heavy-ball momentum (v = mu v + g; p -= lr v). Batches
/// follow a seeded shuffle per epoch; gradients are averaged over the batch in
/// sample order, so the result is bit-identical for a given seed.
TrainResult train(ReconModel& model, const std::vector<mri::Sample>& data, const TrainConfig& config);

}  // namespace mrih::recon
