#pragma once

#include <functional>
#include <memory>

#include "varsig/core/dataset.hpp"
#include "varsig/model/variational.hpp"

namespace varsig {

struct TrainOptions {
  // f64 parameters and a single intra-op thread, so that reruns and resumed
  // runs reproduce the loss curve bit for bit.
  bool deterministic = false;
  std::function<void(const EpochStats&)> on_epoch;
};

NormStats compute_stats(Method method, const Dataset& ds, const ForwardModel& fm);

/// Trains a fresh model for cfg.epochs epochs.
std::shared_ptr<RetrievalModel> train(Method method, const ModelConfig& cfg, const Dataset& ds,
                                      ForwardModelPtr fm, const TrainOptions& opt = {});

/// Continues a model (fresh or loaded from an artifact) until it has seen
/// model.config().epochs epochs. Shuffling and noise depend only on the seed
/// and epoch number.
void continue_training(RetrievalModel& model, const Dataset& ds, const TrainOptions& opt = {});

/// Epoch means of the curve as CSV with a config hash comment line.
std::string loss_curve_csv(const std::vector<EpochStats>& curve, const std::string& config_hash);

}  // namespace varsig
