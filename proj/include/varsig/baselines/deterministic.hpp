#pragma once

#include <torch/torch.h>

#include "varsig/model/variational.hpp"
#include "varsig/physics/fresnel.hpp"

namespace varsig {

/// Single pass of the retrieval topology with z set to the prior mean and no
/// forward model: [B, n_g] -> [B, n_f].
torch::Tensor deterministic_batch(RetrievalModel& model, const torch::Tensor& g);

SignalVec deterministic_forward(const MeasurementVec& g, RetrievalModel& model);

/// As deterministic_forward, for a network trained on the back-propagated
/// hologram amplitude. The model's Fresnel parameters must equal `cfg`.
SignalVec physics_informed_forward(const MeasurementVec& g, RetrievalModel& model,
                                   const FresnelConfig& cfg);

}  // namespace varsig
