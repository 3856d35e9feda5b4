#pragma once

#include <filesystem>
#include <memory>

#include "varsig/model/variational.hpp"

namespace varsig {

// Artifact directory:
//   config.json           method, system, physics, model config, loss curve
//   stats.json            normalisation constants
//   params.manifest.json  parameter (and Adam state) names -> TensorFiles
//   params/*.tns
// Tensors are written in the model dtype, so a reload is bit-exact.
void save_artifact(const std::filesystem::path& dir, const RetrievalModel& model);

/// Rebuilds the forward model from the stored physics config. The optimizer
/// is restored when the artifact holds its state.
std::shared_ptr<RetrievalModel> load_artifact(const std::filesystem::path& dir);

}  // namespace varsig
