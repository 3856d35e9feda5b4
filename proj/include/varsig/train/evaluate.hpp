#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "varsig/baselines/tv_map.hpp"
#include "varsig/core/dataset.hpp"
#include "varsig/model/variational.hpp"
#include "varsig/train/metrics.hpp"
#include "varsig/train/report.hpp"

namespace varsig {

/// A method under evaluation: a trained network or the TV solver.
struct MethodSpec {
  std::string label;
  std::shared_ptr<RetrievalModel> model;
  std::optional<TvConfig> tv;
};

struct EvalOptions {
  std::size_t instances = 10;   // draws per record for the variational model
  PsnrFormula formula = PsnrFormula::peak;
  std::uint64_t seed = 0;
  // Streaking estimates have their XUV constant phase aligned to the truth
  // before PSNR, since the trace cannot determine it.
  bool align_cep = true;
};

/// Reconstructions for one record: one per instance for the variational
/// model, a single one otherwise.
std::vector<std::vector<double>> reconstruct(const MethodSpec& method, const MeasurementVec& g,
                                             const ForwardModel& fm, std::size_t instances,
                                             std::uint64_t seed);

MetricsReport evaluate(const std::vector<MethodSpec>& methods, const Dataset& testset,
                       const ForwardModel& fm, const EvalOptions& opt = {});

}  // namespace varsig
