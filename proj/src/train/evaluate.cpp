#include "varsig/train/evaluate.hpp"

#include "varsig/baselines/deterministic.hpp"
#include "varsig/core/error.hpp"
#include "varsig/core/parallel.hpp"
#include "varsig/core/rng.hpp"
#include "varsig/physics/streaking.hpp"

namespace varsig {

std::vector<std::vector<double>> reconstruct(const MethodSpec& method, const MeasurementVec& g,
                                             const ForwardModel& fm, std::size_t instances,
                                             std::uint64_t seed) {
  if (method.tv) {
    return {tv_map_solve(g.data(), fm, *method.tv).f};
  }
  if (!method.model) throw ConfigError("method '" + method.label + "' has no trained model");
  RetrievalModel& model = *method.model;
  std::vector<std::vector<double>> out;
  if (model.method() == Method::variational) {
    for (const auto& s : retrieve_instances(model, g, fm, instances, seed)) out.push_back(flatten(s));
  } else {
    check_forward_model(model, fm);
    out.push_back(flatten(deterministic_forward(g, model)));
  }
  return out;
}

MetricsReport evaluate(const std::vector<MethodSpec>& methods, const Dataset& testset,
                       const ForwardModel& fm, const EvalOptions& opt) {
  if (testset.system != fm.system()) {
    throw SystemMismatchError("test set system " + std::string(to_string(testset.system)) +
                              " does not match forward model " + std::string(to_string(fm.system())));
  }
  if (methods.empty()) throw ConfigError("no methods to evaluate");
  for (const auto& m : methods) {
    if (!m.model && !m.tv) throw ConfigError("method '" + m.label + "' has no trained model");
    if (m.model && m.model->system() != fm.system()) {
      throw SystemMismatchError("method '" + m.label + "' was trained for " +
                                std::string(to_string(m.model->system())));
    }
  }
  const auto* streaking = dynamic_cast<const StreakingModel*>(&fm);
  const std::size_t n = testset.size();

  // rows[method][record]
  std::vector<std::vector<std::vector<MetricsRow>>> rows(methods.size(),
                                                         std::vector<std::vector<MetricsRow>>(n));
  for (std::size_t k = 0; k < methods.size(); ++k) {
    auto score = [&](std::size_t r) {
      const DatasetRecord& rec = testset.records[r];
      const auto estimates = reconstruct(methods[k], rec.g, fm, opt.instances, derive_seed(opt.seed, r));
      const std::vector<double> truth = flatten(rec.f);
      for (std::size_t i = 0; i < estimates.size(); ++i) {
        std::vector<double> est = estimates[i];
        const double fid = fidelity(est, rec.g.data(), fm, opt.formula);
        if (streaking && opt.align_cep) est = cep_align(*streaking, est, truth).aligned;
        rows[k][r].push_back({r, methods[k].label, i, psnr(est, truth, opt.formula), fid});
      }
    };
    // TV solves are independent and single-threaded; network inference is
    // already parallel inside torch.
    if (methods[k].tv) {
      parallel_for(n, score);
    } else {
      for (std::size_t r = 0; r < n; ++r) score(r);
    }
  }

  MetricsReport report;
  report.system = std::string(to_string(fm.system()));
  report.formula = opt.formula;
  json id = {{"testset", testset.config_hash()}, {"instances", opt.instances}, {"seed", opt.seed},
             {"formula", to_string(opt.formula)}, {"align_cep", opt.align_cep}};
  for (const auto& m : methods) {
    report.methods.push_back(m.label);
    id["methods"].push_back(m.label);
  }
  report.config_hash = config_hash_hex(id);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t k = 0; k < methods.size(); ++k) {
      report.rows.insert(report.rows.end(), rows[k][r].begin(), rows[k][r].end());
    }
  }
  return report;
}

}  // namespace varsig
