#include "varsig/baselines/deterministic.hpp"

#include "varsig/core/error.hpp"
#include "varsig/model/forward_op.hpp"

namespace varsig {

torch::Tensor deterministic_batch(RetrievalModel& model, const torch::Tensor& g) {
  BranchState st = begin_unroll(model, g);
  const torch::Tensor ctx = step_context(model, model.forward_model(), g, st);
  const GaussianLatent p = prior_encode(model, ctx, st);
  decode_step(model, p.mean, ctx, st);
  return st.f;
}

namespace {

SignalVec single_pass(const MeasurementVec& g, RetrievalModel& model) {
  const ForwardModel& fm = model.forward_model();
  if (g.system() != model.system() || g.shape() != fm.measurement_shape()) {
    throw ShapeError("measurement shape " + shape_string(g.shape()) + " does not match the model's " +
                     shape_string(fm.measurement_shape()));
  }
  torch::NoGradGuard ng;
  const std::vector<double> gv(g.data().begin(), g.data().end());
  const torch::Tensor f = deterministic_batch(model, batch_tensor({gv}, model.dtype()));
  return SignalVec(model.system(), fm.signal_shape(), row_vector(f, 0));
}

}  // namespace

SignalVec deterministic_forward(const MeasurementVec& g, RetrievalModel& model) {
  if (model.method() == Method::variational) {
    throw StateError("deterministic_forward needs a deterministic or physics-informed model");
  }
  return single_pass(g, model);
}

SignalVec physics_informed_forward(const MeasurementVec& g, RetrievalModel& model,
                                   const FresnelConfig& cfg) {
  if (model.system() != SystemId::hologram || g.system() != SystemId::hologram) {
    throw UnsupportedModelError("the physics-informed network is defined for holograms only");
  }
  if (model.method() != Method::physics_informed) {
    throw StateError("physics_informed_forward needs a physics-informed model");
  }
  if (config_hash(cfg.to_json()) != config_hash(model.forward_model().config_json())) {
    throw ConfigError("Fresnel parameters differ from those the model was trained with");
  }
  return single_pass(g, model);
}

}  // namespace varsig
