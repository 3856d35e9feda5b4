#include "varsig/model/variational.hpp"

#include "varsig/core/error.hpp"
#include "varsig/core/rng.hpp"
#include "varsig/model/forward_op.hpp"
#include "varsig/physics/fresnel.hpp"

namespace varsig {

json NormStats::to_json() const {
  return {{"input_mean", input_mean}, {"input_std", input_std}, {"g_scale", g_scale}, {"f_scale", f_scale}};
}

NormStats NormStats::from_json(const json& j) {
  NormStats s;
  try {
    s.input_mean = j.at("input_mean").get<double>();
    s.input_std = j.at("input_std").get<double>();
    s.g_scale = j.at("g_scale").get<double>();
    s.f_scale = j.at("f_scale").get<double>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad normalisation stats: ") + e.what());
  }
  if (!(s.input_std > 0) || !(s.g_scale > 0) || !(s.f_scale > 0)) {
    throw ConfigError("normalisation scales must be positive");
  }
  return s;
}

RetrievalModel::RetrievalModel(Method method, ModelConfig cfg, ForwardModelPtr fm, NormStats stats)
    : method_(method), cfg_(std::move(cfg)), fm_(std::move(fm)), stats_(stats) {
  cfg_.validate();
  if (!fm_) throw ConfigError("a retrieval model needs a forward model");
  if (method_ == Method::physics_informed && fm_->system() != SystemId::hologram) {
    throw UnsupportedModelError("the physics-informed network is defined for holograms only");
  }
  dtype_ = cfg_.dtype == "float64" ? torch::kDouble : torch::kFloat;
  sig_layout_ = varsig::signal_layout(system(), fm_->signal_shape());
  meas_layout_ = varsig::measurement_layout(system(), fm_->measurement_shape());
  rep_layout_ = meas_layout_;
  if (method_ == Method::physics_informed) rep_layout_ = Layout{2, meas_layout_.spatial, false};

  NetOptions o;
  o.family = family_for(system());
  o.signal = sig_layout_;
  o.input = rep_layout_;
  o.input.channels_last = false;
  if (method_ == Method::variational) o.input.channels *= 2;
  o.recognition = method_ == Method::variational;
  o.identity_skip = method_ == Method::physics_informed;
  torch::manual_seed(derive_seed(cfg_.seed, 0x6e6574));
  net_ = RetrievalNet(o, cfg_);
  net_->to(dtype_);
}

double RetrievalModel::alpha_effective() const noexcept {
  return cfg_.loss_units == "raw" ? cfg_.alpha : cfg_.alpha * stats_.g_scale * stats_.g_scale;
}

double RetrievalModel::beta_effective() const noexcept {
  return cfg_.loss_units == "raw" ? cfg_.beta : cfg_.beta * stats_.f_scale * stats_.f_scale;
}

std::size_t RetrievalModel::recurrences() const noexcept {
  return method_ == Method::variational ? cfg_.recurrences : 1;
}

torch::Tensor RetrievalModel::representation(const torch::Tensor& g) const {
  torch::Tensor x;
  if (method_ == Method::physics_informed) {
    const auto& holo = dynamic_cast<const HologramModel&>(*fm_);
    std::vector<std::vector<double>> rows;
    for (std::int64_t b = 0; b < g.size(0); ++b) rows.push_back(holo.back_propagate_sqrt(row_vector(g, b), true));
    x = rep_layout_.to_map(batch_tensor(rows, dtype_));
  } else {
    x = meas_layout_.to_map(g.to(dtype_));
  }
  return (x - stats_.input_mean) / stats_.input_std;
}

torch::Tensor RetrievalModel::network_input(const torch::Tensor& rep, const torch::Tensor& feedback) const {
  if (method_ != Method::variational) return rep;
  return torch::cat({rep, meas_layout_.to_map(feedback) / stats_.g_scale}, 1);
}

bool RetrievalModel::parameters_finite() const {
  for (const auto& p : net_->parameters()) {
    if (!torch::isfinite(p).all().item<bool>()) return false;
  }
  return true;
}

void check_forward_model(const RetrievalModel& model, const ForwardModel& fm) {
  if (fm.system() != model.system() || fm.signal_shape() != model.forward_model().signal_shape() ||
      fm.measurement_shape() != model.forward_model().measurement_shape()) {
    throw ConfigError("forward model " + fm.name() + " does not match the model's " +
                      std::string(to_string(model.system())) + " system");
  }
}

BranchState begin_unroll(RetrievalModel& model, const torch::Tensor& g) {
  BranchState st;
  const std::int64_t batch = g.size(0);
  const auto o = model.options();
  auto& net = model.net();
  st.rep = model.representation(g);
  st.f = torch::zeros({batch, model.signal_layout().numel()}, o);
  if (net->recognition_lstm) st.recognition = net->zero_state(net->recognition_lstm, batch, o);
  st.prior = net->zero_state(net->prior_lstm, batch, o);
  st.decoder = net->zero_state(net->decoder_lstm, batch, o);
  return st;
}

torch::Tensor step_context(RetrievalModel& model, const ForwardModel& fm, const torch::Tensor& g,
                           BranchState& st) {
  const torch::Tensor gt = g.to(model.dtype());
  torch::Tensor feedback = gt;
  if (st.t > 0) feedback = gt - forward_apply(fm, st.f, model.config().feedback_grad);
  st.input = model.network_input(st.rep, feedback);
  st.skips.clear();
  return model.net()->encode_measurement(st.input, &st.skips);
}

namespace {

GaussianLatent to_latent(const torch::Tensor& stats, std::int64_t m) {
  const torch::Tensor logvar = stats.narrow(1, m, m).clamp(-kLogvarClamp, kLogvarClamp);
  return {stats.narrow(1, 0, m), torch::exp(0.5 * logvar).clamp_min(kStddevFloor)};
}

}  // namespace

GaussianLatent recognition_encode(RetrievalModel& model, const torch::Tensor& f,
                                  const torch::Tensor& ctx, BranchState& st) {
  auto& net = model.net();
  if (f.dim() != 2 || f.size(1) != model.signal_layout().numel() || f.size(0) != st.f.size(0)) {
    throw ShapeError("recognition_encode: signal batch does not match the model");
  }
  const torch::Tensor residual = (f.to(model.dtype()) - st.f) / model.stats().f_scale;
  const torch::Tensor feat = net->encode_signal(model.signal_layout().to_map(residual));
  st.recognition = net->recognition_lstm->forward(RetrievalNetImpl::join(ctx, feat), st.recognition);
  return to_latent(net->recognition_head(st.recognition.h), net->latent_dim());
}

GaussianLatent prior_encode(RetrievalModel& model, const torch::Tensor& ctx, BranchState& st) {
  auto& net = model.net();
  st.prior = net->prior_lstm->forward(ctx, st.prior);
  return to_latent(net->prior_head(st.prior.h), net->latent_dim());
}

torch::Tensor sample_latent(const GaussianLatent& lat, const torch::Tensor& noise) {
  if (noise.sizes() != lat.mean.sizes()) throw ShapeError("sample_latent: noise shape differs from the latent");
  return lat.mean + lat.stddev * noise;
}

torch::Tensor decode_step(RetrievalModel& model, const torch::Tensor& z, const torch::Tensor& ctx,
                          BranchState& st) {
  auto& net = model.net();
  st.decoder = net->decoder_lstm->forward(RetrievalNetImpl::join(net->embed(z), ctx), st.decoder);
  const torch::Tensor delta =
      model.signal_layout().from_map(net->decode_output(st.decoder.h, st.input, st.skips)) * model.stats().f_scale;
  st.f = st.f + delta;
  ++st.t;
  return delta;
}

torch::Tensor kl_divergence(const GaussianLatent& q, const GaussianLatent& p) {
  if (q.mean.sizes() != p.mean.sizes() || q.stddev.sizes() != p.stddev.sizes() ||
      q.mean.sizes() != q.stddev.sizes()) {
    throw ShapeError("kl_divergence: latent dimensions differ");
  }
  const torch::Tensor var_p = p.stddev * p.stddev;
  const torch::Tensor d = q.mean - p.mean;
  const torch::Tensor terms =
      torch::log(p.stddev / q.stddev) + (q.stddev * q.stddev + d * d) / (2.0 * var_p) - 0.5;
  return terms.sum(-1);
}

torch::Tensor draw_noise(std::size_t samples, std::size_t steps, std::int64_t batch,
                         std::int64_t latent, std::uint64_t seed, const torch::TensorOptions& o) {
  const auto l = static_cast<std::int64_t>(samples), t = static_cast<std::int64_t>(steps);
  torch::Tensor eps = torch::empty({l, t, batch, latent}, torch::kDouble);
  SplitMix64 rng(seed);
  double* p = eps.data_ptr<double>();
  for (std::int64_t i = 0; i < eps.numel(); ++i) p[i] = rng.normal();
  return eps.to(o.dtype());
}

InferenceUnroll inference_unroll(RetrievalModel& model, const ForwardModel& fm,
                                 const torch::Tensor& f, const torch::Tensor& g,
                                 const torch::Tensor& noise) {
  const std::size_t steps = model.recurrences();
  if (noise.dim() != 3 || noise.size(0) < static_cast<std::int64_t>(steps)) {
    throw ShapeError("inference_unroll: noise must be [T, B, M]");
  }
  BranchState st = begin_unroll(model, g);
  InferenceUnroll out;
  out.kl = torch::zeros({g.size(0)}, model.options());
  torch::Tensor z;
  for (std::size_t t = 0; t < steps; ++t) {
    const torch::Tensor ctx = step_context(model, fm, g, st);
    const GaussianLatent q = recognition_encode(model, f, ctx, st);
    const GaussianLatent p = prior_encode(model, ctx, st);
    if (t == 0 || model.config().latent_per_recurrence) {
      out.kl = out.kl + kl_divergence(q, p);
      z = sample_latent(q, noise[static_cast<std::int64_t>(t)]);
    }
    out.increments.push_back(decode_step(model, z, ctx, st));
  }
  out.f = st.f;
  return out;
}

torch::Tensor retrieval_unroll(RetrievalModel& model, const ForwardModel& fm,
                               const torch::Tensor& g, const torch::Tensor& noise,
                               std::vector<torch::Tensor>* increments) {
  const std::size_t steps = model.recurrences();
  if (noise.dim() != 3 || noise.size(0) < static_cast<std::int64_t>(steps)) {
    throw ShapeError("retrieval_unroll: noise must be [T, B, M]");
  }
  BranchState st = begin_unroll(model, g);
  torch::Tensor z;
  for (std::size_t t = 0; t < steps; ++t) {
    const torch::Tensor ctx = step_context(model, fm, g, st);
    const GaussianLatent p = prior_encode(model, ctx, st);
    if (t == 0 || model.config().latent_per_recurrence) {
      z = sample_latent(p, noise[static_cast<std::int64_t>(t)]);
    }
    const torch::Tensor d = decode_step(model, z, ctx, st);
    if (increments) increments->push_back(d);
  }
  return st.f;
}

namespace {

struct ElboParts {
  torch::Tensor elbo, kl, recon;
};

ElboParts elbo_parts(RetrievalModel& model, const ForwardModel& fm, const torch::Tensor& f,
                     const torch::Tensor& g, const torch::Tensor& noise) {
  const std::int64_t draws = noise.size(0);
  const torch::Tensor ft = f.to(model.dtype());
  torch::Tensor kl = torch::zeros({g.size(0)}, model.options()), recon = kl;
  for (std::int64_t l = 0; l < draws; ++l) {
    const InferenceUnroll u = inference_unroll(model, fm, ft, g, noise[l]);
    kl = kl + u.kl;
    recon = recon + (ft - u.f).pow(2).sum(1);
  }
  kl = kl / static_cast<double>(draws);
  recon = recon / static_cast<double>(draws);
  return {-kl - recon / model.beta_effective(), kl, recon};
}

torch::Tensor misfit(RetrievalModel& model, const ForwardModel& fm, const torch::Tensor& g,
                     const torch::Tensor& noise) {
  check_forward_model(model, fm);
  const std::int64_t draws = noise.size(0);
  const torch::Tensor gt = g.to(model.dtype());
  torch::Tensor total = torch::zeros({g.size(0)}, model.options());
  for (std::int64_t l = 0; l < draws; ++l) {
    const torch::Tensor fp = retrieval_unroll(model, fm, gt, noise[l]);
    total = total + (forward_apply(fm, fp, true) - gt).pow(2).sum(1);
  }
  return total / static_cast<double>(draws);
}

}  // namespace

torch::Tensor elbo_inference(RetrievalModel& model, const ForwardModel& fm, const torch::Tensor& f,
                             const torch::Tensor& g, const torch::Tensor& noise) {
  check_forward_model(model, fm);
  return elbo_parts(model, fm, f, g, noise).elbo;
}

torch::Tensor consistency_bound(RetrievalModel& model, const ForwardModel& fm,
                                const torch::Tensor& g, const torch::Tensor& noise) {
  return -misfit(model, fm, g, noise) / model.alpha_effective();
}

HybridTerms hybrid_terms(RetrievalModel& model, const ForwardModel& fm, const torch::Tensor& f,
                         const torch::Tensor& g, const torch::Tensor& q_noise,
                         const torch::Tensor& p_noise) {
  check_forward_model(model, fm);
  const ElboParts e = elbo_parts(model, fm, f, g, q_noise);
  HybridTerms h;
  h.elbo = e.elbo;
  h.kl = e.kl;
  h.recon = e.recon;
  h.misfit = misfit(model, fm, g, p_noise);
  h.consistency = -h.misfit / model.alpha_effective();
  const double gamma = model.config().gamma;
  h.hybrid = gamma * h.elbo + (1.0 - gamma) * h.consistency;
  return h;
}

torch::Tensor hybrid_loss(RetrievalModel& model, const ForwardModel& fm, const torch::Tensor& f,
                          const torch::Tensor& g, const torch::Tensor& q_noise,
                          const torch::Tensor& p_noise) {
  return hybrid_terms(model, fm, f, g, q_noise, p_noise).hybrid;
}

std::vector<SignalVec> retrieve_instances(RetrievalModel& model, const MeasurementVec& g,
                                          const ForwardModel& fm, std::size_t n,
                                          std::uint64_t seed) {
  check_forward_model(model, fm);
  if (model.method() != Method::variational) {
    throw StateError("retrieve_instances needs a variational model");
  }
  if (g.system() != model.system() || g.shape() != fm.measurement_shape()) {
    throw ShapeError("measurement shape " + shape_string(g.shape()) + " does not match the model");
  }
  if (!model.parameters_finite()) throw StateError("model parameters are not finite");
  if (n == 0) return {};
  torch::NoGradGuard ng;
  model.net()->eval();
  const std::vector<double> gv(g.data().begin(), g.data().end());
  const torch::Tensor gb = batch_tensor(std::vector<std::vector<double>>(n, gv), model.dtype());
  const std::size_t steps = model.recurrences();
  const auto m = model.net()->latent_dim();
  std::vector<torch::Tensor> per_instance;
  for (std::size_t i = 0; i < n; ++i) {
    per_instance.push_back(draw_noise(1, steps, 1, m, derive_seed(seed, i), model.options())[0]);
  }
  const torch::Tensor noise = torch::cat(per_instance, 1);  // [T, n, M]
  const torch::Tensor f = retrieval_unroll(model, fm, gb, noise);
  std::vector<SignalVec> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.emplace_back(model.system(), fm.signal_shape(), row_vector(f, static_cast<std::int64_t>(i)));
  }
  return out;
}

}  // namespace varsig
