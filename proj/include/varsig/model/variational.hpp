#pragma once

#include <memory>
#include <optional>
#include <vector>

#include <torch/torch.h>

#include "varsig/core/forward_model.hpp"
#include "varsig/model/config.hpp"
#include "varsig/model/networks.hpp"

namespace varsig {

/// Scalar normalisation constants estimated on the training set. The network
/// sees (x - input_mean) / input_std for the measurement representation x,
/// feedback divided by g_scale, and emits increments in units of f_scale.
struct NormStats {
  double input_mean = 0.0;
  double input_std = 1.0;
  double g_scale = 1.0;
  double f_scale = 1.0;

  json to_json() const;
  static NormStats from_json(const json& j);
};

struct EpochStats {
  std::size_t epoch = 0;       // 1-based
  double loss = 0.0;           // minimised objective
  double elbo = 0.0;           // inference-branch bound
  double consistency = 0.0;    // measurement-consistency bound
  double kl = 0.0;
  double recon = 0.0;          // ||f - f_q||^2
  double misfit = 0.0;         // ||A(f_p) - g||^2
  double seconds = 0.0;
};

/// A trained or trainable retrieval network together with everything needed
/// to run it: method, hyperparameters, forward model and normalisation.
class RetrievalModel {
 public:
  RetrievalModel(Method method, ModelConfig cfg, ForwardModelPtr fm, NormStats stats);

  Method method() const noexcept { return method_; }
  SystemId system() const noexcept { return fm_->system(); }
  const ModelConfig& config() const noexcept { return cfg_; }
  ModelConfig& config() noexcept { return cfg_; }
  const ForwardModel& forward_model() const noexcept { return *fm_; }
  const ForwardModelPtr& forward_model_ptr() const noexcept { return fm_; }
  const NormStats& stats() const noexcept { return stats_; }
  RetrievalNet& net() noexcept { return net_; }
  const RetrievalNet& net() const noexcept { return net_; }
  torch::TensorOptions options() const { return torch::TensorOptions().dtype(dtype_); }
  torch::Dtype dtype() const noexcept { return dtype_; }
  /// Divisors of the misfit and reconstruction terms after loss_units.
  double alpha_effective() const noexcept;
  double beta_effective() const noexcept;
  /// Recurrences actually unrolled (1 for the deterministic networks).
  std::size_t recurrences() const noexcept;

  const Layout& signal_layout() const noexcept { return sig_layout_; }
  const Layout& measurement_layout() const noexcept { return meas_layout_; }

  /// Normalised measurement representation, [B, C, spatial...]. For the
  /// physics-informed network this is the back-propagated sqrt(g).
  torch::Tensor representation(const torch::Tensor& g) const;
  /// Network input: representation, plus scaled feedback for the
  /// variational model.
  torch::Tensor network_input(const torch::Tensor& rep, const torch::Tensor& feedback) const;

  bool parameters_finite() const;

  // Training bookkeeping, persisted with the artifact.
  std::vector<EpochStats> curve;
  std::shared_ptr<torch::optim::Adam> optimizer;

 private:
  Method method_;
  ModelConfig cfg_;
  ForwardModelPtr fm_;
  NormStats stats_;
  torch::Dtype dtype_;
  Layout sig_layout_, meas_layout_, rep_layout_;
  RetrievalNet net_{nullptr};
};

struct GaussianLatent {
  torch::Tensor mean;    // [B, M]
  torch::Tensor stddev;  // [B, M], > 0
};

inline constexpr double kLogvarClamp = 10.0;
inline constexpr double kStddevFloor = 1e-6;

/// Recurrent state of one branch (inference or retrieval).
struct BranchState {
  LstmState recognition, prior, decoder;
  torch::Tensor f;      // running estimate f^(t), native flat [B, n_f]
  torch::Tensor rep;    // measurement representation, fixed over the unroll
  torch::Tensor input;  // network input of the current step
  std::vector<torch::Tensor> skips;  // encoder maps of the current step
  std::size_t t = 0;    // completed recurrences
};

BranchState begin_unroll(RetrievalModel& model, const torch::Tensor& g);

/// Feedback g - A(f^(t-1)) (g itself on the first step), encoded. Sets
/// st.input and returns the measurement features.
torch::Tensor step_context(RetrievalModel& model, const ForwardModel& fm, const torch::Tensor& g,
                           BranchState& st);

/// q(z | f, g): sees the signal residual f - f^(t-1) and the measurement features.
GaussianLatent recognition_encode(RetrievalModel& model, const torch::Tensor& f,
                                  const torch::Tensor& ctx, BranchState& st);
/// p(z | g).
GaussianLatent prior_encode(RetrievalModel& model, const torch::Tensor& ctx, BranchState& st);

/// z = mean + stddev * noise.
torch::Tensor sample_latent(const GaussianLatent& lat, const torch::Tensor& noise);

/// Shared decoder: returns the increment and advances st.f by it.
torch::Tensor decode_step(RetrievalModel& model, const torch::Tensor& z, const torch::Tensor& ctx,
                          BranchState& st);

/// KL(q || p) per batch row, summed over latent dimensions.
torch::Tensor kl_divergence(const GaussianLatent& q, const GaussianLatent& p);

/// Standard normal draws [L, T, B, M] from SplitMix64(seed).
torch::Tensor draw_noise(std::size_t samples, std::size_t steps, std::int64_t batch,
                         std::int64_t latent, std::uint64_t seed, const torch::TensorOptions& o);

struct InferenceUnroll {
  torch::Tensor f;   // f_q^(T)
  torch::Tensor kl;  // summed over recurrences, [B]
  std::vector<torch::Tensor> increments;
};
/// One inference-branch unroll with noise [T, B, M].
InferenceUnroll inference_unroll(RetrievalModel& model, const ForwardModel& fm,
                                 const torch::Tensor& f, const torch::Tensor& g,
                                 const torch::Tensor& noise);
/// One retrieval-branch unroll with latents from the conditional prior.
torch::Tensor retrieval_unroll(RetrievalModel& model, const ForwardModel& fm,
                               const torch::Tensor& g, const torch::Tensor& noise,
                               std::vector<torch::Tensor>* increments = nullptr);

/// -KL - (1 / (beta L)) sum_l ||f - f_q(z_l)||^2, per batch row, with
/// beta = model.beta_effective(). Noise is [L, T, B, M].
torch::Tensor elbo_inference(RetrievalModel& model, const ForwardModel& fm, const torch::Tensor& f,
                             const torch::Tensor& g, const torch::Tensor& noise);
/// -(1 / (alpha L)) sum_l ||A(f_p(z_l)) - g||^2 with z_l from the prior and
/// alpha = model.alpha_effective(), differentiated through A.
torch::Tensor consistency_bound(RetrievalModel& model, const ForwardModel& fm,
                                const torch::Tensor& g, const torch::Tensor& noise);

struct HybridTerms {
  torch::Tensor hybrid;       // gamma * elbo + (1 - gamma) * consistency
  torch::Tensor elbo, consistency, kl, recon, misfit;
};
HybridTerms hybrid_terms(RetrievalModel& model, const ForwardModel& fm, const torch::Tensor& f,
                         const torch::Tensor& g, const torch::Tensor& q_noise,
                         const torch::Tensor& p_noise);
/// The hybrid bound per batch row; training minimises its negative mean.
torch::Tensor hybrid_loss(RetrievalModel& model, const ForwardModel& fm, const torch::Tensor& f,
                          const torch::Tensor& g, const torch::Tensor& q_noise,
                          const torch::Tensor& p_noise);

/// n draws from the conditional prior, each unrolled through all
/// recurrences. Instance i uses noise stream derive_seed(seed, i), so the
/// first k instances do not depend on n.
std::vector<SignalVec> retrieve_instances(RetrievalModel& model, const MeasurementVec& g,
                                          const ForwardModel& fm, std::size_t n,
                                          std::uint64_t seed);

/// Throws ConfigError unless fm matches the model's system and shapes.
void check_forward_model(const RetrievalModel& model, const ForwardModel& fm);

}  // namespace varsig
