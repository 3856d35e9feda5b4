#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "varsig/core/forward_model.hpp"

namespace varsig {

enum class Method { variational, deterministic, physics_informed };

std::string_view to_string(Method m) noexcept;
Method method_from_string(std::string_view name);

struct ModelConfig {
  std::size_t latent_dim = 32;      // M
  std::size_t recurrences = 3;      // T
  std::size_t samples = 1;          // L
  double gamma = 0.5;
  double alpha = 1.0;
  double beta = 1.0;
  // "normalized": alpha and beta are in units of the training-set variances
  // of g and f (the effective divisors are alpha * g_scale^2 and
  // beta * f_scale^2). "raw": used as given.
  std::string loss_units = "normalized";
  // Draw a fresh latent at every recurrence (false: one draw reused for the
  // whole unroll).
  bool latent_per_recurrence = true;
  // Backpropagate through A in the discrepancy feedback. The consistency
  // term always differentiates through A.
  bool feedback_grad = true;

  std::array<std::size_t, 3> enc_channels{16, 32, 32};
  std::size_t lstm_hidden = 32;
  std::size_t feature_dim = 256;    // flat feature width (trace and vector networks)
  std::size_t embed_dim = 8;        // latent embedding width (channels for image networks)

  double learning_rate = 1e-3;
  std::size_t batch_size = 32;
  std::size_t epochs = 10;
  std::uint64_t seed = 0;
  std::string dtype = "float32";    // "float32" | "float64"

  /// Per-system defaults for network widths and epochs.
  static ModelConfig defaults(SystemId system);

  void validate() const;
  json to_json() const;
  /// Missing keys keep the values of `base`.
  static ModelConfig from_json(const json& j, const ModelConfig& base);
};

}  // namespace varsig
