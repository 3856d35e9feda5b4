#include "varsig/model/config.hpp"

#include <algorithm>

#include "varsig/core/error.hpp"

namespace varsig {

std::string_view to_string(Method m) noexcept {
  switch (m) {
    case Method::variational: return "variational";
    case Method::deterministic: return "deterministic";
    case Method::physics_informed: return "physics_informed";
  }
  return "variational";
}

Method method_from_string(std::string_view name) {
  if (name == "variational") return Method::variational;
  if (name == "deterministic") return Method::deterministic;
  if (name == "physics_informed") return Method::physics_informed;
  throw ConfigError("unknown method '" + std::string(name) +
                    "' (expected variational, deterministic or physics_informed)");
}

ModelConfig ModelConfig::defaults(SystemId system) {
  ModelConfig c;
  switch (system) {
    case SystemId::streaking:
      c.lstm_hidden = 256;
      c.feature_dim = 256;
      c.embed_dim = 64;
      c.epochs = 20;
      // Each feedback vjp costs about three trace evaluations.
      c.feedback_grad = false;
      break;
    case SystemId::video_cs:
    case SystemId::hologram:
      c.lstm_hidden = 32;
      c.embed_dim = 8;
      c.epochs = 10;
      break;
    case SystemId::generic:
      c.lstm_hidden = 64;
      c.feature_dim = 64;
      c.embed_dim = 16;
      c.epochs = 200;
      break;
  }
  return c;
}

void ModelConfig::validate() const {
  if (latent_dim < 1 || recurrences < 1 || samples < 1) {
    throw ConfigError("latent_dim, recurrences and samples must be at least 1");
  }
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("gamma must lie in [0, 1]");
  if (!(alpha > 0.0) || !(beta > 0.0)) throw ConfigError("alpha and beta must be positive");
  for (std::size_t w : enc_channels) {
    if (w < 1) throw ConfigError("enc_channels must be positive");
  }
  if (lstm_hidden < 1 || feature_dim < 1 || embed_dim < 1) {
    throw ConfigError("lstm_hidden, feature_dim and embed_dim must be positive");
  }
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
  if (loss_units != "normalized" && loss_units != "raw") {
    throw ConfigError("loss_units must be normalized or raw");
  }
  if (dtype != "float32" && dtype != "float64") {
    throw ConfigError("dtype must be float32 or float64");
  }
}

json ModelConfig::to_json() const {
  return {{"latent_dim", latent_dim},
          {"recurrences", recurrences},
          {"samples", samples},
          {"gamma", gamma},
          {"alpha", alpha},
          {"beta", beta},
          {"loss_units", loss_units},
          {"latent_per_recurrence", latent_per_recurrence},
          {"feedback_grad", feedback_grad},
          {"enc_channels", enc_channels},
          {"lstm_hidden", lstm_hidden},
          {"feature_dim", feature_dim},
          {"embed_dim", embed_dim},
          {"learning_rate", learning_rate},
          {"batch_size", batch_size},
          {"epochs", epochs},
          {"seed", seed},
          {"dtype", dtype}};
}

ModelConfig ModelConfig::from_json(const json& j, const ModelConfig& base) {
  if (!j.is_object()) throw ConfigError("model config must be a JSON object");
  static const char* known[] = {"latent_dim", "recurrences", "samples", "gamma", "alpha", "beta", "loss_units",
                                "latent_per_recurrence", "feedback_grad", "enc_channels",
                                "lstm_hidden", "feature_dim", "embed_dim", "learning_rate",
                                "batch_size", "epochs", "seed", "dtype"};
  for (const auto& [key, _] : j.items()) {
    if (std::find(std::begin(known), std::end(known), key) == std::end(known)) {
      throw ConfigError("unknown model config key '" + key + "'");
    }
  }
  ModelConfig c = base;
  try {
    c.latent_dim = j.value("latent_dim", c.latent_dim);
    c.recurrences = j.value("recurrences", c.recurrences);
    c.samples = j.value("samples", c.samples);
    c.gamma = j.value("gamma", c.gamma);
    c.alpha = j.value("alpha", c.alpha);
    c.beta = j.value("beta", c.beta);
    c.loss_units = j.value("loss_units", c.loss_units);
    c.latent_per_recurrence = j.value("latent_per_recurrence", c.latent_per_recurrence);
    c.feedback_grad = j.value("feedback_grad", c.feedback_grad);
    c.enc_channels = j.value("enc_channels", c.enc_channels);
    c.lstm_hidden = j.value("lstm_hidden", c.lstm_hidden);
    c.feature_dim = j.value("feature_dim", c.feature_dim);
    c.embed_dim = j.value("embed_dim", c.embed_dim);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.epochs = j.value("epochs", c.epochs);
    c.seed = j.value("seed", c.seed);
    c.dtype = j.value("dtype", c.dtype);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad model config: ") + e.what());
  }
  c.validate();
  return c;
}

}  // namespace varsig
