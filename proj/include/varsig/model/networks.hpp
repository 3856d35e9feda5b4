#pragma once

#include <torch/torch.h>

#include "varsig/core/types.hpp"
#include "varsig/model/config.hpp"

namespace varsig {

// image: 2-D signal and measurement on the same grid, convolutional encoders
//        and decoder with a convolutional LSTM at 1/8 resolution.
// trace: 1-D signal with a 2-D measurement, convolutional encoders and a
//        fully connected LSTM.
// vector: small dense networks.
enum class NetFamily { image, trace, vector };

NetFamily family_for(SystemId system);

/// How a flat native array maps onto a channel-first network tensor.
struct Layout {
  std::int64_t channels = 1;
  std::vector<std::int64_t> spatial;
  bool channels_last = false;  // native order is (spatial..., channel)

  std::int64_t numel() const;
  /// [B, numel] -> [B, channels, spatial...]
  torch::Tensor to_map(const torch::Tensor& flat) const;
  /// [B, channels, spatial...] -> [B, numel]
  torch::Tensor from_map(const torch::Tensor& map) const;
};

Layout signal_layout(SystemId system, const Shape& shape);
Layout measurement_layout(SystemId system, const Shape& shape);

struct LstmState {
  torch::Tensor h, c;
};

/// LSTM cell whose gate map is either dense or a 3x3 convolution.
class LstmCellImpl : public torch::nn::Module {
 public:
  LstmCellImpl(bool conv, std::int64_t input, std::int64_t hidden);
  LstmState forward(const torch::Tensor& x, const LstmState& s);
  std::int64_t hidden() const noexcept { return hidden_; }

 private:
  bool conv_;
  std::int64_t hidden_;
  torch::nn::Conv2d gate_conv_{nullptr};
  torch::nn::Linear gate_lin_{nullptr};
};
TORCH_MODULE(LstmCell);

struct NetOptions {
  NetFamily family = NetFamily::vector;
  Layout signal;
  Layout input;          // measurement-side network input (after stacking feedback)
  bool recognition = true;  // build the recognition (inference-only) branch
  bool identity_skip = false;  // add a 1x1 map from input channel 0 to the output
};

/// Encoders, LSTM cells, latent heads and the shared decoder.
class RetrievalNetImpl : public torch::nn::Module {
 public:
  RetrievalNetImpl(const NetOptions& opt, const ModelConfig& cfg);

  const NetOptions& options() const noexcept { return opt_; }
  std::int64_t latent_dim() const noexcept { return latent_; }

  /// Top-level features; image networks also return the 1/2 and 1/4
  /// resolution maps in `skips` for the decoder.
  torch::Tensor encode_measurement(const torch::Tensor& x, std::vector<torch::Tensor>* skips = nullptr);
  torch::Tensor encode_signal(const torch::Tensor& x);
  /// Concatenation along the feature axis.
  static torch::Tensor join(const torch::Tensor& a, const torch::Tensor& b) {
    return torch::cat({a, b}, 1);
  }

  LstmState zero_state(const LstmCell& cell, std::int64_t batch, const torch::TensorOptions& o) const;

  LstmCell recognition_lstm{nullptr}, prior_lstm{nullptr}, decoder_lstm{nullptr};
  /// Hidden state -> [mean, logvar] of width 2M.
  torch::Tensor recognition_head(const torch::Tensor& h);
  torch::Tensor prior_head(const torch::Tensor& h);
  /// Latent -> decoder input features.
  torch::Tensor embed(const torch::Tensor& z);
  /// Decoder hidden state -> signal map. Image networks concatenate the
  /// measurement encoder maps on the way up.
  torch::Tensor decode_output(const torch::Tensor& h, const torch::Tensor& input,
                              const std::vector<torch::Tensor>& skips);

 private:
  torch::Tensor head(torch::nn::Linear& lin, const torch::Tensor& h);

  NetOptions opt_;
  std::int64_t latent_;
  std::vector<std::int64_t> feat_spatial_;  // image family feature grid
  torch::nn::Sequential meas_enc_{nullptr}, sig_enc_{nullptr}, out_{nullptr};
  torch::nn::ModuleList meas_convs_{nullptr}, up_{nullptr};
  torch::nn::Linear recog_head_{nullptr}, prior_head_{nullptr}, embed_{nullptr};
  torch::nn::Conv2d skip_{nullptr};
  std::int64_t embed_dim_ = 0;
};
TORCH_MODULE(RetrievalNet);

}  // namespace varsig
