#include "varsig/model/networks.hpp"

#include "varsig/core/error.hpp"

namespace varsig {

namespace nn = torch::nn;

NetFamily family_for(SystemId system) {
  switch (system) {
    case SystemId::video_cs:
    case SystemId::hologram: return NetFamily::image;
    case SystemId::streaking: return NetFamily::trace;
    case SystemId::generic: break;
  }
  return NetFamily::vector;
}

std::int64_t Layout::numel() const {
  std::int64_t n = channels;
  for (auto s : spatial) n *= s;
  return n;
}

torch::Tensor Layout::to_map(const torch::Tensor& flat) const {
  const std::int64_t batch = flat.size(0);
  std::vector<std::int64_t> dims{batch};
  if (channels_last) {
    dims.insert(dims.end(), spatial.begin(), spatial.end());
    dims.push_back(channels);
    std::vector<std::int64_t> perm{0, static_cast<std::int64_t>(dims.size()) - 1};
    for (std::size_t i = 0; i < spatial.size(); ++i) perm.push_back(static_cast<std::int64_t>(i) + 1);
    return flat.reshape(dims).permute(perm);
  }
  dims.push_back(channels);
  dims.insert(dims.end(), spatial.begin(), spatial.end());
  return flat.reshape(dims);
}

torch::Tensor Layout::from_map(const torch::Tensor& map) const {
  const std::int64_t batch = map.size(0);
  if (channels_last) {
    std::vector<std::int64_t> perm{0};
    for (std::size_t i = 0; i < spatial.size(); ++i) perm.push_back(static_cast<std::int64_t>(i) + 2);
    perm.push_back(1);
    return map.permute(perm).reshape({batch, numel()});
  }
  return map.reshape({batch, numel()});
}

namespace {

std::vector<std::int64_t> to_i64(const Shape& s, std::size_t from, std::size_t to) {
  std::vector<std::int64_t> out;
  for (std::size_t i = from; i < to; ++i) out.push_back(static_cast<std::int64_t>(s[i]));
  return out;
}

}  // namespace

Layout signal_layout(SystemId system, const Shape& shape) {
  if (system == SystemId::video_cs) {
    if (shape.size() != 4) throw ShapeError("video signal must be (y, x, channel, frame)");
    return {static_cast<std::int64_t>(shape[2] * shape[3]), to_i64(shape, 0, 2), true};
  }
  return {1, to_i64(shape, 0, shape.size()), false};
}

Layout measurement_layout(SystemId system, const Shape& shape) {
  if (system == SystemId::video_cs) {
    if (shape.size() != 3) throw ShapeError("video measurement must be (y, x, channel)");
    return {static_cast<std::int64_t>(shape[2]), to_i64(shape, 0, 2), true};
  }
  return {1, to_i64(shape, 0, shape.size()), false};
}

LstmCellImpl::LstmCellImpl(bool conv, std::int64_t input, std::int64_t hidden)
    : conv_(conv), hidden_(hidden) {
  torch::Tensor bias;
  if (conv_) {
    gate_conv_ = register_module("gates", nn::Conv2d(nn::Conv2dOptions(input + hidden, 4 * hidden, 3).padding(1)));
    bias = gate_conv_->bias;
  } else {
    gate_lin_ = register_module("gates", nn::Linear(input + hidden, 4 * hidden));
    bias = gate_lin_->bias;
  }
  torch::NoGradGuard ng;
  bias.narrow(0, hidden, hidden).add_(1.0);  // forget gate starts open
}

LstmState LstmCellImpl::forward(const torch::Tensor& x, const LstmState& s) {
  const torch::Tensor xh = torch::cat({x, s.h}, 1);
  const torch::Tensor gates = conv_ ? gate_conv_->forward(xh) : gate_lin_->forward(xh);
  auto parts = gates.chunk(4, 1);
  const torch::Tensor c = torch::sigmoid(parts[1]) * s.c + torch::sigmoid(parts[0]) * torch::tanh(parts[2]);
  return {torch::sigmoid(parts[3]) * torch::tanh(c), c};
}

namespace {

std::int64_t halved(std::int64_t n, int times) {
  for (int i = 0; i < times; ++i) n = (n + 1) / 2;
  return n;
}

nn::Sequential conv_stack2d(std::int64_t in, const std::array<std::size_t, 3>& w) {
  nn::Sequential s;
  std::int64_t c = in;
  for (std::size_t k = 0; k < 3; ++k) {
    const auto out = static_cast<std::int64_t>(w[k]);
    s->push_back(nn::Conv2d(nn::Conv2dOptions(c, out, 3).stride(2).padding(1)));
    s->push_back(nn::SiLU());
    c = out;
  }
  return s;
}

nn::Sequential conv_stack1d(std::int64_t in, const std::array<std::size_t, 3>& w) {
  nn::Sequential s;
  std::int64_t c = in;
  for (std::size_t k = 0; k < 3; ++k) {
    const auto out = static_cast<std::int64_t>(w[k]);
    s->push_back(nn::Conv1d(nn::Conv1dOptions(c, out, 3).stride(2).padding(1)));
    s->push_back(nn::SiLU());
    c = out;
  }
  return s;
}

nn::Sequential dense_stack(std::int64_t in, std::int64_t width) {
  nn::Sequential s;
  s->push_back(nn::Flatten());
  s->push_back(nn::Linear(in, width));
  s->push_back(nn::SiLU());
  s->push_back(nn::Linear(width, width));
  s->push_back(nn::SiLU());
  return s;
}

}  // namespace

RetrievalNetImpl::RetrievalNetImpl(const NetOptions& opt, const ModelConfig& cfg)
    : opt_(opt), latent_(static_cast<std::int64_t>(cfg.latent_dim)) {
  const auto& w = cfg.enc_channels;
  const auto hidden = static_cast<std::int64_t>(cfg.lstm_hidden);
  const auto feat = static_cast<std::int64_t>(cfg.feature_dim);
  embed_dim_ = static_cast<std::int64_t>(cfg.embed_dim);
  const std::int64_t top = static_cast<std::int64_t>(w[2]);
  const std::int64_t sig_c = opt.signal.channels, in_c = opt.input.channels;

  std::int64_t ctx_width = 0, grid = 1;
  bool conv_cells = false;
  switch (opt.family) {
    case NetFamily::image: {
      if (opt.signal.spatial.size() != 2 || opt.signal.spatial != opt.input.spatial) {
        throw ShapeError("image networks need signal and measurement on the same 2-D grid");
      }
      for (auto s : opt.signal.spatial) {
        if (s % 8 != 0) throw ShapeError("image networks need grid sizes divisible by 8");
        feat_spatial_.push_back(s / 8);
        grid *= s / 8;
      }
      meas_convs_ = register_module("measurement_encoder", nn::ModuleList());
      std::int64_t c = in_c;
      for (std::size_t k = 0; k < 3; ++k) {
        meas_convs_->push_back(nn::Conv2d(nn::Conv2dOptions(c, static_cast<std::int64_t>(w[k]), 3).stride(2).padding(1)));
        c = static_cast<std::int64_t>(w[k]);
      }
      if (opt.recognition) sig_enc_ = register_module("signal_encoder", conv_stack2d(sig_c, w));
      ctx_width = top;
      conv_cells = true;
      const auto w0 = static_cast<std::int64_t>(w[0]), w1 = static_cast<std::int64_t>(w[1]);
      up_ = register_module("decoder_output", nn::ModuleList());
      up_->push_back(nn::ConvTranspose2d(nn::ConvTranspose2dOptions(hidden, w1, 4).stride(2).padding(1)));
      up_->push_back(nn::ConvTranspose2d(nn::ConvTranspose2dOptions(2 * w1, w0, 4).stride(2).padding(1)));
      up_->push_back(nn::ConvTranspose2d(nn::ConvTranspose2dOptions(2 * w0, sig_c, 4).stride(2).padding(1)));
      break;
    }
    case NetFamily::trace: {
      if (opt.input.spatial.size() != 2 || opt.signal.spatial.size() != 1) {
        throw ShapeError("trace networks need a 1-D signal and a 2-D measurement");
      }
      const std::int64_t meas_flat = top * halved(opt.input.spatial[0], 3) * halved(opt.input.spatial[1], 3);
      auto me = conv_stack2d(in_c, w);
      me->push_back(nn::Flatten());
      me->push_back(nn::Linear(meas_flat, feat));
      me->push_back(nn::SiLU());
      meas_enc_ = register_module("measurement_encoder", me);
      if (opt.recognition) {
        auto se = conv_stack1d(sig_c, w);
        se->push_back(nn::Flatten());
        se->push_back(nn::Linear(top * halved(opt.signal.spatial[0], 3), feat));
        se->push_back(nn::SiLU());
        sig_enc_ = register_module("signal_encoder", se);
      }
      ctx_width = feat;
      out_ = nn::Sequential(nn::Linear(hidden, opt.signal.numel()));
      break;
    }
    case NetFamily::vector: {
      meas_enc_ = register_module("measurement_encoder", dense_stack(opt.input.numel(), feat));
      if (opt.recognition) sig_enc_ = register_module("signal_encoder", dense_stack(opt.signal.numel(), feat));
      ctx_width = feat;
      out_ = nn::Sequential(nn::Linear(hidden, opt.signal.numel()));
      break;
    }
  }
  if (out_) register_module("decoder_output", out_);

  if (opt.recognition) {
    recognition_lstm = register_module("recognition_lstm", LstmCell(conv_cells, 2 * ctx_width, hidden));
    recog_head_ = register_module("recognition_head", nn::Linear(hidden * grid, 2 * latent_));
  }
  prior_lstm = register_module("prior_lstm", LstmCell(conv_cells, ctx_width, hidden));
  prior_head_ = register_module("prior_head", nn::Linear(hidden * grid, 2 * latent_));
  embed_ = register_module("latent_embed", nn::Linear(latent_, embed_dim_ * grid));
  decoder_lstm = register_module("decoder_lstm", LstmCell(conv_cells, embed_dim_ + ctx_width, hidden));

  if (opt.identity_skip) {
    if (opt.family != NetFamily::image) throw UnsupportedModelError("identity skip needs an image network");
    skip_ = register_module("skip", nn::Conv2d(nn::Conv2dOptions(in_c, sig_c, 1)));
    torch::NoGradGuard ng;
    skip_->weight.zero_();
    skip_->bias.zero_();
    for (std::int64_t c = 0; c < sig_c; ++c) skip_->weight.index_put_({c, 0, 0, 0}, 1.0);
  }
}

torch::Tensor RetrievalNetImpl::encode_measurement(const torch::Tensor& x, std::vector<torch::Tensor>* skips) {
  if (!meas_convs_) return meas_enc_->forward(x);
  torch::Tensor h = x;
  for (std::size_t k = 0; k < meas_convs_->size(); ++k) {
    h = torch::silu(meas_convs_[k]->as<nn::Conv2d>()->forward(h));
    if (skips && k + 1 < meas_convs_->size()) skips->push_back(h);
  }
  return h;
}

torch::Tensor RetrievalNetImpl::encode_signal(const torch::Tensor& x) {
  if (!sig_enc_) throw StateError("this network has no recognition branch");
  return sig_enc_->forward(x);
}

LstmState RetrievalNetImpl::zero_state(const LstmCell& cell, std::int64_t batch,
                                       const torch::TensorOptions& o) const {
  std::vector<std::int64_t> dims{batch, cell->hidden()};
  dims.insert(dims.end(), feat_spatial_.begin(), feat_spatial_.end());
  return {torch::zeros(dims, o), torch::zeros(dims, o)};
}

torch::Tensor RetrievalNetImpl::head(nn::Linear& lin, const torch::Tensor& h) {
  return lin->forward(h.flatten(1));
}

torch::Tensor RetrievalNetImpl::recognition_head(const torch::Tensor& h) {
  if (!recog_head_) throw StateError("this network has no recognition branch");
  return head(recog_head_, h);
}

torch::Tensor RetrievalNetImpl::prior_head(const torch::Tensor& h) { return head(prior_head_, h); }

torch::Tensor RetrievalNetImpl::embed(const torch::Tensor& z) {
  torch::Tensor e = embed_->forward(z);
  if (opt_.family == NetFamily::image) {
    e = e.view({z.size(0), embed_dim_, feat_spatial_[0], feat_spatial_[1]});
  }
  return e;
}

torch::Tensor RetrievalNetImpl::decode_output(const torch::Tensor& h, const torch::Tensor& input,
                                              const std::vector<torch::Tensor>& skips) {
  torch::Tensor out;
  if (up_) {
    if (skips.size() != 2) throw StateError("image decoder needs the two encoder skip maps");
    out = torch::silu(up_[0]->as<nn::ConvTranspose2d>()->forward(h));
    out = torch::silu(up_[1]->as<nn::ConvTranspose2d>()->forward(torch::cat({out, skips[1]}, 1)));
    out = up_[2]->as<nn::ConvTranspose2d>()->forward(torch::cat({out, skips[0]}, 1));
  } else {
    out = out_->forward(h);
    std::vector<std::int64_t> dims{h.size(0), opt_.signal.channels};
    dims.insert(dims.end(), opt_.signal.spatial.begin(), opt_.signal.spatial.end());
    out = out.view(dims);
  }
  if (skip_) out = out + skip_->forward(input);
  return out;
}

}  // namespace varsig
