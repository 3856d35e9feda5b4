#pragma once

#include <Eigen/SparseCore>
#include <cstdint>
#include <span>
#include <vector>

#include "varsig/core/forward_model.hpp"

namespace varsig {

struct VideoConfig {
  std::size_t size = 64;      // N, frames are N x N
  std::size_t channels = 3;
  std::size_t frames = 4;     // K
  double probability = 0.5;   // mask transmittance
  std::uint64_t mask_seed = 0;

  json to_json() const;
  static VideoConfig from_json(const json& j);
};

/// Binary coded-aperture masks, one N x N plane per frame, shared across
/// colour channels. Stored row-major as 0/1 bytes, [frame][y][x].
struct MaskSet {
  std::size_t size = 0;
  std::size_t frames = 0;
  std::uint64_t seed = 0;
  std::vector<std::uint8_t> m;

  std::uint8_t at(std::size_t frame, std::size_t y, std::size_t x) const {
    return m[(frame * size + y) * size + x];
  }
  std::size_t popcount(std::size_t frame) const;
  static MaskSet constant(std::size_t size, std::size_t frames, std::uint8_t value);
};

/// Bernoulli(p) masks from SplitMix64; frame i draws from stream
/// derive_seed(seed, i) in row-major pixel order.
MaskSet generate_masks(std::uint64_t seed, std::size_t size = 64, std::size_t frames = 4,
                       double probability = 0.5);

// Frame arrays use the flat (y, x, channel, frame) order; measurements use
// (y, x, channel).
std::vector<double> compress(std::span<const double> f, const MaskSet& masks,
                             std::size_t channels = 3);
std::vector<double> adjoint(std::span<const double> g, const MaskSet& masks,
                            std::size_t channels = 3);
Eigen::SparseMatrix<double, Eigen::RowMajor> as_matrix(const MaskSet& masks,
                                                       std::size_t channels = 3);

class VideoCsModel final : public ForwardModel {
 public:
  explicit VideoCsModel(VideoConfig cfg = {});
  VideoCsModel(VideoConfig cfg, MaskSet masks);

  SystemId system() const noexcept override { return SystemId::video_cs; }
  std::string name() const override { return "video_cs"; }
  bool is_linear() const noexcept override { return true; }
  Shape signal_shape() const override { return {cfg_.size, cfg_.size, cfg_.channels, cfg_.frames}; }
  Shape measurement_shape() const override { return {cfg_.size, cfg_.size, cfg_.channels}; }
  bool nonneg_measurement() const noexcept override { return false; }

  void apply(std::span<const double> f, std::span<double> g) const override;
  void vjp(std::span<const double> f, std::span<const double> g_bar,
           std::span<double> f_bar) const override;
  bool has_adjoint() const noexcept override { return true; }
  void adjoint(std::span<const double> g, std::span<double> f) const override;
  json config_json() const override { return cfg_.to_json(); }

  using ForwardModel::adjoint;
  using ForwardModel::apply;
  using ForwardModel::vjp;

  const VideoConfig& config() const noexcept { return cfg_; }
  const MaskSet& masks() const noexcept { return masks_; }

 private:
  VideoConfig cfg_;
  MaskSet masks_;
};

}  // namespace varsig
