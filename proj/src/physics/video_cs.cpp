#include "varsig/physics/video_cs.hpp"

#include <algorithm>

#include "varsig/core/error.hpp"
#include "varsig/core/rng.hpp"

namespace varsig {

json VideoConfig::to_json() const {
  return {{"size", size},
          {"channels", channels},
          {"frames", frames},
          {"probability", probability},
          {"mask_seed", mask_seed}};
}

VideoConfig VideoConfig::from_json(const json& j) {
  VideoConfig c;
  if (!j.is_object()) throw ConfigError("video config must be a JSON object");
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "size") c.size = v.get<std::size_t>();
      else if (key == "channels") c.channels = v.get<std::size_t>();
      else if (key == "frames") c.frames = v.get<std::size_t>();
      else if (key == "probability") c.probability = v.get<double>();
      else if (key == "mask_seed") c.mask_seed = v.get<std::uint64_t>();
      else throw ConfigError("unknown video config key '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("video config: ") + e.what());
  }
  return c;
}

std::size_t MaskSet::popcount(std::size_t frame) const {
  const auto* p = &m[frame * size * size];
  return static_cast<std::size_t>(std::count(p, p + size * size, std::uint8_t{1}));
}

MaskSet MaskSet::constant(std::size_t size, std::size_t frames, std::uint8_t value) {
  return MaskSet{size, frames, 0, std::vector<std::uint8_t>(size * size * frames, value ? 1 : 0)};
}

MaskSet generate_masks(std::uint64_t seed, std::size_t size, std::size_t frames,
                       double probability) {
  if (!(probability >= 0.0 && probability <= 1.0)) {
    throw DomainError("mask probability must lie in [0, 1]");
  }
  MaskSet out{size, frames, seed, std::vector<std::uint8_t>(size * size * frames)};
  for (std::size_t i = 0; i < frames; ++i) {
    SplitMix64 rng(derive_seed(seed, i));
    for (std::size_t p = 0; p < size * size; ++p) {
      out.m[i * size * size + p] = rng.bernoulli(probability) ? 1 : 0;
    }
  }
  return out;
}

namespace {

void check_sizes(std::size_t f_len, std::size_t g_len, const MaskSet& masks,
                 std::size_t channels) {
  const std::size_t pix = masks.size * masks.size;
  if (masks.m.size() != pix * masks.frames) throw ShapeError("mask set is inconsistent");
  if (f_len != pix * channels * masks.frames) {
    throw ShapeError("video frames need " + std::to_string(pix * channels * masks.frames) +
                     " values, got " + std::to_string(f_len));
  }
  if (g_len != pix * channels) {
    throw ShapeError("video measurement needs " + std::to_string(pix * channels) +
                     " values, got " + std::to_string(g_len));
  }
}

void compress_into(std::span<const double> f, const MaskSet& masks, std::size_t channels,
                   std::span<double> g) {
  check_sizes(f.size(), g.size(), masks, channels);
  const std::size_t pix = masks.size * masks.size, nf = masks.frames;
  for (std::size_t p = 0; p < pix; ++p) {
    for (std::size_t c = 0; c < channels; ++c) {
      const double* fp = &f[(p * channels + c) * nf];
      double s = 0.0;
      for (std::size_t i = 0; i < nf; ++i) {
        if (masks.m[i * pix + p]) s += fp[i];
      }
      g[p * channels + c] = s;
    }
  }
}

void adjoint_into(std::span<const double> g, const MaskSet& masks, std::size_t channels,
                  std::span<double> f) {
  check_sizes(f.size(), g.size(), masks, channels);
  const std::size_t pix = masks.size * masks.size, nf = masks.frames;
  for (std::size_t p = 0; p < pix; ++p) {
    for (std::size_t c = 0; c < channels; ++c) {
      double* fp = &f[(p * channels + c) * nf];
      for (std::size_t i = 0; i < nf; ++i) fp[i] = masks.m[i * pix + p] ? g[p * channels + c] : 0.0;
    }
  }
}

}  // namespace

std::vector<double> compress(std::span<const double> f, const MaskSet& masks,
                             std::size_t channels) {
  std::vector<double> g(masks.size * masks.size * channels);
  compress_into(f, masks, channels, g);
  return g;
}

std::vector<double> adjoint(std::span<const double> g, const MaskSet& masks,
                            std::size_t channels) {
  std::vector<double> f(masks.size * masks.size * channels * masks.frames);
  adjoint_into(g, masks, channels, f);
  return f;
}

Eigen::SparseMatrix<double, Eigen::RowMajor> as_matrix(const MaskSet& masks,
                                                       std::size_t channels) {
  const std::size_t pix = masks.size * masks.size, nf = masks.frames;
  const auto rows = static_cast<Eigen::Index>(pix * channels);
  Eigen::SparseMatrix<double, Eigen::RowMajor> a(rows, rows * static_cast<Eigen::Index>(nf));
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(pix * channels * nf);
  for (std::size_t p = 0; p < pix; ++p) {
    for (std::size_t c = 0; c < channels; ++c) {
      const std::size_t row = p * channels + c;
      for (std::size_t i = 0; i < nf; ++i) {
        if (masks.m[i * pix + p]) {
          trip.emplace_back(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(row * nf + i), 1.0);
        }
      }
    }
  }
  a.setFromTriplets(trip.begin(), trip.end());
  return a;
}

VideoCsModel::VideoCsModel(VideoConfig cfg)
    : VideoCsModel(cfg, generate_masks(cfg.mask_seed, cfg.size, cfg.frames, cfg.probability)) {}

VideoCsModel::VideoCsModel(VideoConfig cfg, MaskSet masks)
    : cfg_(std::move(cfg)), masks_(std::move(masks)) {
  if (cfg_.size == 0 || cfg_.channels == 0 || cfg_.frames == 0) {
    throw ConfigError("video config dimensions must be positive");
  }
  if (masks_.size != cfg_.size || masks_.frames != cfg_.frames) {
    throw ConfigError("mask set does not match the video config");
  }
}

void VideoCsModel::apply(std::span<const double> f, std::span<double> g) const {
  compress_into(f, masks_, cfg_.channels, g);
}

void VideoCsModel::vjp(std::span<const double>, std::span<const double> g_bar,
                       std::span<double> f_bar) const {
  adjoint_into(g_bar, masks_, cfg_.channels, f_bar);
}

void VideoCsModel::adjoint(std::span<const double> g, std::span<double> f) const {
  adjoint_into(g, masks_, cfg_.channels, f);
}

}  // namespace varsig
