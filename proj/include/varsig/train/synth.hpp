#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "varsig/core/dataset.hpp"
#include "varsig/physics/fresnel.hpp"
#include "varsig/physics/streaking.hpp"
#include "varsig/physics/video_cs.hpp"

namespace varsig {

struct SynthOptions {
  std::size_t n = 1;
  std::uint64_t seed = 0;
  std::string split = "train";
  double noise_sigma = 0.0;  // additive Gaussian noise on g, 0 disables
};

/// Random XUV/IR pulses. A fraction `duplicate_rate` of records copy every
/// phase coefficient of the previous record except the XUV k0, so their
/// traces coincide; meta "cep_duplicate_of" names the partner.
Dataset synth_pulse_dataset(const SynthOptions& opt, const StreakingConfig& cfg,
                            double duplicate_rate = 0.05);

/// Four-frame clips: with `image_dir`, each frame is a random image from the
/// directory cropped to the frame size; otherwise synthetic moving shapes.
Dataset synth_video_dataset(const SynthOptions& opt, const VideoConfig& cfg,
                            const std::optional<std::filesystem::path>& image_dir = std::nullopt);

/// 28 x 28 digits zero-padded into the hologram grid, scaled to [0, 1].
/// Digits come from `mnist_path` (an IDX file or a directory holding
/// train-images-idx3-ubyte), else from $VARSIG_MNIST_DIR, else from the
/// procedural renderer.
Dataset synth_hologram_dataset(const SynthOptions& opt, const FresnelConfig& cfg,
                               const std::optional<std::filesystem::path>& mnist_path = std::nullopt);

/// Two-cluster ambiguity set for the generic squared-linear operator:
/// records come in pairs (f, -f) with f = a u + delta, u a fixed direction
/// derived from the operator seed, a ~ U[0.5, 1.5], delta ~ N(0, 0.05^2).
Dataset synth_generic_dataset(const SynthOptions& opt, const json& physics);

/// Fixed cluster direction of the generic set (unit length times sqrt(n)).
std::vector<double> cluster_direction(std::size_t n, std::uint64_t operator_seed);

/// Dispatches on `system` with the physics config in JSON form. `source` is
/// the image directory (video) or MNIST path (hologram).
Dataset synth_dataset(SystemId system, const SynthOptions& opt, const json& physics,
                      const std::optional<std::filesystem::path>& source = std::nullopt);

}  // namespace varsig
