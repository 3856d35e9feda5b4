#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "varsig/core/types.hpp"
#include "varsig/model/variational.hpp"

namespace varsig::plots {

// Small PNG renderers for the --plots option. Values are scaled to the
// full 8-bit range per figure.

void loss_curve(const std::filesystem::path& path, const std::vector<EpochStats>& curve);

/// Grayscale image of a (rows, cols) array.
void heatmap(const std::filesystem::path& path, std::span<const double> values, std::size_t rows,
             std::size_t cols, std::size_t upscale = 4);

/// Video signal (y, x, channel, frame) as RGB frames side by side.
void video_frames(const std::filesystem::path& path, std::span<const double> values, const Shape& shape);

/// Overlaid line plots (one per series) on a common vertical scale.
void lines(const std::filesystem::path& path, const std::vector<std::vector<double>>& series);

/// |E| of the XUV part of a packed streaking signal.
std::vector<double> xuv_amplitude(std::span<const double> packed, std::size_t n_xuv);

/// Picks a rendering for a signal or measurement of `system`; `n_xuv` is
/// only used for streaking signals.
void signal(const std::filesystem::path& path, SystemId system, std::span<const double> values,
            const Shape& shape, std::size_t n_xuv = 200);

}  // namespace varsig::plots
