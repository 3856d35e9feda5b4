#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "varsig/core/rng.hpp"
#include "varsig/train/idx.hpp"

namespace varsig {

/// 8-bit colour image widened to doubles in [0, 1], row-major (y, x, rgb).
struct RgbImage {
  std::size_t width = 0, height = 0;
  std::vector<double> rgb;
};

/// Reads an 8-bit PNG (any colour type) or binary/ASCII PPM (P6/P3).
RgbImage load_image(const std::filesystem::path& path);
/// Sorted list of *.png / *.ppm files in `dir`.
std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir);
/// Centre-crops to a square and resamples bilinearly to n x n.
RgbImage fit_square(const RgbImage& img, std::size_t n);

/// Writes an 8-bit RGB (channels = 3) or grey (channels = 1) PNG.
void write_png(const std::filesystem::path& path, std::size_t width, std::size_t height,
               std::size_t channels, std::span<const std::uint8_t> pixels);

/// 28 x 28 handwritten-style digit rendered from stroke templates with random
/// affine jitter and stroke width.
std::vector<std::uint8_t> render_digit(int digit, SplitMix64& rng);

/// MNIST-shaped image and label IDX arrays of procedurally rendered digits.
struct DigitSet {
  IdxArray images;  // (n, 28, 28)
  IdxArray labels;  // (n)
};
DigitSet synthetic_digits(std::size_t n, std::uint64_t seed);

/// Loads MNIST images from an IDX file or from a directory holding
/// train-images-idx3-ubyte (optionally .gz-free copies only).
IdxArray load_digit_images(const std::filesystem::path& path);

/// A short clip of translating rectangles and discs on a coloured background,
/// flat (y, x, channel, frame) layout, values in [0, 1].
std::vector<double> synthetic_scene(SplitMix64& rng, std::size_t size, std::size_t frames);

}  // namespace varsig
