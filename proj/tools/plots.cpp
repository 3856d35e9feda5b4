#include "plots.hpp"

#include <algorithm>
#include <cmath>

#include "varsig/train/images.hpp"

namespace varsig::plots {

namespace {

struct Canvas {
  std::size_t w, h;
  std::vector<std::uint8_t> rgb;

  Canvas(std::size_t width, std::size_t height) : w(width), h(height), rgb(width * height * 3, 255) {}

  void put(long x, long y, const std::array<std::uint8_t, 3>& c) {
    if (x < 0 || y < 0 || x >= static_cast<long>(w) || y >= static_cast<long>(h)) return;
    std::copy(c.begin(), c.end(), rgb.begin() + static_cast<long>((y * static_cast<long>(w) + x) * 3));
  }

  void line(double x0, double y0, double x1, double y1, const std::array<std::uint8_t, 3>& c) {
    const int steps = static_cast<int>(std::max(std::abs(x1 - x0), std::abs(y1 - y0))) + 1;
    for (int i = 0; i <= steps; ++i) {
      const double t = static_cast<double>(i) / steps;
      put(std::lround(x0 + t * (x1 - x0)), std::lround(y0 + t * (y1 - y0)), c);
    }
  }

  void save(const std::filesystem::path& path) const { write_png(path, w, h, 3, rgb); }
};

const std::array<std::array<std::uint8_t, 3>, 6> kPalette{{
    {31, 119, 180}, {255, 127, 14}, {44, 160, 44}, {214, 39, 40}, {148, 103, 189}, {140, 86, 75}}};

std::uint8_t to_byte(double v, double lo, double hi) {
  if (!(hi > lo)) return 0;
  return static_cast<std::uint8_t>(std::lround(255.0 * std::clamp((v - lo) / (hi - lo), 0.0, 1.0)));
}

}  // namespace

void lines(const std::filesystem::path& path, const std::vector<std::vector<double>>& series) {
  constexpr std::size_t W = 640, H = 360, pad = 30;
  Canvas cv(W, H);
  double lo = INFINITY, hi = -INFINITY;
  std::size_t len = 0;
  for (const auto& s : series) {
    len = std::max(len, s.size());
    for (double v : s) {
      if (!std::isfinite(v)) continue;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  const std::array<std::uint8_t, 3> axis{0, 0, 0};
  cv.line(pad, H - pad, W - pad, H - pad, axis);
  cv.line(pad, pad, pad, H - pad, axis);
  if (len >= 1 && hi >= lo) {
    if (hi == lo) hi = lo + 1.0;
    const double sx = len > 1 ? static_cast<double>(W - 2 * pad) / static_cast<double>(len - 1) : 0.0;
    const double sy = static_cast<double>(H - 2 * pad) / (hi - lo);
    for (std::size_t k = 0; k < series.size(); ++k) {
      const auto& s = series[k];
      for (std::size_t i = 1; i < s.size(); ++i) {
        cv.line(pad + sx * static_cast<double>(i - 1), H - pad - sy * (s[i - 1] - lo), pad + sx * static_cast<double>(i),
                H - pad - sy * (s[i] - lo), kPalette[k % kPalette.size()]);
      }
    }
  }
  cv.save(path);
}

void loss_curve(const std::filesystem::path& path, const std::vector<EpochStats>& curve) {
  // log10 of the objective shift so that negative bounds still plot
  double lo = INFINITY;
  for (const auto& e : curve) lo = std::min(lo, e.loss);
  std::vector<double> y;
  for (const auto& e : curve) y.push_back(std::log10(e.loss - lo + 1.0));
  lines(path, {y});
}

void heatmap(const std::filesystem::path& path, std::span<const double> values, std::size_t rows,
             std::size_t cols, std::size_t upscale) {
  const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
  const std::size_t W = cols * upscale, H = rows * upscale;
  std::vector<std::uint8_t> px(W * H);
  for (std::size_t y = 0; y < H; ++y)
    for (std::size_t x = 0; x < W; ++x) px[y * W + x] = to_byte(values[(y / upscale) * cols + x / upscale], *mn, *mx);
  write_png(path, W, H, 1, px);
}

void video_frames(const std::filesystem::path& path, std::span<const double> values, const Shape& shape) {
  const std::size_t n = shape[0], m = shape[1], ch = shape[2], frames = shape[3];
  const std::size_t W = m * frames;
  std::vector<std::uint8_t> px(n * W * 3);
  for (std::size_t k = 0; k < frames; ++k)
    for (std::size_t y = 0; y < n; ++y)
      for (std::size_t x = 0; x < m; ++x)
        for (std::size_t c = 0; c < 3; ++c) {
          const double v = values[((y * m + x) * ch + std::min(c, ch - 1)) * frames + k];
          px[(y * W + k * m + x) * 3 + c] = to_byte(v, 0.0, 1.0);
        }
  write_png(path, W, n, 3, px);
}

std::vector<double> xuv_amplitude(std::span<const double> packed, std::size_t n_xuv) {
  std::vector<double> a(n_xuv);
  for (std::size_t i = 0; i < n_xuv; ++i) a[i] = std::hypot(packed[i], packed[n_xuv + i]);
  return a;
}

void signal(const std::filesystem::path& path, SystemId system, std::span<const double> values,
            const Shape& shape, std::size_t n_xuv) {
  if (system == SystemId::video_cs && shape.size() == 4) {
    video_frames(path, values, shape);
  } else if (shape.size() == 2) {
    heatmap(path, values, shape[0], shape[1], std::max<std::size_t>(1, 256 / std::max(shape[0], shape[1])));
  } else if (system == SystemId::streaking) {
    lines(path, {xuv_amplitude(values, n_xuv)});
  } else {
    lines(path, {std::vector<double>(values.begin(), values.end())});
  }
}

}  // namespace varsig::plots
