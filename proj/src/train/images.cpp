#include "varsig/train/images.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <numbers>
#include <sstream>

#include "varsig/core/error.hpp"
#include "varsig/core/tensor_file.hpp"

namespace varsig {

namespace fs = std::filesystem;

namespace {

RgbImage load_png(const fs::path& path, std::span<const std::uint8_t> bytes) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&img, bytes.data(), bytes.size())) {
    throw FormatError("png: " + std::string(img.message) + " in " + path.string(), 0);
  }
  img.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, buf.data(), 0, nullptr)) {
    png_image_free(&img);
    throw FormatError("png: " + std::string(img.message) + " in " + path.string(), 0);
  }
  RgbImage out{img.width, img.height, std::vector<double>(buf.size())};
  for (std::size_t i = 0; i < buf.size(); ++i) out.rgb[i] = buf[i] / 255.0;
  return out;
}

RgbImage load_ppm(const fs::path& path, std::span<const std::uint8_t> bytes) {
  std::size_t pos = 2;
  auto skip_space = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto read_int = [&]() -> std::size_t {
    skip_space();
    const std::size_t start = pos;
    std::size_t v = 0;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) v = v * 10 + (bytes[pos++] - '0');
    if (pos == start) throw FormatError("ppm: expected an integer in " + path.string(), pos);
    return v;
  };
  const bool ascii = bytes[1] == '3';
  const std::size_t w = read_int(), h = read_int(), maxval = read_int();
  if (maxval == 0 || maxval > 255) throw FormatError("ppm: only 8-bit images are supported", pos);
  RgbImage out{w, h, std::vector<double>(w * h * 3)};
  if (ascii) {
    for (double& v : out.rgb) v = static_cast<double>(read_int()) / static_cast<double>(maxval);
  } else {
    ++pos;  // single whitespace after maxval
    if (bytes.size() < pos + out.rgb.size()) throw FormatError("ppm: truncated payload", bytes.size());
    for (std::size_t i = 0; i < out.rgb.size(); ++i) {
      out.rgb[i] = static_cast<double>(bytes[pos + i]) / static_cast<double>(maxval);
    }
  }
  return out;
}

// Stroke templates in a unit box (x right, y down).
using Stroke = std::vector<std::array<double, 2>>;

Stroke arc(double cx, double cy, double rx, double ry, double a0, double a1, int n = 16) {
  Stroke s;
  for (int i = 0; i <= n; ++i) {
    const double a = a0 + (a1 - a0) * i / n;
    s.push_back({cx + rx * std::cos(a), cy + ry * std::sin(a)});
  }
  return s;
}

std::vector<Stroke> digit_strokes(int d) {
  constexpr double pi = std::numbers::pi;
  switch (d) {
    case 0: return {arc(0.5, 0.5, 0.28, 0.4, 0, 2 * pi, 28)};
    case 1: return {{{0.35, 0.25}, {0.52, 0.1}, {0.52, 0.9}}};
    case 2: {
      Stroke s = arc(0.5, 0.32, 0.27, 0.22, -pi, 0.25 * pi);
      s.push_back({0.22, 0.9});
      s.push_back({0.8, 0.9});
      return {s};
    }
    case 3: return {arc(0.48, 0.3, 0.26, 0.2, -0.9 * pi, 0.5 * pi),
                    arc(0.48, 0.7, 0.3, 0.2, -0.5 * pi, 0.9 * pi)};
    case 4: return {{{0.66, 0.9}, {0.66, 0.1}, {0.2, 0.65}, {0.82, 0.65}}};
    case 5: {
      Stroke s{{0.78, 0.1}, {0.32, 0.1}, {0.28, 0.46}};
      Stroke b = arc(0.5, 0.66, 0.28, 0.24, -0.75 * pi, 0.8 * pi);
      s.insert(s.end(), b.begin(), b.end());
      return {s};
    }
    case 6: {
      Stroke s{{0.7, 0.1}, {0.42, 0.35}};
      Stroke b = arc(0.5, 0.66, 0.25, 0.24, -0.8 * pi, 1.2 * pi, 24);
      s.insert(s.end(), b.begin(), b.end());
      return {s};
    }
    case 7: return {{{0.2, 0.1}, {0.8, 0.1}, {0.42, 0.9}}};
    case 8: return {arc(0.5, 0.3, 0.22, 0.2, 0, 2 * pi, 24), arc(0.5, 0.7, 0.27, 0.21, 0, 2 * pi, 24)};
    case 9: {
      Stroke s = arc(0.5, 0.33, 0.25, 0.23, 0.2 * pi, 2.2 * pi, 24);
      s.push_back({0.72, 0.9});
      return {s};
    }
    default: break;
  }
  throw DomainError("render_digit: digit must be 0..9");
}

double segment_distance(double px, double py, const std::array<double, 2>& a,
                        const std::array<double, 2>& b) {
  const double vx = b[0] - a[0], vy = b[1] - a[1];
  const double len2 = vx * vx + vy * vy;
  double t = len2 > 0 ? ((px - a[0]) * vx + (py - a[1]) * vy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double dx = px - (a[0] + t * vx), dy = py - (a[1] + t * vy);
  return std::sqrt(dx * dx + dy * dy);
}

}  // namespace

RgbImage load_image(const fs::path& path) {
  const auto bytes = read_file_bytes(path);
  static const std::uint8_t png_sig[8] = {0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A};
  if (bytes.size() >= 8 && std::memcmp(bytes.data(), png_sig, 8) == 0) return load_png(path, bytes);
  if (bytes.size() >= 2 && bytes[0] == 'P' && (bytes[1] == '6' || bytes[1] == '3')) {
    return load_ppm(path, bytes);
  }
  throw FormatError("unsupported image format: " + path.string(), 0);
}

std::vector<fs::path> list_images(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw MissingFileError(dir.string());
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::string ext = e.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".png" || ext == ".ppm") out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

RgbImage fit_square(const RgbImage& img, std::size_t n) {
  if (img.width == 0 || img.height == 0) throw ShapeError("fit_square: empty image");
  const std::size_t side = std::min(img.width, img.height);
  const double x0 = static_cast<double>((img.width - side) / 2);
  const double y0 = static_cast<double>((img.height - side) / 2);
  const double scale = static_cast<double>(side) / static_cast<double>(n);
  RgbImage out{n, n, std::vector<double>(n * n * 3)};
  for (std::size_t y = 0; y < n; ++y) {
    for (std::size_t x = 0; x < n; ++x) {
      const double sy = std::clamp(y0 + (y + 0.5) * scale - 0.5, y0, y0 + static_cast<double>(side - 1));
      const double sx = std::clamp(x0 + (x + 0.5) * scale - 0.5, x0, x0 + static_cast<double>(side - 1));
      const auto iy = static_cast<std::size_t>(sy), ix = static_cast<std::size_t>(sx);
      const std::size_t iy1 = std::min(iy + 1, img.height - 1), ix1 = std::min(ix + 1, img.width - 1);
      const double fy = sy - iy, fx = sx - ix;
      for (std::size_t c = 0; c < 3; ++c) {
        auto at = [&](std::size_t yy, std::size_t xx) { return img.rgb[(yy * img.width + xx) * 3 + c]; };
        out.rgb[(y * n + x) * 3 + c] = (1 - fy) * ((1 - fx) * at(iy, ix) + fx * at(iy, ix1)) +
                                       fy * ((1 - fx) * at(iy1, ix) + fx * at(iy1, ix1));
      }
    }
  }
  return out;
}

void write_png(const fs::path& path, std::size_t width, std::size_t height, std::size_t channels,
               std::span<const std::uint8_t> pixels) {
  if (pixels.size() != width * height * channels || (channels != 1 && channels != 3)) {
    throw ShapeError("write_png: pixel buffer does not match the image size");
  }
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(width);
  img.height = static_cast<png_uint_32>(height);
  img.format = channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&img, path.c_str(), 0, pixels.data(), 0, nullptr)) {
    throw StateError("write_png: " + std::string(img.message));
  }
}

std::vector<std::uint8_t> render_digit(int digit, SplitMix64& rng) {
  const auto strokes = digit_strokes(digit);
  const double angle = rng.uniform(-0.25, 0.25);
  const double scale = rng.uniform(0.8, 1.05);
  const double shear = rng.uniform(-0.2, 0.2);
  const double tx = rng.uniform(-1.5, 1.5), ty = rng.uniform(-1.5, 1.5);
  const double radius = rng.uniform(0.9, 1.6);
  // Digits occupy the central 20 x 20 box like MNIST.
  const double ca = std::cos(angle), sa = std::sin(angle);
  std::vector<std::vector<std::array<double, 2>>> pix;
  for (const auto& s : strokes) {
    std::vector<std::array<double, 2>> p;
    for (const auto& q : s) {
      const double ux = (q[0] - 0.5) * 20.0 * scale, uy = (q[1] - 0.5) * 20.0 * scale;
      const double sx = ux + shear * uy;
      p.push_back({14.0 + tx + ca * sx - sa * uy, 14.0 + ty + sa * sx + ca * uy});
    }
    pix.push_back(std::move(p));
  }
  std::vector<std::uint8_t> out(28 * 28, 0);
  for (int y = 0; y < 28; ++y) {
    for (int x = 0; x < 28; ++x) {
      double dmin = 1e9;
      for (const auto& s : pix) {
        for (std::size_t i = 0; i + 1 < s.size(); ++i) {
          dmin = std::min(dmin, segment_distance(x + 0.5, y + 0.5, s[i], s[i + 1]));
        }
      }
      const double v = std::clamp(radius + 0.5 - dmin, 0.0, 1.0);
      out[y * 28 + x] = static_cast<std::uint8_t>(std::lround(255.0 * v));
    }
  }
  return out;
}

DigitSet synthetic_digits(std::size_t n, std::uint64_t seed) {
  DigitSet set;
  set.images.dims = {static_cast<std::uint32_t>(n), 28, 28};
  set.labels.dims = {static_cast<std::uint32_t>(n)};
  set.images.data.reserve(n * 784);
  for (std::size_t i = 0; i < n; ++i) {
    SplitMix64 rng(derive_seed(seed, i));
    const int d = static_cast<int>(rng.below(10));
    const auto img = render_digit(d, rng);
    set.images.data.insert(set.images.data.end(), img.begin(), img.end());
    set.labels.data.push_back(static_cast<std::uint8_t>(d));
  }
  return set;
}

IdxArray load_digit_images(const fs::path& path) {
  fs::path file = path;
  if (fs::is_directory(path)) file = path / "train-images-idx3-ubyte";
  if (!fs::exists(file)) throw MissingFileError(file.string());
  IdxArray a = idx_read(file);
  if (a.dims.size() != 3 || a.dims[1] != 28 || a.dims[2] != 28) {
    throw FormatError("digit images must have dims (n, 28, 28) in " + file.string(), 4);
  }
  return a;
}

std::vector<double> synthetic_scene(SplitMix64& rng, std::size_t size, std::size_t frames) {
  const std::size_t ch = 3;
  std::vector<double> f(size * size * ch * frames);
  std::array<double, 3> bg{rng.uniform(0.0, 0.4), rng.uniform(0.0, 0.4), rng.uniform(0.0, 0.4)};
  struct Obj {
    bool disc;
    double x, y, vx, vy, a, b;
    std::array<double, 3> color;
  };
  const std::size_t n_obj = 2 + rng.below(3);
  const double s = static_cast<double>(size);
  std::vector<Obj> objs;
  for (std::size_t i = 0; i < n_obj; ++i) {
    Obj o;
    o.disc = rng.bernoulli(0.5);
    o.x = rng.uniform(0.15, 0.85) * s;
    o.y = rng.uniform(0.15, 0.85) * s;
    o.vx = rng.uniform(-0.08, 0.08) * s;
    o.vy = rng.uniform(-0.08, 0.08) * s;
    o.a = rng.uniform(0.06, 0.2) * s;
    o.b = rng.uniform(0.06, 0.2) * s;
    o.color = {rng.uniform(0.3, 1.0), rng.uniform(0.3, 1.0), rng.uniform(0.3, 1.0)};
    objs.push_back(o);
  }
  for (std::size_t k = 0; k < frames; ++k) {
    for (std::size_t y = 0; y < size; ++y) {
      for (std::size_t x = 0; x < size; ++x) {
        std::array<double, 3> c = bg;
        for (const auto& o : objs) {
          const double cx = o.x + o.vx * static_cast<double>(k);
          const double cy = o.y + o.vy * static_cast<double>(k);
          const double dx = x + 0.5 - cx, dy = y + 0.5 - cy;
          const bool inside = o.disc ? dx * dx + dy * dy <= o.a * o.a
                                     : std::abs(dx) <= o.a && std::abs(dy) <= o.b;
          if (inside) c = o.color;
        }
        for (std::size_t q = 0; q < ch; ++q) f[((y * size + x) * ch + q) * frames + k] = c[q];
      }
    }
  }
  return f;
}

}  // namespace varsig
