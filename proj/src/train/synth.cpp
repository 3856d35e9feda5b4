#include "varsig/train/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <optional>

#include "varsig/core/error.hpp"
#include "varsig/core/parallel.hpp"
#include "varsig/physics/registry.hpp"
#include "varsig/physics/toy.hpp"
#include "varsig/train/images.hpp"

namespace varsig {

namespace fs = std::filesystem;

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Builds records from per-record signals in parallel; noise draws come from
// a stream separate from the signal draws.
void finish_records(Dataset& ds, const ForwardModel& fm, std::vector<std::vector<double>>& signals,
                    std::vector<std::map<std::string, std::string>>& metas, const SynthOptions& opt) {
  const std::size_t n = signals.size();
  std::vector<std::optional<DatasetRecord>> out(n);
  parallel_for(n, [&](std::size_t i) {
    std::vector<double> g = fm.apply(signals[i]);
    auto meta = metas[i];
    meta["noise_sigma"] = fmt_double(opt.noise_sigma);
    if (opt.noise_sigma > 0.0) {
      SplitMix64 rng(derive_seed(opt.seed, i, 0x6e6f697365));
      for (double& v : g) {
        v += opt.noise_sigma * rng.normal();
        if (fm.nonneg_measurement()) v = std::max(v, 0.0);
      }
    }
    out[i].emplace(DatasetRecord{SignalVec(fm.system(), fm.signal_shape(), std::move(signals[i])),
                                 MeasurementVec(fm.system(), fm.measurement_shape(), std::move(g),
                                                fm.nonneg_measurement()),
                                 derive_seed(opt.seed, i), std::move(meta)});
  });
  ds.records.reserve(n);
  for (auto& r : out) ds.records.push_back(std::move(*r));
}

Dataset base_dataset(SystemId system, const SynthOptions& opt, json physics) {
  if (opt.n == 0) throw ConfigError("dataset size must be at least 1");
  if (!(opt.noise_sigma >= 0.0)) throw ConfigError("noise_sigma must be nonnegative");
  Dataset ds;
  ds.system = system;
  ds.split = opt.split;
  ds.seed = opt.seed;
  ds.physics = std::move(physics);
  ds.extra["noise_sigma"] = opt.noise_sigma;
  return ds;
}

}  // namespace

Dataset synth_pulse_dataset(const SynthOptions& opt, const StreakingConfig& cfg,
                            double duplicate_rate) {
  if (duplicate_rate < 0.0 || duplicate_rate > 1.0) {
    throw ConfigError("duplicate_rate must lie in [0, 1]");
  }
  const StreakingModel model(cfg);
  Dataset ds = base_dataset(SystemId::streaking, opt, cfg.to_json());
  ds.extra["duplicate_rate"] = duplicate_rate;

  std::vector<std::vector<double>> signals(opt.n);
  std::vector<std::map<std::string, std::string>> metas(opt.n);
  PulsePhase prev_xuv{}, prev_ir{};
  for (std::size_t i = 0; i < opt.n; ++i) {
    SplitMix64 rng(derive_seed(opt.seed, i));
    PulsePhase xuv = model.random_phase(rng, true);
    PulsePhase ir = model.random_phase(rng, false);
    const bool dup = i > 0 && rng.bernoulli(duplicate_rate);
    if (dup) {
      const double k0 = xuv[0];
      xuv = prev_xuv;
      ir = prev_ir;
      xuv[0] = k0;
      metas[i]["cep_duplicate_of"] = std::to_string(i - 1);
    }
    std::string ks;
    for (std::size_t q = 0; q < 6; ++q) ks += (q ? "," : "") + fmt_double(xuv[q]);
    metas[i]["xuv_phase"] = ks;
    ks.clear();
    for (std::size_t q = 0; q < 6; ++q) ks += (q ? "," : "") + fmt_double(ir[q]);
    metas[i]["ir_phase"] = ks;
    signals[i] = model.make_pulse(xuv, ir);
    prev_xuv = xuv;
    prev_ir = ir;
  }
  finish_records(ds, model, signals, metas, opt);
  return ds;
}

Dataset synth_video_dataset(const SynthOptions& opt, const VideoConfig& cfg,
                            const std::optional<fs::path>& image_dir) {
  const VideoCsModel model(cfg);
  Dataset ds = base_dataset(SystemId::video_cs, opt, cfg.to_json());
  const std::size_t N = cfg.size, C = cfg.channels, K = cfg.frames;
  if (C != 3) throw ConfigError("video synthesis produces RGB frames; channels must be 3");

  std::vector<fs::path> files;
  if (image_dir) {
    files = list_images(*image_dir);
    if (files.empty()) throw MissingFileError(image_dir->string() + " (no PNG/PPM images)");
    ds.extra["source"] = "image_dir";
    ds.extra["image_count"] = files.size();
  } else {
    ds.extra["source"] = "synthetic";
  }

  std::vector<std::vector<double>> signals(opt.n);
  std::vector<std::map<std::string, std::string>> metas(opt.n);
  parallel_for(opt.n, [&](std::size_t i) {
    SplitMix64 rng(derive_seed(opt.seed, i));
    if (files.empty()) {
      signals[i] = synthetic_scene(rng, N, K);
      metas[i]["source"] = "synthetic";
      return;
    }
    std::vector<double> f(N * N * C * K);
    std::string names;
    for (std::size_t k = 0; k < K; ++k) {
      const fs::path& p = files[rng.below(files.size())];
      const RgbImage img = fit_square(load_image(p), N);
      for (std::size_t px = 0; px < N * N; ++px) {
        for (std::size_t c = 0; c < C; ++c) f[(px * C + c) * K + k] = img.rgb[px * 3 + c];
      }
      names += (k ? "," : "") + p.filename().string();
    }
    signals[i] = std::move(f);
    metas[i]["source"] = names;
  });
  finish_records(ds, model, signals, metas, opt);
  return ds;
}

Dataset synth_hologram_dataset(const SynthOptions& opt, const FresnelConfig& cfg,
                               const std::optional<fs::path>& mnist_path) {
  const HologramModel model(cfg);
  if (cfg.grid < 28) throw ConfigError("hologram grid must hold a 28 x 28 digit");
  Dataset ds = base_dataset(SystemId::hologram, opt, cfg.to_json());

  std::optional<fs::path> path = mnist_path;
  if (!path) {
    if (const char* env = std::getenv("VARSIG_MNIST_DIR"); env && *env) path = fs::path(env);
  }
  IdxArray mnist;
  if (path) {
    mnist = load_digit_images(*path);
    if (mnist.dims[0] == 0) throw FormatError("empty digit file " + path->string(), 4);
    ds.extra["source"] = "mnist";
    ds.extra["digit_count"] = mnist.dims[0];
  } else {
    ds.extra["source"] = "procedural";
  }

  const std::size_t G = cfg.grid, off = (G - 28) / 2;
  std::vector<std::vector<double>> signals(opt.n);
  std::vector<std::map<std::string, std::string>> metas(opt.n);
  parallel_for(opt.n, [&](std::size_t i) {
    SplitMix64 rng(derive_seed(opt.seed, i));
    std::vector<std::uint8_t> digit;
    if (path) {
      const std::size_t idx = rng.below(mnist.dims[0]);
      digit.assign(mnist.data.begin() + static_cast<std::ptrdiff_t>(idx * 784),
                   mnist.data.begin() + static_cast<std::ptrdiff_t>((idx + 1) * 784));
      metas[i]["digit_index"] = std::to_string(idx);
    } else {
      const int d = static_cast<int>(rng.below(10));
      digit = render_digit(d, rng);
      metas[i]["digit_label"] = std::to_string(d);
    }
    std::vector<double> f(G * G, 0.0);
    for (std::size_t y = 0; y < 28; ++y) {
      for (std::size_t x = 0; x < 28; ++x) f[(y + off) * G + x + off] = digit[y * 28 + x] / 255.0;
    }
    signals[i] = std::move(f);
  });
  finish_records(ds, model, signals, metas, opt);
  return ds;
}

std::vector<double> cluster_direction(std::size_t n, std::uint64_t operator_seed) {
  SplitMix64 rng(derive_seed(operator_seed, 0xc105));
  std::vector<double> u(n);
  rng.fill_normal(u);
  double norm = 0.0;
  for (double v : u) norm += v * v;
  const double s = std::sqrt(static_cast<double>(n) / norm);
  for (double& v : u) v *= s;
  return u;
}

Dataset synth_generic_dataset(const SynthOptions& opt, const json& physics) {
  const ForwardModelPtr model = make_forward_model(SystemId::generic, physics);
  Dataset ds = base_dataset(SystemId::generic, opt, model->config_json());
  const std::size_t n = model->signal_len();
  const auto op_seed = ds.physics.value("seed", std::uint64_t{0});
  const std::vector<double> u = cluster_direction(n, op_seed);
  ds.extra["source"] = "two_cluster";

  std::vector<std::vector<double>> signals(opt.n);
  std::vector<std::map<std::string, std::string>> metas(opt.n);
  for (std::size_t i = 0; i < opt.n; ++i) {
    if (i % 2 == 1) {
      signals[i] = signals[i - 1];
      for (double& v : signals[i]) v = -v;
      metas[i]["cluster"] = "-1";
      metas[i]["pair_of"] = std::to_string(i - 1);
      continue;
    }
    SplitMix64 rng(derive_seed(opt.seed, i));
    const double a = rng.uniform(0.5, 1.5);
    std::vector<double> f(n);
    for (std::size_t q = 0; q < n; ++q) f[q] = a * u[q] + 0.05 * rng.normal();
    signals[i] = std::move(f);
    metas[i]["cluster"] = "1";
  }
  finish_records(ds, *model, signals, metas, opt);
  return ds;
}

Dataset synth_dataset(SystemId system, const SynthOptions& opt, const json& physics,
                      const std::optional<fs::path>& source) {
  const json cfg = physics.is_null() ? json::object() : physics;
  switch (system) {
    case SystemId::streaking:
      return synth_pulse_dataset(opt, StreakingConfig::from_json(cfg));
    case SystemId::video_cs:
      return synth_video_dataset(opt, VideoConfig::from_json(cfg), source);
    case SystemId::hologram:
      return synth_hologram_dataset(opt, FresnelConfig::from_json(cfg), source);
    case SystemId::generic:
      break;
  }
  return synth_generic_dataset(opt, cfg.empty() ? default_physics(SystemId::generic) : cfg);
}

}  // namespace varsig
