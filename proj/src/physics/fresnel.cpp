#include "varsig/physics/fresnel.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <numbers>

#include "varsig/core/error.hpp"

namespace varsig {

namespace {

// Planning is not thread-safe in FFTW; execution with the new-array API is.
std::mutex& fftw_plan_mutex() {
  static std::mutex m;
  return m;
}

struct FftwBuffer {
  explicit FftwBuffer(std::size_t n)
      : p(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n))) {
    if (!p) throw std::bad_alloc();
  }
  ~FftwBuffer() { fftw_free(p); }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;
  cplx* data() { return reinterpret_cast<cplx*>(p); }
  fftw_complex* p;
};

}  // namespace

json FresnelConfig::to_json() const {
  return {{"wavelength_m", wavelength_m},
          {"distance_m", distance_m},
          {"pixel_m", pixel_m},
          {"grid", grid},
          {"a_ref", a_ref}};
}

FresnelConfig FresnelConfig::from_json(const json& j) {
  FresnelConfig c;
  if (!j.is_object()) throw ConfigError("fresnel config must be a JSON object");
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "wavelength_m") c.wavelength_m = v.get<double>();
      else if (key == "distance_m") c.distance_m = v.get<double>();
      else if (key == "pixel_m") c.pixel_m = v.get<double>();
      else if (key == "grid") c.grid = v.get<std::size_t>();
      else if (key == "a_ref") c.a_ref = v.get<double>();
      else throw ConfigError("unknown fresnel config key '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("fresnel config: ") + e.what());
  }
  c.validate();
  return c;
}

void FresnelConfig::validate() const {
  if (!(wavelength_m > 0.0 && distance_m > 0.0 && pixel_m > 0.0 && a_ref > 0.0) || grid < 2) {
    throw ConfigError("fresnel: wavelength, distance, pixel, a_ref and grid must be positive");
  }
  if (grid % 2 != 0) throw ConfigError("fresnel: grid must be even");
  // Phase step between the two outermost kernel samples, pi (grid - 1) / N_F.
  const double step = std::numbers::pi * static_cast<double>(grid - 1) / fresnel_number();
  if (!(step < std::numbers::pi)) {
    throw ConfigError("fresnel: kernel phase is undersampled at the grid edge (step " +
                      std::to_string(step) + " rad)");
  }
}

std::vector<cplx> fresnel_kernel(const FresnelConfig& cfg) {
  const std::size_t n = cfg.grid;
  const auto h = static_cast<long>(n / 2);
  const double c = std::numbers::pi / cfg.fresnel_number();
  std::vector<cplx> k(n * n);
  for (std::size_t y = 0; y < n; ++y) {
    for (std::size_t x = 0; x < n; ++x) {
      const double dy = static_cast<double>(static_cast<long>(y) - h);
      const double dx = static_cast<double>(static_cast<long>(x) - h);
      k[y * n + x] = std::polar(1.0, c * (dx * dx + dy * dy));
    }
  }
  return k;
}

struct FresnelPropagator::Plans {
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
};

FresnelPropagator::FresnelPropagator(FresnelConfig cfg) : cfg_(cfg), plans_(std::make_unique<Plans>()) {
  cfg_.validate();
  const std::size_t n = cfg_.grid;
  pad_ = 2 * n;
  const std::size_t pp = pad_ * pad_;
  FftwBuffer a(pp), b(pp);
  {
    std::lock_guard lock(fftw_plan_mutex());
    const int dims = static_cast<int>(pad_);
    plans_->forward = fftw_plan_dft_2d(dims, dims, a.p, b.p, FFTW_FORWARD, FFTW_ESTIMATE);
    plans_->backward = fftw_plan_dft_2d(dims, dims, a.p, b.p, FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  if (!plans_->forward || !plans_->backward) throw StateError("fftw planning failed");

  const auto k = fresnel_kernel(cfg_);
  const auto h = static_cast<long>(n / 2);
  auto transform = [&](bool conj_kernel, std::vector<cplx>& out) {
    std::fill(a.data(), a.data() + pp, cplx{});
    for (std::size_t y = 0; y < n; ++y) {
      for (std::size_t x = 0; x < n; ++x) {
        const long dy = static_cast<long>(y) - h, dx = static_cast<long>(x) - h;
        const std::size_t py = static_cast<std::size_t>((dy + static_cast<long>(pad_)) % static_cast<long>(pad_));
        const std::size_t px = static_cast<std::size_t>((dx + static_cast<long>(pad_)) % static_cast<long>(pad_));
        a.data()[py * pad_ + px] = conj_kernel ? std::conj(k[y * n + x]) : k[y * n + x];
      }
    }
    fftw_execute_dft(plans_->forward, a.p, b.p);
    out.assign(b.data(), b.data() + pp);
  };
  transform(false, kernel_hat_);
  transform(true, kernel_conj_hat_);
}

FresnelPropagator::~FresnelPropagator() {
  std::lock_guard lock(fftw_plan_mutex());
  if (plans_->forward) fftw_destroy_plan(plans_->forward);
  if (plans_->backward) fftw_destroy_plan(plans_->backward);
}

std::vector<cplx> FresnelPropagator::run(std::span<const cplx> field, Mode mode) const {
  const std::size_t n = cfg_.grid, pp = pad_ * pad_;
  if (field.size() != n * n) {
    throw ShapeError("fresnel: field needs " + std::to_string(n * n) + " values, got " +
                     std::to_string(field.size()));
  }
  FftwBuffer a(pp), b(pp);
  std::fill(a.data(), a.data() + pp, cplx{});
  for (std::size_t y = 0; y < n; ++y) {
    for (std::size_t x = 0; x < n; ++x) a.data()[y * pad_ + x] = field[y * n + x];
  }
  fftw_execute_dft(plans_->forward, a.p, b.p);
  cplx* bh = b.data();
  switch (mode) {
    case Mode::conv:
      for (std::size_t i = 0; i < pp; ++i) bh[i] *= kernel_hat_[i];
      break;
    case Mode::corr:
      for (std::size_t i = 0; i < pp; ++i) bh[i] *= std::conj(kernel_hat_[i]);
      break;
    case Mode::conv_conj:
      for (std::size_t i = 0; i < pp; ++i) bh[i] *= kernel_conj_hat_[i];
      break;
  }
  fftw_execute_dft(plans_->backward, b.p, a.p);
  double scale = 1.0 / static_cast<double>(pp);
  if (mode == Mode::conv_conj) {
    const double inv_nf = 1.0 / cfg_.fresnel_number();
    scale *= inv_nf * inv_nf;
  }
  std::vector<cplx> out(n * n);
  for (std::size_t y = 0; y < n; ++y) {
    for (std::size_t x = 0; x < n; ++x) out[y * n + x] = a.data()[y * pad_ + x] * scale;
  }
  return out;
}

std::vector<cplx> FresnelPropagator::propagate(std::span<const cplx> field) const {
  return run(field, Mode::conv);
}

std::vector<cplx> FresnelPropagator::propagate_adjoint(std::span<const cplx> field) const {
  return run(field, Mode::corr);
}

std::vector<cplx> FresnelPropagator::back_propagate(std::span<const cplx> field) const {
  return run(field, Mode::conv_conj);
}

std::vector<cplx> fresnel_propagate(std::span<const cplx> field, const FresnelConfig& cfg) {
  return FresnelPropagator(cfg).propagate(field);
}

std::vector<cplx> back_propagate(std::span<const cplx> field, const FresnelConfig& cfg) {
  return FresnelPropagator(cfg).back_propagate(field);
}

std::vector<double> hologram_intensity(std::span<const cplx> e_d, double a_ref) {
  std::vector<double> out(e_d.size());
  for (std::size_t i = 0; i < e_d.size(); ++i) out[i] = std::norm(a_ref + e_d[i]);
  return out;
}

HologramModel::HologramModel(FresnelConfig cfg)
    : cfg_(cfg), prop_(std::make_shared<FresnelPropagator>(cfg)) {
  const std::vector<cplx> ref(cfg_.grid * cfg_.grid, cplx(cfg_.a_ref, 0.0));
  const cplx centre = prop_->back_propagate(ref)[(cfg_.grid / 2) * cfg_.grid + cfg_.grid / 2];
  if (std::abs(centre) > 0.0) ref_rotation_ = std::conj(centre) / std::abs(centre);
}

void HologramModel::apply(std::span<const double> f, std::span<double> g) const {
  check_signal(f);
  check_measurement(g);
  std::vector<cplx> e(f.begin(), f.end());
  const auto ed = prop_->propagate(e);
  for (std::size_t i = 0; i < ed.size(); ++i) g[i] = std::norm(cfg_.a_ref + ed[i]);
}

void HologramModel::vjp(std::span<const double> f, std::span<const double> g_bar,
                        std::span<double> f_bar) const {
  check_signal(f);
  check_measurement(g_bar);
  check_signal(f_bar);
  std::vector<cplx> e(f.begin(), f.end());
  auto ed = prop_->propagate(e);
  // I = |a + E_d|^2  =>  E_d_bar = 2 I_bar (a + E_d); f real => f_bar = Re(K^H E_d_bar)
  for (std::size_t i = 0; i < ed.size(); ++i) ed[i] = 2.0 * g_bar[i] * (cfg_.a_ref + ed[i]);
  const auto eb = prop_->propagate_adjoint(ed);
  for (std::size_t i = 0; i < eb.size(); ++i) f_bar[i] = eb[i].real();
}

std::vector<double> HologramModel::back_propagate_sqrt(std::span<const double> g, bool referenced) const {
  check_measurement(g);
  std::vector<cplx> amp(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) amp[i] = std::sqrt(std::max(g[i], 0.0));
  const auto b = prop_->back_propagate(amp);
  const cplx rot = referenced ? ref_rotation_ : cplx(1.0, 0.0);
  std::vector<double> out(2 * b.size());
  for (std::size_t i = 0; i < b.size(); ++i) {
    const cplx v = b[i] * rot;
    out[i] = v.real();
    out[b.size() + i] = v.imag();
  }
  return out;
}

}  // namespace varsig
