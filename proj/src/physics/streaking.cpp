#include "varsig/physics/streaking.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "varsig/core/error.hpp"
#include "varsig/core/parallel.hpp"
#include "varsig/detail/sincos.hpp"

namespace varsig {

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<double> linspace(double a, double b, std::size_t n) {
  std::vector<double> out(n);
  if (n == 1) {
    out[0] = a;
    return out;
  }
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  return out;
}

std::vector<double> gaussian(const std::vector<double>& x, double center, double fwhm) {
  std::vector<double> out(x.size());
  const double c = 4.0 * std::log(2.0) / (fwhm * fwhm);
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = std::exp(-c * (x[i] - center) * (x[i] - center));
  return out;
}

// Smooth (C-infinity) step: 0 at x <= 0, 1 at x >= 1.
double smooth_step(double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double a = std::exp(-1.0 / x);
  const double b = std::exp(-1.0 / (1.0 - x));
  return a / (a + b);
}

// Energy kernels are processed in fixed blocks so reductions do not depend on
// the number of worker threads.
constexpr std::size_t kEnergyBlock = 16;

}  // namespace

StreakingConfig StreakingConfig::defaults() {
  StreakingConfig c;
  c.energies_ev = linspace(50.0, 305.0, 256);
  c.delays_fs = linspace(-8.0, 8.0, 35);
  return c;
}

json StreakingConfig::to_json() const {
  json j;
  j["energies_ev"] = energies_ev;
  j["delays_fs"] = delays_fs;
  j["n_xuv"] = n_xuv;
  j["n_ir"] = n_ir;
  j["ionization_potential_ev"] = ionization_potential_ev;
  j["dipole"] = dipole;
  j["time_span_fs"] = time_span_fs;
  j["time_step_fs"] = time_step_fs;
  j["ir_center_ev"] = ir_center_ev;
  j["ir_fwhm_ev"] = ir_fwhm_ev;
  j["ir_peak_field_au"] = ir_peak_field_au;
  j["xuv_amp_spectrum"] = xuv_amp_spectrum;
  j["ir_amp_spectrum"] = ir_amp_spectrum;
  j["vector_potential"] =
      vector_potential == VectorPotentialMode::integral ? "integral" : "derivative";
  j["cep_window_ev"] = cep_window_ev;
  j["phase_ranges"] = {{"xuv", phase_ranges.xuv}, {"ir", phase_ranges.ir}};
  return j;
}

StreakingConfig StreakingConfig::from_json(const json& j) {
  StreakingConfig c = defaults();
  if (!j.is_object()) throw ConfigError("streaking config must be a JSON object");
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "energies_ev") c.energies_ev = v.get<std::vector<double>>();
      else if (key == "delays_fs") c.delays_fs = v.get<std::vector<double>>();
      else if (key == "n_xuv") c.n_xuv = v.get<std::size_t>();
      else if (key == "n_ir") c.n_ir = v.get<std::size_t>();
      else if (key == "ionization_potential_ev") c.ionization_potential_ev = v.get<double>();
      else if (key == "dipole") c.dipole = v.get<double>();
      else if (key == "time_span_fs") c.time_span_fs = v.get<double>();
      else if (key == "time_step_fs") c.time_step_fs = v.get<double>();
      else if (key == "ir_center_ev") c.ir_center_ev = v.get<double>();
      else if (key == "ir_fwhm_ev") c.ir_fwhm_ev = v.get<double>();
      else if (key == "ir_peak_field_au") c.ir_peak_field_au = v.get<double>();
      else if (key == "xuv_amp_spectrum") c.xuv_amp_spectrum = v.get<std::vector<double>>();
      else if (key == "ir_amp_spectrum") c.ir_amp_spectrum = v.get<std::vector<double>>();
      else if (key == "vector_potential") {
        const auto s = v.get<std::string>();
        if (s == "integral") c.vector_potential = VectorPotentialMode::integral;
        else if (s == "derivative") c.vector_potential = VectorPotentialMode::derivative;
        else throw ConfigError("vector_potential must be 'integral' or 'derivative'");
      } else if (key == "cep_window_ev") c.cep_window_ev = v.get<std::array<double, 2>>();
      else if (key == "phase_ranges") {
        if (v.contains("xuv")) c.phase_ranges.xuv = v.at("xuv").get<std::array<double, 6>>();
        if (v.contains("ir")) c.phase_ranges.ir = v.at("ir").get<std::array<double, 6>>();
      } else {
        throw ConfigError("unknown streaking config key '" + key + "'");
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("streaking config: ") + e.what());
  }
  return c;
}

ComplexSpectrum build_spectrum(std::span<const double> amp, const PulsePhase& phase,
                               std::span<const double> grid) {
  if (amp.size() != grid.size()) {
    throw ShapeError("build_spectrum: amplitude has " + std::to_string(amp.size()) +
                     " samples, grid has " + std::to_string(grid.size()));
  }
  ComplexSpectrum out{std::vector<double>(amp.size()), std::vector<double>(amp.size())};
  for (std::size_t i = 0; i < amp.size(); ++i) {
    if (!(amp[i] >= 0.0)) throw DomainError("build_spectrum: negative amplitude at sample " + std::to_string(i));
    const double w = grid[i];
    double phi = phase[5];
    for (int p = 4; p >= 0; --p) phi = phi * w + phase[p];
    const double m = std::sqrt(amp[i]);
    out.re[i] = m * std::cos(phi);
    out.im[i] = m * std::sin(phi);
  }
  return out;
}

void cumtrapz_from_end(std::span<const double> x, double dt, std::span<double> out) {
  const std::size_t n = x.size();
  if (n == 0) return;
  out[n - 1] = 0.0;
  for (std::size_t i = n - 1; i-- > 0;) out[i] = out[i + 1] + 0.5 * dt * (x[i] + x[i + 1]);
}

void cumtrapz_from_end_adjoint(std::span<const double> out_bar, double dt,
                               std::span<double> x_bar) {
  // out[n] = sum_{k=n}^{N-2} dt/2 (x_k + x_{k+1}), so
  // x_bar[k] = dt/2 (S_k [k <= N-2] + S_{k-1} [k >= 1]), S the prefix sum.
  const std::size_t n = out_bar.size();
  if (n == 0) return;
  double prefix_prev = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double prefix = prefix_prev + out_bar[k];
    double acc = 0.0;
    if (k + 1 < n) acc += prefix;
    if (k >= 1) acc += prefix_prev;
    x_bar[k] += 0.5 * dt * acc;
    prefix_prev = prefix;
  }
}

std::vector<double> vector_potential(std::span<const cplx> field, double dt,
                                     VectorPotentialMode mode) {
  const std::size_t n = field.size();
  std::vector<double> e(n), a(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) e[i] = field[i].real();
  if (mode == VectorPotentialMode::integral) {
    cumtrapz_from_end(e, dt, a);
    for (double& v : a) v = -v;
    return a;
  }
  if (n < 3) return a;
  for (std::size_t i = 1; i + 1 < n; ++i) a[i] = -(e[i + 1] - e[i - 1]) / (2.0 * dt);
  a[0] = -(-3.0 * e[0] + 4.0 * e[1] - e[2]) / (2.0 * dt);
  a[n - 1] = -(3.0 * e[n - 1] - 4.0 * e[n - 2] + e[n - 3]) / (2.0 * dt);
  return a;
}

std::vector<double> phase_gate(std::span<const double> A, double K_au, double dt) {
  if (!(K_au > 0.0)) throw DomainError("phase_gate: kinetic energy must be positive");
  const double v = std::sqrt(2.0 * K_au);
  std::vector<double> x(A.size()), out(A.size());
  for (std::size_t i = 0; i < A.size(); ++i) x[i] = v * A[i] + 0.5 * A[i] * A[i];
  cumtrapz_from_end(x, dt, out);
  for (double& p : out) p = -p;
  return out;
}

double StreakingModel::xuv_window(double s, double period) {
  const double x = std::abs(s) / period;  // flat to 1/4, tapered to 0 at 1/2
  return 1.0 - smooth_step((x - 0.25) / 0.25);
}

StreakingModel::StreakingModel(StreakingConfig cfg) : cfg_(std::move(cfg)) {
  const auto& E = cfg_.energies_ev;
  const auto& D = cfg_.delays_fs;
  if (E.empty() || D.empty()) throw ConfigError("streaking: energy and delay grids must be non-empty");
  for (std::size_t i = 0; i < E.size(); ++i) {
    if (!(E[i] > 0.0)) throw ConfigError("streaking: kinetic energies must be positive");
    if (i && !(E[i] > E[i - 1])) throw ConfigError("streaking: energy grid must be strictly increasing");
  }
  if (cfg_.n_xuv < 2 || cfg_.n_ir < 2) throw ConfigError("streaking: need at least 2 spectral samples");
  if (!(cfg_.time_span_fs > 0.0) || !(cfg_.ir_fwhm_ev > 0.0) || !(cfg_.ir_center_ev > 0.0)) {
    throw ConfigError("streaking: time span and IR band must be positive");
  }
  if (cfg_.time_step_fs < 0.0) throw ConfigError("streaking: time step must be non-negative");
  n_energy_ = E.size();
  n_delay_ = D.size();

  const double ip = cfg_.ionization_potential_ev;
  const double e_lo = E.size() > 1 ? E.front() : E.front() - 1.0;
  const double e_hi = E.size() > 1 ? E.back() : E.front() + 1.0;
  xuv_omega_ = linspace(au::ev(e_lo + ip), au::ev(e_hi + ip), cfg_.n_xuv);
  xuv_center_ = 0.5 * (xuv_omega_.front() + xuv_omega_.back());
  xuv_domega_ = xuv_omega_[1] - xuv_omega_[0];
  ir_center_ = au::ev(cfg_.ir_center_ev);
  const double ir_fwhm = au::ev(cfg_.ir_fwhm_ev);
  ir_omega_ = linspace(ir_center_ - 2.0 * ir_fwhm, ir_center_ + 2.0 * ir_fwhm, cfg_.n_ir);

  xuv_amp_ = cfg_.xuv_amp_spectrum.empty()
                 ? gaussian(xuv_omega_, xuv_center_, 0.5 * (xuv_omega_.back() - xuv_omega_.front()))
                 : cfg_.xuv_amp_spectrum;
  ir_amp_ = cfg_.ir_amp_spectrum.empty() ? gaussian(ir_omega_, ir_center_, ir_fwhm)
                                         : cfg_.ir_amp_spectrum;
  if (xuv_amp_.size() != cfg_.n_xuv || ir_amp_.size() != cfg_.n_ir) {
    throw ConfigError("streaking: amplitude spectra must have n_xuv and n_ir samples");
  }
  for (double a : xuv_amp_) if (!(a >= 0.0)) throw ConfigError("streaking: negative XUV amplitude");
  for (double a : ir_amp_) if (!(a >= 0.0)) throw ConfigError("streaking: negative IR amplitude");
  double ir_sum = 0.0;
  for (double a : ir_amp_) ir_sum += std::sqrt(a);
  if (!(ir_sum > 0.0)) throw ConfigError("streaking: IR amplitude spectrum is identically zero");
  ir_scale_ = cfg_.ir_peak_field_au / ir_sum;

  std::vector<double> sorted = D;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw ConfigError("streaking: delays must be distinct");
  }
  double dt_fs = cfg_.time_step_fs;
  if (dt_fs == 0.0) {
    double gap = 16.0 / 34.0;
    if (sorted.size() > 1) {
      gap = sorted[1] - sorted[0];
      for (std::size_t i = 2; i < sorted.size(); ++i) gap = std::min(gap, sorted[i] - sorted[i - 1]);
    }
    dt_fs = gap / 32.0;
  }
  dt_ = au::fs(dt_fs);
  const double tau_min = au::fs(sorted.front());
  const double span = au::fs(cfg_.time_span_fs);
  const auto n0 = static_cast<std::size_t>(std::ceil((tau_min + span) / dt_ - 1e-9));
  const auto n_end = n0 + static_cast<std::size_t>(std::ceil((span - tau_min) / dt_ - 1e-9));
  t_.resize(n_end + 1);
  for (std::size_t n = 0; n < t_.size(); ++n) {
    t_[n] = tau_min + (static_cast<double>(n) - static_cast<double>(n0)) * dt_;
  }
  delay_index_.resize(n_delay_);
  for (std::size_t m = 0; m < n_delay_; ++m) {
    const double steps = (au::fs(D[m]) - tau_min) / dt_;
    const double r = std::round(steps);
    if (std::abs(steps - r) > 1e-6) {
      throw ConfigError("streaking: delay " + std::to_string(D[m]) +
                        " fs is not on the integration time grid");
    }
    delay_index_[m] = n0 + static_cast<std::size_t>(r);
  }

  xuv_period_ = 2.0 * kPi / xuv_domega_;
  half_ = static_cast<std::size_t>(std::floor(0.5 * xuv_period_ / dt_));
  const auto [dmin, dmax] = std::minmax_element(delay_index_.begin(), delay_index_.end());
  if (*dmin < half_ || *dmax + half_ >= t_.size()) {
    throw ConfigError("streaking: time span too short for the XUV window at the extreme delays");
  }
  span_lo_ = *dmin - half_;
  span_len_ = *dmax + half_ + 1 - span_lo_;

  v_.resize(n_energy_);
  for (std::size_t k = 0; k < n_energy_; ++k) v_[k] = std::sqrt(2.0 * au::ev(E[k]));

  const std::size_t no = 2 * half_ + 1;
  const auto offsets = xuv_offsets();
  xuv_tab_re_.resize(no * cfg_.n_xuv);
  xuv_tab_im_.resize(no * cfg_.n_xuv);
  for (std::size_t o = 0; o < no; ++o) {
    for (std::size_t j = 0; j < cfg_.n_xuv; ++j) {
      const double ph = xuv_omega_[j] * offsets[o];
      xuv_tab_re_[o * cfg_.n_xuv + j] = std::cos(ph);
      xuv_tab_im_[o * cfg_.n_xuv + j] = std::sin(ph);
    }
  }
  r_re_.resize(n_energy_ * no);
  r_im_.resize(n_energy_ * no);
  const double pref = cfg_.dipole * dt_ * xuv_domega_ / (2.0 * kPi);
  for (std::size_t k = 0; k < n_energy_; ++k) {
    const double omega_k = au::ev(E[k] + ip);
    for (std::size_t o = 0; o < no; ++o) {
      const double w = pref * xuv_window(offsets[o], xuv_period_);
      r_re_[k * no + o] = w * std::cos(omega_k * offsets[o]);
      r_im_[k * no + o] = -w * std::sin(omega_k * offsets[o]);
    }
  }
  const std::size_t nt = t_.size();
  ir_tab_re_.resize(cfg_.n_ir * nt);
  ir_tab_im_.resize(cfg_.n_ir * nt);
  for (std::size_t j = 0; j < cfg_.n_ir; ++j) {
    for (std::size_t n = 0; n < nt; ++n) {
      const double ph = ir_omega_[j] * t_[n];
      ir_tab_re_[j * nt + n] = std::cos(ph);
      ir_tab_im_[j * nt + n] = std::sin(ph);
    }
  }
}

std::vector<double> StreakingModel::xuv_offsets() const {
  std::vector<double> s(2 * half_ + 1);
  for (std::size_t o = 0; o < s.size(); ++o) {
    s[o] = (static_cast<double>(o) - static_cast<double>(half_)) * dt_;
  }
  return s;
}

std::vector<double> StreakingModel::pack(const ComplexSpectrum& xuv, const ComplexSpectrum& ir) const {
  if (xuv.size() != cfg_.n_xuv || ir.size() != cfg_.n_ir) {
    throw ShapeError("streaking pack: spectrum sizes do not match the config");
  }
  std::vector<double> f;
  f.reserve(signal_length());
  f.insert(f.end(), xuv.re.begin(), xuv.re.end());
  f.insert(f.end(), xuv.im.begin(), xuv.im.end());
  f.insert(f.end(), ir.re.begin(), ir.re.end());
  f.insert(f.end(), ir.im.begin(), ir.im.end());
  return f;
}

ComplexSpectrum StreakingModel::unpack_xuv(std::span<const double> f) const {
  check_signal(f);
  const std::size_t n = cfg_.n_xuv;
  return {{f.begin(), f.begin() + n}, {f.begin() + n, f.begin() + 2 * n}};
}

ComplexSpectrum StreakingModel::unpack_ir(std::span<const double> f) const {
  check_signal(f);
  const std::size_t o = 2 * cfg_.n_xuv, n = cfg_.n_ir;
  return {{f.begin() + o, f.begin() + o + n}, {f.begin() + o + n, f.begin() + o + 2 * n}};
}

std::vector<double> StreakingModel::make_pulse(const PulsePhase& xuv_phase,
                                               const PulsePhase& ir_phase) const {
  std::vector<double> gx(xuv_omega_.size()), gi(ir_omega_.size());
  for (std::size_t j = 0; j < gx.size(); ++j) gx[j] = xuv_omega_[j] - xuv_center_;
  for (std::size_t j = 0; j < gi.size(); ++j) gi[j] = ir_omega_[j] - ir_center_;
  return pack(build_spectrum(xuv_amp_, xuv_phase, gx), build_spectrum(ir_amp_, ir_phase, gi));
}

PulsePhase StreakingModel::random_phase(SplitMix64& rng, bool xuv) const {
  const auto& r = xuv ? cfg_.phase_ranges.xuv : cfg_.phase_ranges.ir;
  PulsePhase k{};
  for (std::size_t i = 0; i < k.size(); ++i) k[i] = rng.uniform(-r[i], r[i]);
  return k;
}

struct StreakingModel::Workspace {
  std::vector<double> ex_re, ex_im;    // raw XUV sum at window offsets
  std::vector<double> e_ir, a, ca, ca2;
  std::vector<double> h_re, h_im;      // e^{-i CA2/2} over the span
};

void StreakingModel::check_and_unpack(std::span<const double> f, std::vector<cplx>& cx,
                                      std::vector<cplx>& ci) const {
  check_signal(f);
  for (double v : f) {
    if (!std::isfinite(v)) throw DomainError("streaking: non-finite signal entry");
  }
  const std::size_t nx = cfg_.n_xuv, ni = cfg_.n_ir;
  cx.resize(nx);
  ci.resize(ni);
  for (std::size_t j = 0; j < nx; ++j) cx[j] = {f[j], f[nx + j]};
  for (std::size_t j = 0; j < ni; ++j) ci[j] = {f[2 * nx + j], f[2 * nx + ni + j]};
}

void StreakingModel::fields(const std::vector<cplx>& cx, const std::vector<cplx>& ci,
                            Workspace& ws) const {
  const std::size_t nx = cfg_.n_xuv, ni = cfg_.n_ir, no = 2 * half_ + 1, nt = t_.size();
  ws.ex_re.assign(no, 0.0);
  ws.ex_im.assign(no, 0.0);
  for (std::size_t o = 0; o < no; ++o) {
    const double* tr = &xuv_tab_re_[o * nx];
    const double* ti = &xuv_tab_im_[o * nx];
    double sr = 0.0, si = 0.0;
    for (std::size_t j = 0; j < nx; ++j) {
      sr += cx[j].real() * tr[j] - cx[j].imag() * ti[j];
      si += cx[j].real() * ti[j] + cx[j].imag() * tr[j];
    }
    ws.ex_re[o] = sr;
    ws.ex_im[o] = si;
  }
  ws.e_ir.assign(nt, 0.0);
  ws.a.assign(nt, 0.0);
  if (cfg_.vector_potential == VectorPotentialMode::integral) {
    for (std::size_t j = 0; j < ni; ++j) {
      const double cr = ir_scale_ * ci[j].real(), cim = ir_scale_ * ci[j].imag();
      const double* tr = &ir_tab_re_[j * nt];
      const double* ti = &ir_tab_im_[j * nt];
      for (std::size_t n = 0; n < nt; ++n) ws.e_ir[n] += cr * tr[n] - cim * ti[n];
    }
    cumtrapz_from_end(ws.e_ir, dt_, ws.a);
    for (double& v : ws.a) v = -v;
  } else {
    // E = s Re sum c e^{iwt}, so -dE/dt = s Re sum (-i w c) e^{iwt}.
    for (std::size_t j = 0; j < ni; ++j) {
      const double cr = ir_scale_ * ci[j].real(), cim = ir_scale_ * ci[j].imag();
      const double w = ir_omega_[j];
      const double* tr = &ir_tab_re_[j * nt];
      const double* ti = &ir_tab_im_[j * nt];
      for (std::size_t n = 0; n < nt; ++n) {
        ws.e_ir[n] += cr * tr[n] - cim * ti[n];
        ws.a[n] += w * (cim * tr[n] + cr * ti[n]);
      }
    }
  }
  ws.ca.assign(nt, 0.0);
  ws.ca2.assign(nt, 0.0);
  std::vector<double> a2(nt);
  for (std::size_t n = 0; n < nt; ++n) a2[n] = ws.a[n] * ws.a[n];
  cumtrapz_from_end(ws.a, dt_, ws.ca);
  cumtrapz_from_end(a2, dt_, ws.ca2);
  std::vector<double> ph(span_len_);
  for (std::size_t i = 0; i < span_len_; ++i) ph[i] = -0.5 * ws.ca2[span_lo_ + i];
  ws.h_re.resize(span_len_);
  ws.h_im.resize(span_len_);
  detail::sincos_array(ph.data(), ws.h_im.data(), ws.h_re.data(), span_len_);
}

struct StreakingModel::RowScratch {
  std::vector<double> q_re, q_im, g_re, g_im, ph, s, c;
  void resize(std::size_t no, std::size_t ns) {
    q_re.resize(no);
    q_im.resize(no);
    g_re.resize(ns);
    g_im.resize(ns);
    ph.resize(ns);
    s.resize(ns);
    c.resize(ns);
  }
};

void StreakingModel::trace_row(std::size_t k, const Workspace& ws, RowScratch& sc,
                               double* y_re, double* y_im) const {
  const std::size_t no = 2 * half_ + 1, ns = span_len_;
  sc.resize(no, ns);
  const double v = v_[k];
  for (std::size_t i = 0; i < ns; ++i) sc.ph[i] = -v * ws.ca[span_lo_ + i];
  detail::sincos_array(sc.ph.data(), sc.s.data(), sc.c.data(), ns);
  for (std::size_t i = 0; i < ns; ++i) {
    sc.g_re[i] = ws.h_re[i] * sc.c[i] - ws.h_im[i] * sc.s[i];
    sc.g_im[i] = ws.h_re[i] * sc.s[i] + ws.h_im[i] * sc.c[i];
  }
  const double* rr = &r_re_[k * no];
  const double* ri = &r_im_[k * no];
  for (std::size_t o = 0; o < no; ++o) {
    sc.q_re[o] = ws.ex_re[o] * rr[o] - ws.ex_im[o] * ri[o];
    sc.q_im[o] = ws.ex_re[o] * ri[o] + ws.ex_im[o] * rr[o];
  }
  for (std::size_t m = 0; m < n_delay_; ++m) {
    const std::size_t base = delay_index_[m] - half_ - span_lo_;
    const double* gr = &sc.g_re[base];
    const double* gi = &sc.g_im[base];
    double sr = 0.0, si = 0.0;
    for (std::size_t o = 0; o < no; ++o) {
      sr += sc.q_re[o] * gr[o] - sc.q_im[o] * gi[o];
      si += sc.q_re[o] * gi[o] + sc.q_im[o] * gr[o];
    }
    y_re[m] = sr;
    y_im[m] = si;
  }
}

void StreakingModel::apply(std::span<const double> f, std::span<double> g) const {
  check_measurement(g);
  std::vector<cplx> cx, ci;
  check_and_unpack(f, cx, ci);
  Workspace ws;
  fields(cx, ci, ws);
  const std::size_t blocks = (n_energy_ + kEnergyBlock - 1) / kEnergyBlock;
  parallel_for(blocks, [&](std::size_t b) {
    RowScratch sc;
    std::vector<double> y_re(n_delay_), y_im(n_delay_);
    const std::size_t k_end = std::min(n_energy_, (b + 1) * kEnergyBlock);
    for (std::size_t k = b * kEnergyBlock; k < k_end; ++k) {
      trace_row(k, ws, sc, y_re.data(), y_im.data());
      for (std::size_t m = 0; m < n_delay_; ++m) {
        g[k * n_delay_ + m] = y_re[m] * y_re[m] + y_im[m] * y_im[m];
      }
    }
  });
}

// Reverse mode through y = sum_o Q[o] G[n_m + o], I = |y|^2. Complex
// cotangents follow the convention z_bar = dL/dRe z + i dL/dIm z, so for
// y = a b: a_bar = y_bar conj(b).
void StreakingModel::vjp(std::span<const double> f, std::span<const double> g_bar,
                         std::span<double> f_bar) const {
  check_measurement(g_bar);
  check_signal(f_bar);
  std::vector<cplx> cx, ci;
  check_and_unpack(f, cx, ci);
  Workspace ws;
  fields(cx, ci, ws);
  const std::size_t no = 2 * half_ + 1, ns = span_len_, nt = t_.size();
  const std::size_t nx = cfg_.n_xuv, ni = cfg_.n_ir;
  const std::size_t blocks = (n_energy_ + kEnergyBlock - 1) / kEnergyBlock;

  struct BlockAcc {
    std::vector<double> ca_bar, ca2_bar, ex_re, ex_im;
  };
  std::vector<BlockAcc> acc(blocks);
  parallel_for(blocks, [&](std::size_t b) {
    BlockAcc& ab = acc[b];
    ab.ca_bar.assign(ns, 0.0);
    ab.ca2_bar.assign(ns, 0.0);
    ab.ex_re.assign(no, 0.0);
    ab.ex_im.assign(no, 0.0);
    RowScratch sc;
    std::vector<double> y_re(n_delay_), y_im(n_delay_);
    std::vector<double> qb_re(no), qb_im(no), gb_re(ns), gb_im(ns);
    const std::size_t k_end = std::min(n_energy_, (b + 1) * kEnergyBlock);
    for (std::size_t k = b * kEnergyBlock; k < k_end; ++k) {
      trace_row(k, ws, sc, y_re.data(), y_im.data());
      std::fill(qb_re.begin(), qb_re.end(), 0.0);
      std::fill(qb_im.begin(), qb_im.end(), 0.0);
      std::fill(gb_re.begin(), gb_re.end(), 0.0);
      std::fill(gb_im.begin(), gb_im.end(), 0.0);
      for (std::size_t m = 0; m < n_delay_; ++m) {
        const double w = 2.0 * g_bar[k * n_delay_ + m];
        const double br = w * y_re[m], bi = w * y_im[m];
        if (br == 0.0 && bi == 0.0) continue;
        const std::size_t base = delay_index_[m] - half_ - span_lo_;
        const double* gr = &sc.g_re[base];
        const double* gi = &sc.g_im[base];
        double* hbr = &gb_re[base];
        double* hbi = &gb_im[base];
        for (std::size_t o = 0; o < no; ++o) {
          // Q_bar += y_bar conj(G); G_bar += y_bar conj(Q)
          qb_re[o] += br * gr[o] + bi * gi[o];
          qb_im[o] += bi * gr[o] - br * gi[o];
          hbr[o] += br * sc.q_re[o] + bi * sc.q_im[o];
          hbi[o] += bi * sc.q_re[o] - br * sc.q_im[o];
        }
      }
      const double v = v_[k];
      for (std::size_t i = 0; i < ns; ++i) {
        // phi = -(v CA + CA2 / 2), dL/dphi = -Im(G conj(G_bar))
        const double dphi = -(sc.g_im[i] * gb_re[i] - sc.g_re[i] * gb_im[i]);
        ab.ca_bar[i] -= v * dphi;
        ab.ca2_bar[i] -= 0.5 * dphi;
      }
      const double* rr = &r_re_[k * no];
      const double* ri = &r_im_[k * no];
      for (std::size_t o = 0; o < no; ++o) {
        ab.ex_re[o] += qb_re[o] * rr[o] + qb_im[o] * ri[o];
        ab.ex_im[o] += qb_im[o] * rr[o] - qb_re[o] * ri[o];
      }
    }
  });

  std::vector<double> ca_bar(nt, 0.0), ca2_bar(nt, 0.0), ex_re(no, 0.0), ex_im(no, 0.0);
  for (const BlockAcc& ab : acc) {
    for (std::size_t i = 0; i < ns; ++i) {
      ca_bar[span_lo_ + i] += ab.ca_bar[i];
      ca2_bar[span_lo_ + i] += ab.ca2_bar[i];
    }
    for (std::size_t o = 0; o < no; ++o) {
      ex_re[o] += ab.ex_re[o];
      ex_im[o] += ab.ex_im[o];
    }
  }

  std::vector<double> a_bar(nt, 0.0), a2_bar(nt, 0.0);
  cumtrapz_from_end_adjoint(ca_bar, dt_, a_bar);
  cumtrapz_from_end_adjoint(ca2_bar, dt_, a2_bar);
  for (std::size_t n = 0; n < nt; ++n) a_bar[n] += 2.0 * ws.a[n] * a2_bar[n];

  std::fill(f_bar.begin(), f_bar.end(), 0.0);
  for (std::size_t o = 0; o < no; ++o) {
    const double* tr = &xuv_tab_re_[o * nx];
    const double* ti = &xuv_tab_im_[o * nx];
    for (std::size_t j = 0; j < nx; ++j) {
      // c_bar += E_bar conj(e^{i w s})
      f_bar[j] += ex_re[o] * tr[j] + ex_im[o] * ti[j];
      f_bar[nx + j] += ex_im[o] * tr[j] - ex_re[o] * ti[j];
    }
  }
  if (cfg_.vector_potential == VectorPotentialMode::integral) {
    std::vector<double> e_bar(nt, 0.0);
    cumtrapz_from_end_adjoint(a_bar, dt_, e_bar);
    for (std::size_t j = 0; j < ni; ++j) {
      const double* tr = &ir_tab_re_[j * nt];
      const double* ti = &ir_tab_im_[j * nt];
      double sr = 0.0, si = 0.0;
      for (std::size_t n = 0; n < nt; ++n) {
        // E = s Re(c e^{iwt}) and A = -cumtrapz(E)
        sr -= e_bar[n] * tr[n];
        si += e_bar[n] * ti[n];
      }
      f_bar[2 * nx + j] = ir_scale_ * sr;
      f_bar[2 * nx + ni + j] = ir_scale_ * si;
    }
  } else {
    for (std::size_t j = 0; j < ni; ++j) {
      const double* tr = &ir_tab_re_[j * nt];
      const double* ti = &ir_tab_im_[j * nt];
      double sr = 0.0, si = 0.0;
      for (std::size_t n = 0; n < nt; ++n) {
        // A = s w (Im c cos + Re c sin)
        sr += a_bar[n] * ti[n];
        si += a_bar[n] * tr[n];
      }
      f_bar[2 * nx + j] = ir_scale_ * ir_omega_[j] * sr;
      f_bar[2 * nx + ni + j] = ir_scale_ * ir_omega_[j] * si;
    }
  }
}

std::vector<cplx> StreakingModel::xuv_time_field(std::span<const double> f) const {
  std::vector<cplx> cx, ci;
  check_and_unpack(f, cx, ci);
  Workspace ws;
  fields(cx, ci, ws);
  const auto s = xuv_offsets();
  std::vector<cplx> out(s.size());
  const double pref = xuv_domega_ / (2.0 * kPi);
  for (std::size_t o = 0; o < s.size(); ++o) {
    out[o] = pref * xuv_window(s[o], xuv_period_) * cplx(ws.ex_re[o], ws.ex_im[o]);
  }
  return out;
}

std::vector<double> StreakingModel::ir_time_field(std::span<const double> f) const {
  std::vector<cplx> cx, ci;
  check_and_unpack(f, cx, ci);
  Workspace ws;
  fields(cx, ci, ws);
  return ws.e_ir;
}

CepAlignment cep_align(const StreakingModel& model, std::span<const double> candidate,
                       std::span<const double> reference) {
  const ComplexSpectrum c = model.unpack_xuv(candidate);
  const ComplexSpectrum r = model.unpack_xuv(reference);
  const auto& w = model.xuv_omega();
  const auto [lo, hi] = model.config().cep_window_ev;
  std::vector<double> diffs;
  for (std::size_t j = 0; j < w.size(); ++j) {
    const double e = w[j] * au::hartree_ev;
    if (e < lo || e > hi) continue;
    if (std::abs(c.at(j)) < 1e-8 || std::abs(r.at(j)) < 1e-8) continue;
    diffs.push_back(std::arg(r.at(j) * std::conj(c.at(j))));
  }
  if (diffs.empty()) {
    throw DomainError("cep_align: spectral amplitude below 1e-8 throughout the alignment window");
  }
  double mean = diffs[0], prev = diffs[0];
  for (std::size_t i = 1; i < diffs.size(); ++i) {
    double d = diffs[i];
    d -= 2.0 * kPi * std::round((d - prev) / (2.0 * kPi));
    mean += d;
    prev = d;
  }
  mean /= static_cast<double>(diffs.size());
  double shift = std::remainder(mean, 2.0 * kPi);
  if (shift <= -kPi) shift += 2.0 * kPi;

  CepAlignment out;
  out.aligned.assign(candidate.begin(), candidate.end());
  const std::size_t nx = model.config().n_xuv;
  const cplx rot = std::polar(1.0, shift);
  for (std::size_t j = 0; j < nx; ++j) {
    const cplx z = cplx(candidate[j], candidate[nx + j]) * rot;
    out.aligned[j] = z.real();
    out.aligned[nx + j] = z.imag();
  }
  out.shift_rad = shift;
  return out;
}

}  // namespace varsig
