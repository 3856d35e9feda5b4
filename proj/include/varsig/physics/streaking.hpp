#pragma once

#include <array>
#include <complex>
#include <span>
#include <vector>

#include "varsig/core/forward_model.hpp"
#include "varsig/core/rng.hpp"

namespace varsig {

using cplx = std::complex<double>;

namespace au {
inline constexpr double hartree_ev = 27.211386;
inline constexpr double time_as = 24.18884;  // attoseconds per atomic time unit
inline double ev(double e_ev) { return e_ev / hartree_ev; }
inline double fs(double t_fs) { return t_fs * 1000.0 / time_as; }
}  // namespace au

enum class VectorPotentialMode {
  integral,    // A(t) = -int_t^tmax E_IR(t') dt'
  derivative,  // A(t) = -dE_IR/dt
};

/// Ranges for the uniformly drawn polynomial phase coefficients; coefficient
/// i is drawn from [-r[i], r[i]] in atomic units with frequency measured
/// from the band centre.
struct PhaseRanges {
  std::array<double, 6> xuv{3.141592653589793, 10.0, 1.0, 0.05, 0.005, 0.0005};
  std::array<double, 6> ir{3.141592653589793, 40.0, 3.0e4, 5.0e6, 1.0e9, 2.0e11};
};

struct StreakingConfig {
  std::vector<double> energies_ev;    // photoelectron kinetic energies K
  std::vector<double> delays_fs;      // XUV-IR delays tau
  std::size_t n_xuv = 200;
  std::size_t n_ir = 20;
  double ionization_potential_ev = 21.55;
  double dipole = 1.0;
  double time_span_fs = 20.0;         // integration grid covers [-span, span]
  double time_step_fs = 0.0;          // 0: delay spacing / 32
  double ir_center_ev = 1.5498;       // 800 nm
  double ir_fwhm_ev = 0.05;
  double ir_peak_field_au = 0.005;    // peak of the default transform-limited IR field
  std::vector<double> xuv_amp_spectrum;  // S(omega), empty: default Gaussian
  std::vector<double> ir_amp_spectrum;
  VectorPotentialMode vector_potential = VectorPotentialMode::integral;
  std::array<double, 2> cep_window_ev{100.0, 300.0};
  PhaseRanges phase_ranges;

  /// 256 energies 50..305 eV, 35 delays -8..8 fs, Gaussian spectra.
  static StreakingConfig defaults();

  json to_json() const;
  static StreakingConfig from_json(const json& j);
};

/// Complex spectral samples, kept as paired real arrays.
struct ComplexSpectrum {
  std::vector<double> re;
  std::vector<double> im;

  std::size_t size() const noexcept { return re.size(); }
  cplx at(std::size_t i) const { return {re[i], im[i]}; }
};

using PulsePhase = std::array<double, 6>;

/// E(w) = sqrt(amp(w)) exp(i sum_i k_i w^i), evaluated on `grid`.
ComplexSpectrum build_spectrum(std::span<const double> amp, const PulsePhase& phase,
                               std::span<const double> grid);

/// A(t) on a uniform grid with spacing dt. Integral mode uses a cumulative
/// trapezoid from the last sample; derivative mode uses second-order finite
/// differences.
std::vector<double> vector_potential(std::span<const cplx> ir_time_field, double dt,
                                     VectorPotentialMode mode = VectorPotentialMode::integral);

/// phi_G(K, t) = -int_t^tmax [v A + A^2 / 2] dt', v = sqrt(2K), trapezoid.
/// K in atomic units.
std::vector<double> phase_gate(std::span<const double> A, double K_au, double dt);

/// Cumulative trapezoid from the end: out[n] = int_{t_n}^{t_last} x dt.
void cumtrapz_from_end(std::span<const double> x, double dt, std::span<double> out);
/// Transpose of cumtrapz_from_end; adds into x_bar.
void cumtrapz_from_end_adjoint(std::span<const double> out_bar, double dt,
                               std::span<double> x_bar);

class StreakingModel final : public ForwardModel {
 public:
  explicit StreakingModel(StreakingConfig cfg = StreakingConfig::defaults());

  SystemId system() const noexcept override { return SystemId::streaking; }
  std::string name() const override { return "streaking"; }
  bool is_linear() const noexcept override { return false; }
  Shape signal_shape() const override { return {signal_length()}; }
  Shape measurement_shape() const override { return {n_energy_, n_delay_}; }
  bool nonneg_measurement() const noexcept override { return true; }

  void apply(std::span<const double> f, std::span<double> g) const override;
  void vjp(std::span<const double> f, std::span<const double> g_bar,
           std::span<double> f_bar) const override;
  json config_json() const override { return cfg_.to_json(); }

  using ForwardModel::apply;
  using ForwardModel::vjp;

  const StreakingConfig& config() const noexcept { return cfg_; }
  std::size_t signal_length() const noexcept { return 2 * cfg_.n_xuv + 2 * cfg_.n_ir; }

  // Grids in atomic units.
  const std::vector<double>& xuv_omega() const noexcept { return xuv_omega_; }
  const std::vector<double>& ir_omega() const noexcept { return ir_omega_; }
  double xuv_center() const noexcept { return xuv_center_; }
  double ir_center() const noexcept { return ir_center_; }
  const std::vector<double>& xuv_amp() const noexcept { return xuv_amp_; }
  const std::vector<double>& ir_amp() const noexcept { return ir_amp_; }
  const std::vector<double>& time_grid() const noexcept { return t_; }
  double dt() const noexcept { return dt_; }
  /// Index into time_grid() of each delay.
  const std::vector<std::size_t>& delay_index() const noexcept { return delay_index_; }
  double ir_field_scale() const noexcept { return ir_scale_; }
  /// Time-support window applied to the XUV field, w(s) for |s| < period/2.
  static double xuv_window(double s, double period);
  double xuv_period() const noexcept { return xuv_period_; }

  /// Pack complex spectra into f = [Re xuv, Im xuv, Re ir, Im ir].
  std::vector<double> pack(const ComplexSpectrum& xuv, const ComplexSpectrum& ir) const;
  ComplexSpectrum unpack_xuv(std::span<const double> f) const;
  ComplexSpectrum unpack_ir(std::span<const double> f) const;

  /// Pulse with the configured amplitude spectra and the given phases.
  std::vector<double> make_pulse(const PulsePhase& xuv_phase, const PulsePhase& ir_phase) const;
  /// Random phases drawn from the configured ranges.
  PulsePhase random_phase(SplitMix64& rng, bool xuv) const;

  /// XUV field E(s) at the window offsets and the IR field on the time grid
  /// (exposed for inspection and tests).
  std::vector<cplx> xuv_time_field(std::span<const double> f) const;
  std::vector<double> ir_time_field(std::span<const double> f) const;
  /// Offsets s_o = o * dt of the XUV window, o in [-half, half].
  std::vector<double> xuv_offsets() const;

 private:
  struct Workspace;
  struct RowScratch;
  void check_and_unpack(std::span<const double> f, std::vector<cplx>& cx,
                        std::vector<cplx>& ci) const;
  void fields(const std::vector<cplx>& cx, const std::vector<cplx>& ci, Workspace& ws) const;
  void trace_row(std::size_t k, const Workspace& ws, RowScratch& sc, double* y_re,
                 double* y_im) const;

  StreakingConfig cfg_;
  std::size_t n_energy_ = 0, n_delay_ = 0;
  std::vector<double> xuv_omega_, ir_omega_, xuv_amp_, ir_amp_;
  double xuv_center_ = 0, ir_center_ = 0, xuv_domega_ = 0;
  double xuv_period_ = 0;
  double dt_ = 0;
  double ir_scale_ = 0;
  std::vector<double> t_;
  std::vector<std::size_t> delay_index_;
  std::vector<double> v_;        // sqrt(2K) per energy
  std::size_t half_ = 0;         // XUV window half-length in samples
  std::size_t span_lo_ = 0, span_len_ = 0;  // time indices touched by the trace
  // e^{i w_j s_o}, [o][j] as split re/im
  std::vector<double> xuv_tab_re_, xuv_tab_im_;
  // d * dt * (dw/2pi) * w(s_o) * e^{-i Omega_K s_o}, [k][o]
  std::vector<double> r_re_, r_im_;
  // e^{i w_j t_n}, [j][n]
  std::vector<double> ir_tab_re_, ir_tab_im_;
};

/// Aligns the XUV carrier-envelope phase of `candidate` to `reference`.
struct CepAlignment {
  std::vector<double> aligned;
  double shift_rad = 0.0;
};
CepAlignment cep_align(const StreakingModel& model, std::span<const double> candidate,
                       std::span<const double> reference);

}  // namespace varsig
