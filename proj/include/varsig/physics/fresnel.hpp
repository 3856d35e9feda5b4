#pragma once

#include <complex>
#include <memory>
#include <span>
#include <vector>

#include "varsig/core/forward_model.hpp"

namespace varsig {

using cplx = std::complex<double>;

struct FresnelConfig {
  double wavelength_m = 635e-9;
  double distance_m = 0.400;
  double pixel_m = 50e-6;
  std::size_t grid = 64;
  double a_ref = 1.0;

  /// lambda z / p^2, the kernel's sampling-scaled Fresnel number.
  double fresnel_number() const { return wavelength_m * distance_m / (pixel_m * pixel_m); }

  json to_json() const;
  static FresnelConfig from_json(const json& j);
  void validate() const;
};

/// Kernel exp(i pi (dx^2 + dy^2) p^2 / (lambda z)) sampled on the grid, offsets
/// d in [-grid/2, grid/2 - 1], stored row-major with the zero offset at index
/// (grid/2, grid/2).
std::vector<cplx> fresnel_kernel(const FresnelConfig& cfg);

/// Precomputed FFT state for one configuration. Fields are grid x grid,
/// row-major. Convolutions are linear ("same" size, kernel centred), done by
/// zero-padding to twice the grid.
class FresnelPropagator {
 public:
  explicit FresnelPropagator(FresnelConfig cfg);
  ~FresnelPropagator();
  FresnelPropagator(const FresnelPropagator&) = delete;
  FresnelPropagator& operator=(const FresnelPropagator&) = delete;

  const FresnelConfig& config() const noexcept { return cfg_; }

  /// E_d = E_o * K.
  std::vector<cplx> propagate(std::span<const cplx> field) const;
  /// Transpose-conjugate of propagate (correlation with K).
  std::vector<cplx> propagate_adjoint(std::span<const cplx> field) const;
  /// Convolution with conj(K), scaled by (p^2 / (lambda z))^2.
  std::vector<cplx> back_propagate(std::span<const cplx> field) const;

 private:
  enum class Mode { conv, corr, conv_conj };
  std::vector<cplx> run(std::span<const cplx> field, Mode mode) const;

  FresnelConfig cfg_;
  std::size_t pad_ = 0;
  std::vector<cplx> kernel_hat_;       // FFT of the padded kernel
  std::vector<cplx> kernel_conj_hat_;  // FFT of the padded conj(kernel)
  struct Plans;
  std::unique_ptr<Plans> plans_;
};

std::vector<cplx> fresnel_propagate(std::span<const cplx> field, const FresnelConfig& cfg);
std::vector<cplx> back_propagate(std::span<const cplx> field, const FresnelConfig& cfg);
/// I = |a_ref + E_d|^2.
std::vector<double> hologram_intensity(std::span<const cplx> e_d, double a_ref);

/// Real object field in, hologram intensity out.
class HologramModel final : public ForwardModel {
 public:
  explicit HologramModel(FresnelConfig cfg = {});

  SystemId system() const noexcept override { return SystemId::hologram; }
  std::string name() const override { return "hologram"; }
  bool is_linear() const noexcept override { return false; }
  Shape signal_shape() const override { return {cfg_.grid, cfg_.grid}; }
  Shape measurement_shape() const override { return {cfg_.grid, cfg_.grid}; }
  bool nonneg_measurement() const noexcept override { return true; }

  void apply(std::span<const double> f, std::span<double> g) const override;
  void vjp(std::span<const double> f, std::span<const double> g_bar,
           std::span<double> f_bar) const override;
  json config_json() const override { return cfg_.to_json(); }

  using ForwardModel::apply;
  using ForwardModel::vjp;

  const FresnelConfig& config() const noexcept { return cfg_; }
  const FresnelPropagator& propagator() const noexcept { return *prop_; }

  /// Two-channel [Re, Im] back-propagation of sqrt(g), (2, grid, grid).
  /// With `referenced`, the field is rotated by the global phase that makes
  /// the back-propagated reference wave real and positive at the grid centre.
  std::vector<double> back_propagate_sqrt(std::span<const double> g, bool referenced = false) const;

 private:
  FresnelConfig cfg_;
  std::shared_ptr<FresnelPropagator> prop_;
  cplx ref_rotation_{1.0, 0.0};
};

}  // namespace varsig
