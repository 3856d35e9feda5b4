#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "varsig/core/forward_model.hpp"

namespace varsig {

/// Dense linear operator g = B f. Used as a cheap generic system in tests.
class MatrixModel final : public ForwardModel {
 public:
  explicit MatrixModel(Eigen::MatrixXd b, std::uint64_t seed = 0);
  /// Gaussian B with entries N(0, 1/n), drawn from SplitMix64(seed).
  static Eigen::MatrixXd random_matrix(std::size_t m, std::size_t n, std::uint64_t seed);

  SystemId system() const noexcept override { return SystemId::generic; }
  std::string name() const override { return "matrix"; }
  bool is_linear() const noexcept override { return true; }
  Shape signal_shape() const override { return {static_cast<std::size_t>(b_.cols())}; }
  Shape measurement_shape() const override { return {static_cast<std::size_t>(b_.rows())}; }
  bool nonneg_measurement() const noexcept override { return false; }

  void apply(std::span<const double> f, std::span<double> g) const override;
  void vjp(std::span<const double> f, std::span<const double> g_bar,
           std::span<double> f_bar) const override;
  bool has_adjoint() const noexcept override { return true; }
  void adjoint(std::span<const double> g, std::span<double> f) const override;
  json config_json() const override;

  using ForwardModel::adjoint;
  using ForwardModel::apply;
  using ForwardModel::vjp;

  const Eigen::MatrixXd& matrix() const noexcept { return b_; }

 private:
  Eigen::MatrixXd b_;
  std::uint64_t seed_;
};

/// g = (B f)^2 elementwise. Even in f, so f and -f give the same measurement:
/// the sign is unrecoverable from g.
class SquaredLinearModel final : public ForwardModel {
 public:
  SquaredLinearModel(std::size_t n, std::size_t m, std::uint64_t seed);

  SystemId system() const noexcept override { return SystemId::generic; }
  std::string name() const override { return "squared_linear"; }
  bool is_linear() const noexcept override { return false; }
  Shape signal_shape() const override { return {n_}; }
  Shape measurement_shape() const override { return {m_}; }
  bool nonneg_measurement() const noexcept override { return true; }

  void apply(std::span<const double> f, std::span<double> g) const override;
  void vjp(std::span<const double> f, std::span<const double> g_bar,
           std::span<double> f_bar) const override;
  json config_json() const override;

  using ForwardModel::apply;
  using ForwardModel::vjp;

  const Eigen::MatrixXd& matrix() const noexcept { return b_; }

 private:
  std::size_t n_, m_;
  std::uint64_t seed_;
  Eigen::MatrixXd b_;
};

}  // namespace varsig
