#include "varsig/physics/toy.hpp"

#include <cmath>

#include "varsig/core/error.hpp"
#include "varsig/core/rng.hpp"

namespace varsig {

namespace {

Eigen::Map<const Eigen::VectorXd> as_vec(std::span<const double> s) {
  return {s.data(), static_cast<Eigen::Index>(s.size())};
}

Eigen::Map<Eigen::VectorXd> as_vec(std::span<double> s) {
  return {s.data(), static_cast<Eigen::Index>(s.size())};
}

}  // namespace

Eigen::MatrixXd MatrixModel::random_matrix(std::size_t m, std::size_t n, std::uint64_t seed) {
  SplitMix64 rng(seed);
  Eigen::MatrixXd b(m, n);
  const double s = 1.0 / std::sqrt(static_cast<double>(n));
  for (Eigen::Index i = 0; i < b.rows(); ++i) {
    for (Eigen::Index j = 0; j < b.cols(); ++j) b(i, j) = s * rng.normal();
  }
  return b;
}

MatrixModel::MatrixModel(Eigen::MatrixXd b, std::uint64_t seed) : b_(std::move(b)), seed_(seed) {
  if (b_.rows() == 0 || b_.cols() == 0) throw ConfigError("matrix model needs a non-empty matrix");
}

void MatrixModel::apply(std::span<const double> f, std::span<double> g) const {
  check_signal(f);
  check_measurement(g);
  as_vec(g).noalias() = b_ * as_vec(f);
}

void MatrixModel::vjp(std::span<const double>, std::span<const double> g_bar,
                      std::span<double> f_bar) const {
  adjoint(g_bar, f_bar);
}

void MatrixModel::adjoint(std::span<const double> g, std::span<double> f) const {
  check_measurement(g);
  check_signal(f);
  as_vec(f).noalias() = b_.transpose() * as_vec(g);
}

json MatrixModel::config_json() const {
  return {{"kind", "matrix"}, {"rows", b_.rows()}, {"cols", b_.cols()}, {"seed", seed_}};
}

SquaredLinearModel::SquaredLinearModel(std::size_t n, std::size_t m, std::uint64_t seed)
    : n_(n), m_(m), seed_(seed), b_(MatrixModel::random_matrix(m, n, seed)) {
  if (n == 0 || m == 0) throw ConfigError("squared_linear model needs positive dimensions");
}

void SquaredLinearModel::apply(std::span<const double> f, std::span<double> g) const {
  check_signal(f);
  check_measurement(g);
  as_vec(g) = (b_ * as_vec(f)).array().square().matrix();
}

void SquaredLinearModel::vjp(std::span<const double> f, std::span<const double> g_bar,
                             std::span<double> f_bar) const {
  check_signal(f);
  check_measurement(g_bar);
  check_signal(f_bar);
  const Eigen::VectorXd u = b_ * as_vec(f);
  as_vec(f_bar).noalias() = b_.transpose() * (2.0 * u.array() * as_vec(g_bar).array()).matrix();
}

json SquaredLinearModel::config_json() const {
  return {{"kind", "squared_linear"}, {"n", n_}, {"m", m_}, {"seed", seed_}};
}

}  // namespace varsig
