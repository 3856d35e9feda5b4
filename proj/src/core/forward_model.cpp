#include "varsig/core/forward_model.hpp"

#include <cstdio>

#include "varsig/core/error.hpp"

namespace varsig {

void ForwardModel::adjoint(std::span<const double>, std::span<double>) const {
  throw UnsupportedModelError(name() + " has no adjoint");
}

void ForwardModel::check_signal(std::span<const double> f) const {
  if (f.size() != signal_len()) {
    throw ShapeError(name() + ": signal needs " + std::to_string(signal_len()) +
                     " values " + shape_string(signal_shape()) + ", got " +
                     std::to_string(f.size()));
  }
}

void ForwardModel::check_measurement(std::span<const double> g) const {
  if (g.size() != measurement_len()) {
    throw ShapeError(name() + ": measurement needs " + std::to_string(measurement_len()) +
                     " values " + shape_string(measurement_shape()) + ", got " +
                     std::to_string(g.size()));
  }
}

std::vector<double> ForwardModel::apply(std::span<const double> f) const {
  std::vector<double> g(measurement_len());
  apply(f, g);
  return g;
}

std::vector<double> ForwardModel::vjp(std::span<const double> f,
                                      std::span<const double> g_bar) const {
  std::vector<double> f_bar(signal_len());
  vjp(f, g_bar, f_bar);
  return f_bar;
}

std::vector<double> ForwardModel::adjoint(std::span<const double> g) const {
  std::vector<double> f(signal_len());
  adjoint(g, f);
  return f;
}

MeasurementVec ForwardModel::apply(const SignalVec& f) const {
  if (f.system() != system()) {
    throw SystemMismatchError("signal is for system '" + std::string(to_string(f.system())) +
                              "' but model '" + name() + "' is '" +
                              std::string(to_string(system())) + "'");
  }
  if (f.shape() != signal_shape()) {
    throw ShapeError(name() + ": expected signal shape " + shape_string(signal_shape()) +
                     ", got " + shape_string(f.shape()));
  }
  std::vector<double> g = apply(f.data());
  if (nonneg_measurement()) {
    // Round-off can leave |.|^2 a hair below zero in principle; clamp so the
    // value type's invariant holds.
    for (double& v : g) v = v < 0.0 ? 0.0 : v;
  }
  return MeasurementVec(system(), measurement_shape(), std::move(g), nonneg_measurement());
}

std::uint64_t config_hash(const json& config) {
  const std::string s = config.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string config_hash_hex(const json& config) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(config_hash(config)));
  return buf;
}

}  // namespace varsig
