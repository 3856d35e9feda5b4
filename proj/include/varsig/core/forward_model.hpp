#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "varsig/core/types.hpp"

namespace varsig {

using json = nlohmann::json;

/// A differentiable measurement operator A(.) acting on flat row-major
/// vectors. Implementations must be pure: `apply` and `vjp` may be called
/// concurrently from several threads on the same instance.
class ForwardModel {
 public:
  virtual ~ForwardModel() = default;

  virtual SystemId system() const noexcept = 0;
  virtual std::string name() const = 0;
  virtual bool is_linear() const noexcept = 0;
  virtual Shape signal_shape() const = 0;
  virtual Shape measurement_shape() const = 0;
  virtual bool nonneg_measurement() const noexcept = 0;

  /// g = A(f).
  virtual void apply(std::span<const double> f, std::span<double> g) const = 0;

  /// f_bar = (dA/df)^T g_bar evaluated at f.
  virtual void vjp(std::span<const double> f, std::span<const double> g_bar,
                   std::span<double> f_bar) const = 0;

  virtual bool has_adjoint() const noexcept { return false; }
  /// Transpose of a linear operator; only defined when has_adjoint().
  virtual void adjoint(std::span<const double> g, std::span<double> f) const;

  virtual json config_json() const = 0;

  std::size_t signal_len() const { return shape_size(signal_shape()); }
  std::size_t measurement_len() const { return shape_size(measurement_shape()); }

  std::vector<double> apply(std::span<const double> f) const;
  std::vector<double> vjp(std::span<const double> f, std::span<const double> g_bar) const;
  std::vector<double> adjoint(std::span<const double> g) const;

  /// Typed entry point; checks system and shape before evaluating.
  MeasurementVec apply(const SignalVec& f) const;

 protected:
  void check_signal(std::span<const double> f) const;
  void check_measurement(std::span<const double> g) const;
};

using ForwardModelPtr = std::shared_ptr<const ForwardModel>;

/// 64-bit FNV-1a over the compact dump of a JSON value. Object keys are
/// stored sorted, so equal configs hash equal regardless of insertion order.
std::uint64_t config_hash(const json& config);
std::string config_hash_hex(const json& config);

}  // namespace varsig
