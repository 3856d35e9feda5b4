#include "varsig/core/types.hpp"

#include <cmath>
#include <functional>
#include <numeric>

#include "varsig/core/error.hpp"

namespace varsig {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::shape: return "shape";
    case ErrorKind::domain: return "domain";
    case ErrorKind::format: return "format";
    case ErrorKind::config: return "config";
    case ErrorKind::state: return "state";
    case ErrorKind::unsupported_model: return "unsupported_model";
    case ErrorKind::missing_file: return "missing_file";
    case ErrorKind::system_mismatch: return "system_mismatch";
    case ErrorKind::numerical: return "numerical";
  }
  return "unknown";
}

std::string_view to_string(SystemId id) noexcept {
  switch (id) {
    case SystemId::streaking: return "streaking";
    case SystemId::video_cs: return "video_cs";
    case SystemId::hologram: return "hologram";
    case SystemId::generic: return "generic";
  }
  return "generic";
}

SystemId system_from_string(std::string_view name) {
  if (name == "streaking") return SystemId::streaking;
  if (name == "video_cs") return SystemId::video_cs;
  if (name == "hologram") return SystemId::hologram;
  if (name == "generic") return SystemId::generic;
  throw ConfigError("unknown system id '" + std::string(name) + "'");
}

std::size_t shape_size(const Shape& shape) noexcept {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
  std::string out = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(shape[i]);
  }
  return out + ")";
}

Shape native_signal_shape(SystemId id) {
  switch (id) {
    case SystemId::streaking: return {440};
    case SystemId::video_cs: return {64, 64, 3, 4};
    case SystemId::hologram: return {64, 64};
    case SystemId::generic: break;
  }
  throw ConfigError("generic systems have no native signal shape");
}

Shape native_measurement_shape(SystemId id) {
  switch (id) {
    case SystemId::streaking: return {256, 35};
    case SystemId::video_cs: return {64, 64, 3};
    case SystemId::hologram: return {64, 64};
    case SystemId::generic: break;
  }
  throw ConfigError("generic systems have no native measurement shape");
}

namespace {

void check_array(const Shape& shape, std::span<const double> data, const char* what) {
  if (shape.empty()) throw ShapeError(std::string(what) + ": rank must be at least 1");
  if (shape_size(shape) != data.size()) {
    throw ShapeError(std::string(what) + ": shape " + shape_string(shape) + " needs " +
                     std::to_string(shape_size(shape)) + " values, got " +
                     std::to_string(data.size()));
  }
  for (double v : data) {
    if (!std::isfinite(v)) throw DomainError(std::string(what) + ": non-finite entry");
  }
}

}  // namespace

SignalVec::SignalVec(SystemId system, Shape shape, std::vector<double> data)
    : system_(system), shape_(std::move(shape)), data_(std::move(data)) {
  check_array(shape_, data_, "SignalVec");
}

MeasurementVec::MeasurementVec(SystemId system, Shape shape, std::vector<double> data,
                               bool nonneg)
    : system_(system), shape_(std::move(shape)), data_(std::move(data)), nonneg_(nonneg) {
  check_array(shape_, data_, "MeasurementVec");
  if (nonneg_) {
    for (double v : data_) {
      if (v < 0.0) throw DomainError("MeasurementVec: negative entry in nonnegative measurement");
    }
  }
}

std::vector<double> flatten(const SignalVec& f) {
  return {f.data().begin(), f.data().end()};
}

SignalVec unflatten(SystemId system, const Shape& shape, std::span<const double> flat) {
  return SignalVec(system, shape, std::vector<double>(flat.begin(), flat.end()));
}

}  // namespace varsig
