#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace varsig {

// `generic` covers operators that are not one of the three measurement
// systems (toy operators in tests and user-supplied models).
enum class SystemId { streaking, video_cs, hologram, generic };

std::string_view to_string(SystemId id) noexcept;
SystemId system_from_string(std::string_view name);

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape) noexcept;
std::string shape_string(const Shape& shape);

/// Native signal shape per system: (440) | (64, 64, 3, 4) | (64, 64).
Shape native_signal_shape(SystemId id);
/// Native measurement shape per system: (256, 35) | (64, 64, 3) | (64, 64).
Shape native_measurement_shape(SystemId id);

/// Row-major array with axis order as given by `shape`. For video the axis
/// order is (y, x, channel, frame).
class SignalVec {
 public:
  SignalVec(SystemId system, Shape shape, std::vector<double> data);

  SystemId system() const noexcept { return system_; }
  const Shape& shape() const noexcept { return shape_; }
  std::size_t flat_len() const noexcept { return data_.size(); }
  std::span<const double> data() const noexcept { return data_; }

  friend bool operator==(const SignalVec&, const SignalVec&) = default;

 private:
  SystemId system_;
  Shape shape_;
  std::vector<double> data_;
};

class MeasurementVec {
 public:
  MeasurementVec(SystemId system, Shape shape, std::vector<double> data, bool nonneg);

  SystemId system() const noexcept { return system_; }
  const Shape& shape() const noexcept { return shape_; }
  bool nonneg() const noexcept { return nonneg_; }
  std::size_t flat_len() const noexcept { return data_.size(); }
  std::span<const double> data() const noexcept { return data_; }

  friend bool operator==(const MeasurementVec&, const MeasurementVec&) = default;

 private:
  SystemId system_;
  Shape shape_;
  std::vector<double> data_;
  bool nonneg_;
};

std::vector<double> flatten(const SignalVec& f);
SignalVec unflatten(SystemId system, const Shape& shape, std::span<const double> flat);

struct DatasetRecord {
  SignalVec f;
  MeasurementVec g;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> meta;
};

}  // namespace varsig
