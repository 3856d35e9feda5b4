#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "varsig/core/types.hpp"

namespace varsig {

enum class DType : std::uint32_t { f32 = 0, f64 = 1 };

/// In-memory form of a TNSR file. Values are held as doubles regardless of
/// the on-disk dtype; f32 files widen on read and narrow on write.
struct Tensor {
  Shape dims;
  DType dtype = DType::f64;
  std::vector<double> values;

  friend bool operator==(const Tensor&, const Tensor&) = default;
};

inline constexpr std::uint32_t kTensorFileVersion = 1;
inline constexpr std::size_t kTensorMaxRank = 4;

// Layout: "TNSR" | u32 version | u32 dtype | u32 rank | u64 dims[rank] |
// payload, all little-endian, payload row-major.
std::vector<std::uint8_t> tensor_encode(const Tensor& t);
Tensor tensor_decode(std::span<const std::uint8_t> bytes);

void tensor_write(const std::filesystem::path& path, const Tensor& t);
Tensor tensor_read(const std::filesystem::path& path);

inline Tensor make_tensor(Shape dims, std::vector<double> values, DType dtype = DType::f64) {
  return Tensor{std::move(dims), dtype, std::move(values)};
}

// Whole-file helpers shared by the dataset and artifact code.
std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace varsig
