#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace varsig {

/// Unsigned-byte IDX array (the MNIST distribution format): magic
/// 0x00 0x00 0x08 <rank>, big-endian u32 dims, then row-major bytes.
struct IdxArray {
  std::vector<std::uint32_t> dims;
  std::vector<std::uint8_t> data;

  std::size_t count() const { return dims.empty() ? 0 : dims[0]; }
  /// Bytes per leading-index item (28*28 for MNIST images, 1 for labels).
  std::size_t item_size() const;
};

IdxArray idx_decode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> idx_encode(const IdxArray& a);
IdxArray idx_read(const std::filesystem::path& path);
void idx_write(const std::filesystem::path& path, const IdxArray& a);

}  // namespace varsig
