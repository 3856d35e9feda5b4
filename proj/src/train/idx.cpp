#include "varsig/train/idx.hpp"

#include "varsig/core/error.hpp"
#include "varsig/core/tensor_file.hpp"

namespace varsig {

std::size_t IdxArray::item_size() const {
  std::size_t s = 1;
  for (std::size_t i = 1; i < dims.size(); ++i) s *= dims[i];
  return s;
}

IdxArray idx_decode(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4) throw FormatError("idx: truncated magic", bytes.size());
  if (bytes[0] != 0 || bytes[1] != 0) throw FormatError("idx: bad magic", 0);
  if (bytes[2] != 0x08) throw FormatError("idx: only unsigned-byte data is supported", 2);
  const std::size_t rank = bytes[3];
  if (rank == 0) throw FormatError("idx: rank must be positive", 3);
  if (bytes.size() < 4 + 4 * rank) throw FormatError("idx: truncated dims", bytes.size());
  IdxArray a;
  std::uint64_t total = 1;
  for (std::size_t i = 0; i < rank; ++i) {
    const std::uint8_t* p = &bytes[4 + 4 * i];
    const std::uint32_t d = (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) |
                            (std::uint32_t{p[2]} << 8) | std::uint32_t{p[3]};
    a.dims.push_back(d);
    total *= d;
    if (total > (std::uint64_t{1} << 40)) throw FormatError("idx: dims overflow", 4 + 4 * i);
  }
  const std::size_t header = 4 + 4 * rank;
  if (bytes.size() - header < total) {
    throw FormatError("idx: truncated payload", bytes.size());
  }
  if (bytes.size() - header > total) throw FormatError("idx: trailing bytes", header + total);
  a.data.assign(bytes.begin() + static_cast<std::ptrdiff_t>(header), bytes.end());
  return a;
}

std::vector<std::uint8_t> idx_encode(const IdxArray& a) {
  if (a.dims.empty() || a.dims.size() > 255) throw ShapeError("idx: rank must be 1..255");
  std::size_t total = 1;
  for (auto d : a.dims) total *= d;
  if (total != a.data.size()) throw ShapeError("idx: dims do not match data size");
  std::vector<std::uint8_t> out{0, 0, 0x08, static_cast<std::uint8_t>(a.dims.size())};
  for (auto d : a.dims) {
    out.push_back(static_cast<std::uint8_t>(d >> 24));
    out.push_back(static_cast<std::uint8_t>(d >> 16));
    out.push_back(static_cast<std::uint8_t>(d >> 8));
    out.push_back(static_cast<std::uint8_t>(d));
  }
  out.insert(out.end(), a.data.begin(), a.data.end());
  return out;
}

IdxArray idx_read(const std::filesystem::path& path) { return idx_decode(read_file_bytes(path)); }

void idx_write(const std::filesystem::path& path, const IdxArray& a) {
  write_file_bytes(path, idx_encode(a));
}

}  // namespace varsig
