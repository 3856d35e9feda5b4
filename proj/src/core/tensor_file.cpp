#include "varsig/core/tensor_file.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "varsig/core/error.hpp"

namespace varsig {

static_assert(std::endian::native == std::endian::little,
              "TensorFile IO assumes a little-endian host");

namespace {

template <typename T>
void put(std::vector<std::uint8_t>& out, T v) {
  const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
  out.insert(out.end(), p, p + sizeof(T));
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  template <typename T>
  T get(const char* what) {
    if (bytes_.size() - pos_ < sizeof(T)) {
      throw FormatError(std::string("truncated ") + what, pos_);
    }
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }

  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }
  const std::uint8_t* cursor() const { return bytes_.data() + pos_; }
  void skip(std::size_t n) { pos_ += n; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> tensor_encode(const Tensor& t) {
  if (t.dims.empty() || t.dims.size() > kTensorMaxRank) {
    throw ShapeError("tensor rank must be 1.." + std::to_string(kTensorMaxRank) + ", got " +
                     std::to_string(t.dims.size()));
  }
  if (shape_size(t.dims) != t.values.size()) {
    throw ShapeError("tensor dims " + shape_string(t.dims) + " do not match " +
                     std::to_string(t.values.size()) + " values");
  }
  for (double v : t.values) {
    if (!std::isfinite(v)) throw DomainError("tensor contains a non-finite value");
  }
  std::vector<std::uint8_t> out;
  const std::size_t width = t.dtype == DType::f32 ? 4 : 8;
  out.reserve(16 + 8 * t.dims.size() + width * t.values.size());
  out.insert(out.end(), {'T', 'N', 'S', 'R'});
  put<std::uint32_t>(out, kTensorFileVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(t.dtype));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(t.dims.size()));
  for (std::size_t d : t.dims) put<std::uint64_t>(out, d);
  if (t.dtype == DType::f32) {
    for (double v : t.values) {
      const float f = static_cast<float>(v);
      if (!std::isfinite(f)) throw DomainError("tensor value overflows f32");
      put<float>(out, f);
    }
  } else {
    for (double v : t.values) put<double>(out, v);
  }
  return out;
}

Tensor tensor_decode(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  if (bytes.size() < 4) throw FormatError("truncated magic", 0);
  if (std::memcmp(bytes.data(), "TNSR", 4) != 0) throw FormatError("bad magic", 0);
  r.skip(4);
  const std::size_t version_at = r.pos();
  const auto version = r.get<std::uint32_t>("version");
  if (version != kTensorFileVersion) {
    throw FormatError("unsupported version " + std::to_string(version), version_at);
  }
  const std::size_t dtype_at = r.pos();
  const auto dtype_raw = r.get<std::uint32_t>("dtype");
  if (dtype_raw > 1) throw FormatError("unknown dtype " + std::to_string(dtype_raw), dtype_at);
  const std::size_t rank_at = r.pos();
  const auto rank = r.get<std::uint32_t>("rank");
  if (rank == 0 || rank > kTensorMaxRank) {
    throw FormatError("invalid rank " + std::to_string(rank), rank_at);
  }
  Tensor t;
  t.dtype = static_cast<DType>(dtype_raw);
  std::uint64_t count = 1;
  for (std::uint32_t i = 0; i < rank; ++i) {
    const std::size_t dim_at = r.pos();
    const auto d = r.get<std::uint64_t>("dims");
    if (d != 0 && count > std::numeric_limits<std::uint64_t>::max() / 16 / d) {
      throw FormatError("dims overflow", dim_at);
    }
    count *= d;
    t.dims.push_back(static_cast<std::size_t>(d));
  }
  const std::size_t width = t.dtype == DType::f32 ? 4 : 8;
  const std::uint64_t need = count * width;
  if (r.remaining() < need) {
    throw FormatError("truncated payload: need " + std::to_string(need) + " bytes, have " +
                          std::to_string(r.remaining()),
                      bytes.size());
  }
  if (r.remaining() > need) {
    throw FormatError("trailing bytes after payload", r.pos() + need);
  }
  t.values.resize(count);
  const std::uint8_t* p = r.cursor();
  for (std::uint64_t i = 0; i < count; ++i) {
    if (t.dtype == DType::f32) {
      float f;
      std::memcpy(&f, p + 4 * i, 4);
      t.values[i] = f;
    } else {
      std::memcpy(&t.values[i], p + 8 * i, 8);
    }
  }
  return t;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in || std::filesystem::is_directory(path)) throw MissingFileError(path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw StateError("cannot open for writing: " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw StateError("write failed: " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in || std::filesystem::is_directory(path)) throw MissingFileError(path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  write_file_bytes(path, {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

void tensor_write(const std::filesystem::path& path, const Tensor& t) {
  write_file_bytes(path, tensor_encode(t));
}

Tensor tensor_read(const std::filesystem::path& path) {
  return tensor_decode(read_file_bytes(path));
}

}  // namespace varsig
