#ifndef LSPK_TENSOR_IO_HPP
#define LSPK_TENSOR_IO_HPP

// TNS1 binary tensor files:
//   "TNS1" | u64 m | m x u64 extents | n1*...*nm x f64, row-major
// All integers and floats little-endian.

#include "lspk/tensor.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>

namespace lspk {

namespace detail {

inline void put_u64(std::ostream& os, std::uint64_t v) {
  std::array<unsigned char, 8> b{};
  for (int k = 0; k < 8; ++k) b[k] = static_cast<unsigned char>(v >> (8 * k));
  os.write(reinterpret_cast<const char*>(b.data()), 8);
}

inline std::uint64_t get_u64(std::istream& is) {
  std::array<unsigned char, 8> b{};
  if (!is.read(reinterpret_cast<char*>(b.data()), 8)) throw FormatError("TNS1: truncated header");
  std::uint64_t v = 0;
  for (int k = 7; k >= 0; --k) v = (v << 8) | b[k];
  return v;
}

}  // namespace detail

inline void write_tns1(std::ostream& os, const DenseTensor& t) {
  os.write("TNS1", 4);
  detail::put_u64(os, t.shape().order());
  for (auto d : t.shape().dims()) detail::put_u64(os, d);
  for (double v : t.data()) detail::put_u64(os, std::bit_cast<std::uint64_t>(v));
  if (!os) throw FormatError("TNS1: write failed");
}

inline DenseTensor read_tns1(std::istream& is) {
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, "TNS1", 4) != 0) throw FormatError("TNS1: bad magic");
  const std::uint64_t m = detail::get_u64(is);
  if (m < 3) throw FormatError("TNS1: order must be at least 3, got " + std::to_string(m));
  if (m > 64) throw FormatError("TNS1: implausible order " + std::to_string(m));
  std::vector<std::size_t> dims(m);
  for (auto& d : dims) d = detail::get_u64(is);
  Shape shape = [&] {
    try {
      return Shape(dims);
    } catch (const DimensionError& e) {
      throw FormatError(std::string("TNS1: ") + e.what());
    }
  }();
  std::vector<double> data(shape.numel());
  for (auto& v : data) {
    std::array<unsigned char, 8> b{};
    if (!is.read(reinterpret_cast<char*>(b.data()), 8)) throw FormatError("TNS1: payload shorter than header declares");
    std::uint64_t bits = 0;
    for (int k = 7; k >= 0; --k) bits = (bits << 8) | b[k];
    v = std::bit_cast<double>(bits);
  }
  if (is.peek() != std::char_traits<char>::eof()) throw FormatError("TNS1: trailing bytes after payload");
  try {
    return DenseTensor(std::move(shape), std::move(data));
  } catch (const NumericalError& e) {
    throw FormatError(std::string("TNS1: ") + e.what());
  }
}

inline void save_tns1(const std::filesystem::path& path, const DenseTensor& t) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot open " + path.string() + " for writing");
  write_tns1(os, t);
}

inline DenseTensor load_tns1(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open " + path.string());
  return read_tns1(is);
}

}  // namespace lspk

#endif  // LSPK_TENSOR_IO_HPP
