#pragma once

// Little-endian primitives shared by the basis cache and checkpoint formats.

#include <array>
#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string_view>

#include "spectralcf/errors.hpp"
#include "spectralcf/types.hpp"

namespace spectralcf::detail {

template <typename U>
void put_le(std::ostream& out, U value) {
  std::array<char, sizeof(U)> bytes{};
  for (std::size_t k = 0; k < sizeof(U); ++k) {
    bytes[k] = static_cast<char>((value >> (8 * k)) & 0xFF);
  }
  out.write(bytes.data(), bytes.size());
}

template <typename U>
U get_le(std::istream& in) {
  std::array<unsigned char, sizeof(U)> bytes{};
  in.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
  if (!in) throw FormatError("unexpected end of file");
  U value = 0;
  for (std::size_t k = 0; k < sizeof(U); ++k) value |= static_cast<U>(bytes[k]) << (8 * k);
  return value;
}

inline void put_u8(std::ostream& out, std::uint8_t v) { out.put(static_cast<char>(v)); }
inline std::uint8_t get_u8(std::istream& in) { return get_le<std::uint8_t>(in); }
inline void put_u32(std::ostream& out, std::uint32_t v) { put_le(out, v); }
inline std::uint32_t get_u32(std::istream& in) { return get_le<std::uint32_t>(in); }
inline void put_u64(std::ostream& out, std::uint64_t v) { put_le(out, v); }
inline std::uint64_t get_u64(std::istream& in) { return get_le<std::uint64_t>(in); }
inline void put_f64(std::ostream& out, double v) { put_le(out, std::bit_cast<std::uint64_t>(v)); }
inline double get_f64(std::istream& in) { return std::bit_cast<double>(get_le<std::uint64_t>(in)); }

inline void put_magic(std::ostream& out, std::string_view magic) { out.write(magic.data(), 4); }

inline void expect_magic(std::istream& in, std::string_view magic) {
  char got[4] = {};
  in.read(got, 4);
  if (!in || std::string_view(got, 4) != magic) {
    throw FormatError("bad magic, expected '" + std::string(magic) + "'");
  }
}

// Row-major payload; shape is written by the caller.
inline void put_matrix(std::ostream& out, const Matrix& m) {
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) put_f64(out, m(r, c));
  }
}

inline Matrix get_matrix(std::istream& in, Index rows, Index cols) {
  Matrix m(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) m(r, c) = get_f64(in);
  }
  return m;
}

// Guards allocation against corrupted headers.
inline Index checked_dim(std::uint64_t v, const char* what) {
  constexpr std::uint64_t kMax = std::uint64_t{1} << 32;
  if (v > kMax) throw FormatError(std::string("implausible ") + what + " in header");
  return static_cast<Index>(v);
}

}  // namespace spectralcf::detail
