#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <type_traits>

#include "scvad/error.hpp"

namespace scvad::detail {

template <typename T>
struct bits_of {
  using type = std::make_unsigned_t<T>;
};
template <>
struct bits_of<float> {
  using type = std::uint32_t;
};

template <typename T>
void put_le(std::ostream& out, T value) {
  static_assert(std::is_integral_v<T> || std::is_same_v<T, float>);
  using U = typename bits_of<T>::type;
  const U bits = std::bit_cast<U>(value);
  char bytes[sizeof(U)];
  for (std::size_t i = 0; i < sizeof(U); ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xFF);
  out.write(bytes, sizeof(U));
}

template <typename T>
T get_le(std::istream& in, const char* what) {
  static_assert(std::is_integral_v<T> || std::is_same_v<T, float>);
  using U = typename bits_of<T>::type;
  unsigned char bytes[sizeof(U)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(U))) {
    throw FormatError(std::string("truncated input while reading ") + what);
  }
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) bits |= static_cast<U>(bytes[i]) << (8 * i);
  return std::bit_cast<T>(bits);
}

inline void expect_magic(std::istream& in, const char (&magic)[4], const char* what) {
  char bytes[4];
  if (!in.read(bytes, 4)) throw FormatError(std::string("truncated ") + what + " header");
  if (std::memcmp(bytes, magic, 4) != 0) throw FormatError(std::string("bad magic bytes for ") + what);
}

}  // namespace scvad::detail
