#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>

namespace teegi::io {

// Little-endian scalar packing for the binary file sections.

template <class T, class U>
inline void appendLe(std::string& out, T value) {
  static_assert(sizeof(T) == sizeof(U));
  U bits;
  std::memcpy(&bits, &value, sizeof bits);
  for (std::size_t i = 0; i < sizeof bits; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
}

inline void appendF32(std::string& out, float v) { appendLe<float, std::uint32_t>(out, v); }
inline void appendF64(std::string& out, double v) { appendLe<double, std::uint64_t>(out, v); }

template <class T, class U>
inline T readLe(std::string_view data, std::size_t offset) {
  U bits = 0;
  for (std::size_t i = 0; i < sizeof bits; ++i)
    bits |= static_cast<U>(static_cast<unsigned char>(data[offset + i])) << (8 * i);
  T value;
  std::memcpy(&value, &bits, sizeof value);
  return value;
}

inline float readF32(std::string_view data, std::size_t offset) {
  return readLe<float, std::uint32_t>(data, offset);
}
inline double readF64(std::string_view data, std::size_t offset) {
  return readLe<double, std::uint64_t>(data, offset);
}

}  // namespace teegi::io
