#pragma once

// Little-endian primitives shared by the GPPI/GPPM/GPPW readers and writers.

#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>

#include "gpp/errors.hpp"

namespace gpp::binio {

inline void write_u8(std::ostream& os, std::uint8_t v) {
  os.write(reinterpret_cast<const char*>(&v), 1);
}

inline std::uint8_t read_u8(std::istream& is) {
  unsigned char b;
  is.read(reinterpret_cast<char*>(&b), 1);
  if (!is) throw IoError("unexpected end of file");
  return b;
}

inline void write_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

inline std::uint32_t read_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (!is) throw IoError("unexpected end of file");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

inline void write_u64(std::ostream& os, std::uint64_t v) {
  write_u32(os, static_cast<std::uint32_t>(v));
  write_u32(os, static_cast<std::uint32_t>(v >> 32));
}

inline std::uint64_t read_u64(std::istream& is) {
  const std::uint64_t lo = read_u32(is);
  const std::uint64_t hi = read_u32(is);
  return lo | (hi << 32);
}

inline void write_f32(std::ostream& os, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  write_u32(os, bits);
}

inline float read_f32(std::istream& is) {
  const std::uint32_t bits = read_u32(is);
  float v;
  std::memcpy(&v, &bits, 4);
  return v;
}

inline void write_f64(std::ostream& os, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  write_u64(os, bits);
}

inline double read_f64(std::istream& is) {
  const std::uint64_t bits = read_u64(is);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

}  // namespace gpp::binio
