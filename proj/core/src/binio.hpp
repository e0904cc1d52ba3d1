#pragma once

// Private little-endian f64 framing + fixed-format number printing shared by
// the on-disk writers. Not installed.

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <string>

namespace xltrack::binio {

inline void append_f64_le(std::string& buf, double v) {
  auto u = std::bit_cast<std::uint64_t>(v);
  if constexpr (std::endian::native == std::endian::big) {
    u = __builtin_bswap64(u);
  }
  char raw[8];
  std::memcpy(raw, &u, 8);
  buf.append(raw, 8);
}

inline double read_f64_le(const char* p) {
  std::uint64_t u;
  std::memcpy(&u, p, 8);
  if constexpr (std::endian::native == std::endian::big) {
    u = __builtin_bswap64(u);
  }
  return std::bit_cast<double>(u);
}

// Round-trippable decimal form, locale-independent.
inline std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace xltrack::binio
