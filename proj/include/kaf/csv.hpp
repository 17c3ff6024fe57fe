#pragma once

#include <charconv>
#include <cstdint>
#include <string>

namespace kaf {

/// Shortest decimal string that parses back to the identical double.
/// Locale-free and deterministic, so CSV output is byte-reproducible.
inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::string format_int(std::int64_t v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace kaf
