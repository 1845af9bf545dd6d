#pragma once

#include <array>
#include <charconv>
#include <string>

namespace typpert {

/// Decimal with 17 significant digits, '.' separator, locale independent.
inline std::string format_double(double v) {
  std::array<char, 64> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v,
                           std::chars_format::general, 17);
  return std::string(buf.data(), res.ptr);
}

/// Shortest round-trip representation; used in file names and labels.
inline std::string format_short(double v) {
  std::array<char, 64> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

}  // namespace typpert
