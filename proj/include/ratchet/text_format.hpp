#pragma once

// Number-to-text helpers for output files. std::to_chars emits the shortest
// round-trip decimal form, so identical doubles always print identically.

#include <charconv>
#include <string>
#include <system_error>

namespace ratchet {

inline std::string format_double(double value) {
  char buffer[64];
  const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  if (ec != std::errc{}) return "nan";
  return std::string(buffer, ptr);
}

}  // namespace ratchet
