#pragma once

#include <charconv>
#include <string>

namespace sphtest::detail {

/// Shortest round-trip decimal form of x.
inline std::string fmt(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

}  // namespace sphtest::detail
