#pragma once

#include <charconv>
#include <string>

namespace ecusum {

// Shortest decimal string that round-trips to the same double. All CSV
// emitted by this project goes through here so identical runs produce
// identical bytes.
inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace ecusum
