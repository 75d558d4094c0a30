#pragma once

#include <cstdio>
#include <string>

namespace condense {

// Shortest-ish decimal that CSV consumers and byte-identity checks can rely
// on; %.15g keeps one representation per double across runs of one build.
inline std::string csv_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.15g", x);
  return buf;
}

}  // namespace condense
