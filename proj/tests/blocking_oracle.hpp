// Brute-force block enumeration used as the oracle for blocking rules.

#pragma once

#include <set>
#include <vector>

namespace lidtsm::testing {

/// Marks every window position permitted by the rules and collects them:
/// grid positions that fit, plus the window flush with the end.
inline std::vector<size_t> enumerate_block_starts(size_t t, size_t len, size_t step) {
  if (t <= len) return {0};  // padded to exactly one block
  std::set<size_t> starts;
  for (size_t s = 0; s < t; ++s) {
    const bool on_grid = s % step == 0;
    const bool fits = s + len <= t;
    if (on_grid && fits) starts.insert(s);
  }
  starts.insert(t - len);
  return {starts.begin(), starts.end()};
}

}  // namespace lidtsm::testing
