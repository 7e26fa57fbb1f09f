#pragma once

#include <atomic>
#include <iostream>
#include <string_view>

namespace unpaired {

inline std::atomic<bool>& warnings_enabled() {
  static std::atomic<bool> on{true};
  return on;
}

inline std::atomic<long>& warning_count() {
  static std::atomic<long> n{0};
  return n;
}

inline void log_warning(std::string_view msg) {
  ++warning_count();
  if (warnings_enabled()) std::cerr << "[warn] " << msg << '\n';
}

/// Counts every call; prints only the 1st, 10th, 100th, ... occurrence for this site.
inline void log_warning_sparse(std::atomic<long>& site, std::string_view msg) {
  ++warning_count();
  const long n = ++site;
  long p = 1;
  while (p < n) p *= 10;
  if (p == n && warnings_enabled()) std::cerr << "[warn] (x" << n << ") " << msg << '\n';
}

}  // namespace unpaired
