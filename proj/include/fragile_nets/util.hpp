#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace fragile_nets {

inline double inf_double() { return std::numeric_limits<double>::infinity(); }

inline double normal_pdf(double x) {
  static const double inv_sqrt_2pi = 0.3989422804014326779;
  return inv_sqrt_2pi * std::exp(-0.5 * x * x);
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Upper tail of the standard normal.
inline double phi_bar(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

// Printed form used for all numeric result output: 12 significant digits.
inline std::string fmt12(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

// Full-precision form used when a value must survive a save/load round trip.
inline std::string fmt17(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Value rounded to 12 significant digits (what fmt12 would print).
inline double round12(double v) {
  if (!std::isfinite(v)) return v;
  return std::strtod(fmt12(v).c_str(), nullptr);
}

inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline int env_threads() {
  const char* s = std::getenv("FRAGILE_NETS_THREADS");
  if (!s) return 1;
  int n = std::atoi(s);
  return n >= 1 ? n : 1;
}

inline bool env_seed(std::uint64_t& out) {
  const char* s = std::getenv("FRAGILE_NETS_SEED");
  if (!s || !*s) return false;
  out = std::strtoull(s, nullptr, 10);
  return true;
}

// Runs fn(i) for i in [0, n). Worker count comes from FRAGILE_NETS_THREADS;
// with one thread this is a plain loop. Items must be independent. The first
// exception raised by any worker is rethrown on the caller's thread.
inline void parallel_for(int n, const std::function<void(int)>& fn) {
  int workers = std::min(env_threads(), n);
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  std::exception_ptr first_error;
  std::mutex error_mu;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (int i = w; i < n; i += workers) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace fragile_nets
