#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "fragile_nets/errors.hpp"

namespace fragile_nets {

enum class GKind { log, affine, tabulated };

// Interaction transform g applied to survival fractions. Non-decreasing on
// (0, 1] with g(1) = 0; the loss a type feels is scaled by differences of g.
// Tabulated tables are piecewise linear over breakpoints in (0, 1] and are
// extended linearly below the first breakpoint.
struct InteractionFn {
  GKind kind = GKind::log;
  std::vector<std::pair<double, double>> table;  // (z, g(z)), ascending z

  static InteractionFn log_kind() { return InteractionFn{GKind::log, {}}; }
  static InteractionFn affine_kind() { return InteractionFn{GKind::affine, {}}; }
  static InteractionFn tabulated(std::vector<std::pair<double, double>> pts) {
    InteractionFn g{GKind::tabulated, std::move(pts)};
    g.validate();
    return g;
  }

  void validate() const {
    if (kind != GKind::tabulated) return;
    if (table.size() < 2) throw ValidationError("tabulated g needs at least 2 points");
    for (std::size_t i = 0; i < table.size(); ++i) {
      if (!(table[i].first > 0.0) || table[i].first > 1.0)
        throw ValidationError("tabulated g breakpoints must lie in (0,1]");
      if (i > 0) {
        if (!(table[i].first > table[i - 1].first))
          throw ValidationError("tabulated g breakpoints must be strictly increasing");
        if (table[i].second < table[i - 1].second)
          throw ValidationError("tabulated g values must be non-decreasing");
      }
    }
    if (std::abs(table.back().first - 1.0) > 1e-12 || std::abs(table.back().second) > 1e-12)
      throw ValidationError("tabulated g must end at (1, 0)");
  }

  // g(z) for z in (0, 1]; anything else is a domain error.
  double eval(double z) const {
    if (!(z > 0.0) || z > 1.0) throw DomainError("g evaluated outside (0,1]");
    switch (kind) {
      case GKind::log:
        return std::log(z);
      case GKind::affine:
        return z - 1.0;
      case GKind::tabulated:
        return interp(z);
    }
    throw DomainError("unknown g kind");
  }

  // One-sided slope; for tabulated kinds the slope of the containing segment.
  double prime(double z) const {
    if (!(z > 0.0) || z > 1.0) throw DomainError("g' evaluated outside (0,1]");
    switch (kind) {
      case GKind::log:
        return 1.0 / z;
      case GKind::affine:
        return 1.0;
      case GKind::tabulated:
        return slope(segment(z));
    }
    throw DomainError("unknown g kind");
  }

  // Limit value at 0+: -inf for log, -1 for affine, linear extension otherwise.
  // Callers dealing with total wipeout must guard the log case themselves.
  double value_at_zero() const {
    switch (kind) {
      case GKind::log:
        return -std::numeric_limits<double>::infinity();
      case GKind::affine:
        return -1.0;
      case GKind::tabulated: {
        std::size_t s = 0;
        return table[s].second - slope(s) * table[s].first;
      }
    }
    return -std::numeric_limits<double>::infinity();
  }

 private:
  std::size_t segment(double z) const {
    // Index s with table[s].first <= z <= table[s+1].first, clamped at ends.
    if (z <= table.front().first) return 0;
    std::size_t lo = 0, hi = table.size() - 1;
    while (hi - lo > 1) {
      std::size_t mid = (lo + hi) / 2;
      if (table[mid].first <= z)
        lo = mid;
      else
        hi = mid;
    }
    return std::min(lo, table.size() - 2);
  }

  double slope(std::size_t s) const {
    return (table[s + 1].second - table[s].second) /
           (table[s + 1].first - table[s].first);
  }

  double interp(double z) const {
    std::size_t s = segment(z);
    return table[s].second + slope(s) * (z - table[s].first);
  }
};

inline InteractionFn log_kind() { return InteractionFn::log_kind(); }
inline InteractionFn affine_kind() { return InteractionFn::affine_kind(); }

}  // namespace fragile_nets
