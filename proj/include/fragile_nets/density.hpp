#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "fragile_nets/errors.hpp"
#include "fragile_nets/rng.hpp"
#include "fragile_nets/util.hpp"

namespace fragile_nets {

enum class DensityKind { truncated_gaussian, triangle, uniform, tabulated };

// Initial-value distribution of one type. All kinds are normalized closed
// forms on their support: gaussian restricted to (0, inf), triangle and
// uniform on [lo, hi], tabulated piecewise linear over its breakpoints.
struct DensitySpec {
  DensityKind kind = DensityKind::truncated_gaussian;
  double mean = 1.0, sd = 0.1;        // truncated_gaussian
  double lo = 0.0, peak = 0.0, hi = 0.0;  // triangle / uniform (peak unused)
  std::vector<std::pair<double, double>> table;  // tabulated (y, weight)

  static DensitySpec gaussian(double mean, double sd) {
    DensitySpec d;
    d.kind = DensityKind::truncated_gaussian;
    d.mean = mean;
    d.sd = sd;
    d.validate();
    return d;
  }
  static DensitySpec triangle_of(double lo, double peak, double hi) {
    DensitySpec d;
    d.kind = DensityKind::triangle;
    d.lo = lo;
    d.peak = peak;
    d.hi = hi;
    d.validate();
    return d;
  }
  static DensitySpec uniform_of(double lo, double hi) {
    DensitySpec d;
    d.kind = DensityKind::uniform;
    d.lo = lo;
    d.hi = hi;
    d.validate();
    return d;
  }
  static DensitySpec tabulated_of(std::vector<std::pair<double, double>> pts) {
    DensitySpec d;
    d.kind = DensityKind::tabulated;
    d.table = std::move(pts);
    d.validate();
    return d;
  }

  void validate() const {
    switch (kind) {
      case DensityKind::truncated_gaussian:
        if (!(sd > 0.0)) throw ValidationError("gaussian sd must be > 0");
        if (!(mean > 0.0)) throw ValidationError("gaussian mean must be > 0");
        return;
      case DensityKind::triangle:
        if (lo < 0.0) throw ValidationError("triangle support must lie in [0, inf)");
        if (!(lo <= peak && peak <= hi && lo < hi))
          throw ValidationError("triangle needs lo <= peak <= hi, lo < hi");
        return;
      case DensityKind::uniform:
        if (lo < 0.0) throw ValidationError("uniform support must lie in [0, inf)");
        if (!(lo < hi)) throw ValidationError("uniform needs lo < hi");
        return;
      case DensityKind::tabulated: {
        if (table.size() < 2) throw ValidationError("tabulated density needs >= 2 points");
        double w = 0.0;
        for (std::size_t i = 0; i < table.size(); ++i) {
          if (table[i].first < 0.0)
            throw ValidationError("tabulated density support must lie in [0, inf)");
          if (table[i].second < 0.0)
            throw ValidationError("tabulated density weights must be >= 0");
          if (i > 0 && !(table[i].first > table[i - 1].first))
            throw ValidationError("tabulated density points must be strictly increasing in y");
          w += table[i].second;
        }
        if (!(w > 0.0)) throw ValidationError("tabulated density has zero total weight");
        return;
      }
    }
    throw ValidationError("unknown density kind");
  }

  // Normalized density value at y (0 outside the support).
  double value_at(double y) const {
    switch (kind) {
      case DensityKind::truncated_gaussian: {
        if (y <= 0.0) return y == 0.0 ? raw_gauss(0.0) : 0.0;
        return raw_gauss(y);
      }
      case DensityKind::triangle: {
        if (y < lo || y > hi) return 0.0;
        double base = hi - lo;
        if (y <= peak)
          return peak == lo ? 2.0 / base : 2.0 * (y - lo) / (base * (peak - lo));
        return peak == hi ? 2.0 / base : 2.0 * (hi - y) / (base * (hi - peak));
      }
      case DensityKind::uniform:
        return (y >= lo && y <= hi) ? 1.0 / (hi - lo) : 0.0;
      case DensityKind::tabulated: {
        if (y < table.front().first || y > table.back().first) return 0.0;
        std::size_t s = seg(y);
        double t = (y - table[s].first) / (table[s + 1].first - table[s].first);
        return (table[s].second + t * (table[s + 1].second - table[s].second)) / tab_norm();
      }
    }
    return 0.0;
  }

  // Mass on (0, z): closed-form sub-distribution function.
  double sub_cdf(double z) const {
    if (z <= 0.0) return 0.0;
    switch (kind) {
      case DensityKind::truncated_gaussian: {
        double zc = normal_cdf(-mean / sd);
        return (normal_cdf((z - mean) / sd) - zc) / (1.0 - zc);
      }
      case DensityKind::triangle: {
        if (z <= lo) return 0.0;
        if (z >= hi) return 1.0;
        double base = hi - lo;
        if (z <= peak) {
          double num = (z - lo) * (z - lo);
          return peak == lo ? (z - lo) * 2.0 / base : num / (base * (peak - lo));
        }
        double num = (hi - z) * (hi - z);
        return 1.0 - (peak == hi ? (hi - z) * 2.0 / base : num / (base * (hi - peak)));
      }
      case DensityKind::uniform:
        return std::clamp((z - lo) / (hi - lo), 0.0, 1.0);
      case DensityKind::tabulated: {
        if (z <= table.front().first) return 0.0;
        if (z >= table.back().first) return 1.0;
        std::size_t s = seg(z);
        double acc = cum(s);
        double y0 = table[s].first, y1 = table[s + 1].first;
        double p0 = table[s].second, p1 = table[s + 1].second;
        double t = (z - y0) / (y1 - y0);
        double pz = p0 + t * (p1 - p0);
        acc += 0.5 * (p0 + pz) * (z - y0);
        return acc / tab_norm();
      }
    }
    return 0.0;
  }

  // Location scale used when a truncation box has to be invented.
  double location() const {
    switch (kind) {
      case DensityKind::truncated_gaussian:
        return mean;
      case DensityKind::triangle:
        return (lo + peak + hi) / 3.0;
      case DensityKind::uniform:
        return 0.5 * (lo + hi);
      case DensityKind::tabulated: {
        double m = 0.0;
        for (std::size_t s = 0; s + 1 < table.size(); ++s) {
          double y0 = table[s].first, y1 = table[s + 1].first;
          double p0 = table[s].second, p1 = table[s + 1].second;
          m += (y1 - y0) * (y0 * (2 * p0 + p1) + y1 * (p0 + 2 * p1)) / 6.0;
        }
        return m / tab_norm();
      }
    }
    return 1.0;
  }

  double support_hi() const {
    switch (kind) {
      case DensityKind::truncated_gaussian:
        return mean + 8.0 * sd;
      case DensityKind::triangle:
      case DensityKind::uniform:
        return hi;
      case DensityKind::tabulated:
        return table.back().first;
    }
    return 0.0;
  }

  // One sample, keyed by (type, particle id) so draws are order-independent.
  double sample(const CounterRng& rng, std::uint64_t type_idx,
                std::uint64_t particle_id) const {
    switch (kind) {
      case DensityKind::truncated_gaussian: {
        for (std::uint64_t attempt = 0; attempt < 256; ++attempt) {
          double y = mean + sd * rng.normal(stream::init, type_idx,
                                            particle_id, attempt);
          if (y > 0.0) return y;
        }
        throw NumericalError("gaussian sampling rejected 256 attempts");
      }
      case DensityKind::triangle: {
        double u = rng.uniform(stream::init, type_idx, particle_id, 0);
        double fc = peak == lo ? 0.0 : (peak - lo) / (hi - lo);
        if (u <= fc) return lo + std::sqrt(u * (hi - lo) * (peak - lo));
        return hi - std::sqrt((1.0 - u) * (hi - lo) * (hi - peak));
      }
      case DensityKind::uniform: {
        double u = rng.uniform(stream::init, type_idx, particle_id, 0);
        return lo + u * (hi - lo);
      }
      case DensityKind::tabulated: {
        double u = rng.uniform(stream::init, type_idx, particle_id, 0) * tab_norm();
        std::size_t s = 0;
        while (s + 2 < table.size() && cum(s + 1) < u) ++s;
        double y0 = table[s].first, y1 = table[s + 1].first;
        double p0 = table[s].second, p1 = table[s + 1].second;
        double rem = u - cum(s);
        double slope = (p1 - p0) / (y1 - y0);
        // Solve p0*d + slope*d^2/2 = rem for d in [0, y1-y0].
        double d;
        if (std::abs(slope) < 1e-300) {
          d = p0 > 0.0 ? rem / p0 : 0.0;
        } else {
          double disc = p0 * p0 + 2.0 * slope * rem;
          d = (-p0 + std::sqrt(std::max(disc, 0.0))) / slope;
        }
        return y0 + std::clamp(d, 0.0, y1 - y0);
      }
    }
    throw ValidationError("unknown density kind");
  }

 private:
  double raw_gauss(double y) const {
    double zc = normal_cdf(-mean / sd);
    return normal_pdf((y - mean) / sd) / (sd * (1.0 - zc));
  }
  std::size_t seg(double y) const {
    std::size_t lo_i = 0, hi_i = table.size() - 1;
    while (hi_i - lo_i > 1) {
      std::size_t mid = (lo_i + hi_i) / 2;
      if (table[mid].first <= y)
        lo_i = mid;
      else
        hi_i = mid;
    }
    return lo_i;
  }
  // Trapezoid cumulative weight up to breakpoint s.
  double cum(std::size_t s) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < s; ++i)
      acc += 0.5 * (table[i].second + table[i + 1].second) *
             (table[i + 1].first - table[i].first);
    return acc;
  }
  double tab_norm() const { return cum(table.size() - 1); }
};

}  // namespace fragile_nets
