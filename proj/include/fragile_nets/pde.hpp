#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "fragile_nets/config.hpp"
#include "fragile_nets/density.hpp"
#include "fragile_nets/errors.hpp"
#include "fragile_nets/util.hpp"

namespace fragile_nets {

// Space-time box for the forward equation: n_y interior nodes on (0, y_max),
// absorbing walls at both ends, n_t steps on [0, T]. Rows store all
// n_y + 2 nodes; the wall values stay 0.
struct PdeGrid {
  int n_y = 200;
  int n_t = 100;
  double y_max = 4.0;
  double T = 1.0;

  double dy() const { return y_max / (n_y + 1); }
  double dt() const { return T / n_t; }
  double y(int j) const { return j * dy(); }
  double t(int k) const { return k * dt(); }

  static PdeGrid of(const GridSpec& g, double horizon) {
    return PdeGrid{g.n_y, g.n_t, g.y_max, horizon};
  }
};

inline double mass_of(const std::vector<double>& row, double dy) {
  double s = 0.0;
  for (std::size_t j = 1; j + 1 < row.size(); ++j) s += row[j];
  return s * dy;
}

// Grid projection of an initial-value distribution: nodal values, pinned to 0
// at both walls, renormalized to unit mass. The distribution itself must not
// carry visible weight at either wall (absorbed mass at time zero would be
// meaningless), checked against a 1e-6 density threshold.
inline std::vector<double> init_density(const DensitySpec& spec, const PdeGrid& grid) {
  spec.validate();
  if (spec.value_at(0.0) > 1e-6)
    throw ValidationError("initial density has support touching 0 with value " +
                          std::to_string(spec.value_at(0.0)));
  if (spec.value_at(grid.y_max) > 1e-6)
    throw ValidationError("initial density reaches y_max=" + std::to_string(grid.y_max) +
                          "; enlarge the grid");
  std::vector<double> row(grid.n_y + 2, 0.0);
  for (int j = 1; j <= grid.n_y; ++j) row[j] = spec.value_at(grid.y(j));
  double m = mass_of(row, grid.dy());
  if (!(m > 0.0)) throw ValidationError("initial density has no mass inside the grid");
  for (double& v : row) v /= m;
  return row;
}

enum class CnBoundary { absorbing, reflecting };

namespace detail {

// Tridiagonal solve, Thomas elimination. Overwrites d with the solution.
inline void solve_tridiag(std::vector<double>& sub, std::vector<double>& diag,
                          std::vector<double>& sup, std::vector<double>& d) {
  const std::size_t m = diag.size();
  for (std::size_t i = 1; i < m; ++i) {
    double w = sub[i] / diag[i - 1];
    diag[i] -= w * sup[i - 1];
    d[i] -= w * d[i - 1];
  }
  d[m - 1] /= diag[m - 1];
  for (std::size_t i = m - 1; i-- > 0;) d[i] = (d[i] - sup[i] * d[i + 1]) / diag[i];
}

}  // namespace detail

// One Crank-Nicolson step of p_t = -b p_y + (sigma^2/2) p_yy with centered
// advection. The cell Peclet number b*dy/sigma^2 must stay <= 2 or the
// centered stencil oscillates; we refuse to step rather than pollute the
// solution. The reflecting variant (zero-gradient walls) exists for
// conservation tests only.
inline std::vector<double> fp_step(const std::vector<double>& row, double b,
                                   double sigma, double dt, double dy,
                                   CnBoundary bc = CnBoundary::absorbing) {
  const int m = static_cast<int>(row.size()) - 2;
  if (m < 1) throw DimensionMismatch("density row too short");
  if (!(sigma > 0.0)) throw ValidationError("sigma must be > 0");
  double peclet = std::abs(b) * dy / (sigma * sigma);
  if (peclet > 2.0)
    throw StabilityError("cell Peclet number " + std::to_string(peclet) +
                         " > 2; refine dy or reduce drift");

  const double adv = b / (2.0 * dy);
  const double dif = sigma * sigma / (2.0 * dy * dy);
  const double lo_c = adv + dif;   // couples to p_{j-1}
  const double mid_c = -2.0 * dif;
  const double hi_c = dif - adv;   // couples to p_{j+1}

  std::vector<double> sub(m), diag(m), sup(m), rhs(m);
  for (int j = 1; j <= m; ++j) {
    double pl = row[j - 1], pc = row[j], pr = row[j + 1];
    double lo = lo_c, mid = mid_c, hi = hi_c;
    if (bc == CnBoundary::reflecting) {
      if (j == 1) {
        mid += lo;
        lo = 0.0;
        pl = 0.0;
      }
      if (j == m) {
        mid += hi;
        hi = 0.0;
        pr = 0.0;
      }
    }
    rhs[j - 1] = pc + 0.5 * dt * (lo * pl + mid * pc + hi * pr);
    sub[j - 1] = -0.5 * dt * lo;
    diag[j - 1] = 1.0 - 0.5 * dt * mid;
    sup[j - 1] = -0.5 * dt * hi;
  }
  detail::solve_tridiag(sub, diag, sup, rhs);

  std::vector<double> out(row.size(), 0.0);
  for (int j = 1; j <= m; ++j) out[j] = rhs[j - 1];
  return out;
}

// Outflow rate through the absorbing wall at 0, per unit of surviving mass:
// -(sigma^2/2) p_y(0) / mass, with the one-sided three-point slope
// (4 p_1 - p_2) / (2 dy) (the wall value is 0). Never positive.
inline double boundary_rate(const std::vector<double>& row, double sigma, double dy) {
  double m = mass_of(row, dy);
  if (m < 1e-12) throw DegenerateMassError("surviving mass " + std::to_string(m) +
                                           " too small for a boundary rate");
  double slope = (4.0 * row[1] - row[2]) / (2.0 * dy);
  double rate = -0.5 * sigma * sigma * slope / m;
  return std::min(rate, 0.0);
}

// Joint solution record for all types. theta is surviving mass over time,
// lambda_bar its per-step log slope (left-endpoint convention, last entry
// duplicated), both indexed [type][time index].
struct DensityField {
  PdeGrid grid;
  std::vector<std::vector<std::vector<double>>> p;  // [type][time][node], optional
  std::vector<std::vector<double>> theta;
  std::vector<std::vector<double>> lambda_bar;
};

// Sweeps every type forward under its drift schedule (one drift value per
// time step). Negative undershoots are clipped to zero without renormalizing;
// theta is forced non-increasing so the log slope stays a valid rate.
inline DensityField evolve(const std::vector<std::vector<double>>& initial_rows,
                           const std::vector<std::vector<double>>& drift_schedule,
                           const PdeGrid& grid, double sigma,
                           bool store_densities = true) {
  const int n = static_cast<int>(initial_rows.size());
  if (static_cast<int>(drift_schedule.size()) != n)
    throw DimensionMismatch("drift schedule must cover every type");
  for (const auto& s : drift_schedule)
    if (static_cast<int>(s.size()) < grid.n_t)
      throw DimensionMismatch("drift schedule must cover every time step");

  DensityField field;
  field.grid = grid;
  field.p.assign(store_densities ? n : 0, {});
  field.theta.assign(n, std::vector<double>(grid.n_t + 1, 0.0));
  field.lambda_bar.assign(n, std::vector<double>(grid.n_t + 1, 0.0));

  const double dy = grid.dy();
  const double dt = grid.dt();
  parallel_for(n, [&](int x) {
    std::vector<double> row = initial_rows[x];
    if (store_densities) {
      field.p[x].reserve(grid.n_t + 1);
      field.p[x].push_back(row);
    }
    double theta = mass_of(row, dy);
    field.theta[x][0] = theta;
    for (int k = 0; k < grid.n_t; ++k) {
      row = fp_step(row, drift_schedule[x][k], sigma, dt, dy);
      for (double& v : row) v = std::max(v, 0.0);
      double m = std::min(mass_of(row, dy), theta);
      if (m < 1e-12)
        throw DegenerateMassError("type " + std::to_string(x) +
                                  " lost essentially all mass by step " +
                                  std::to_string(k + 1));
      field.lambda_bar[x][k] = std::log(m / theta) / dt;
      theta = m;
      field.theta[x][k + 1] = theta;
      if (store_densities) field.p[x].push_back(row);
    }
    field.lambda_bar[x][grid.n_t] = field.lambda_bar[x][grid.n_t - 1];
  });
  return field;
}

}  // namespace fragile_nets
