#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "fragile_nets/config.hpp"
#include "fragile_nets/errors.hpp"
#include "fragile_nets/fragility.hpp"
#include "fragile_nets/pde.hpp"
#include "fragile_nets/static_equilibrium.hpp"
#include "fragile_nets/util.hpp"

namespace fragile_nets {

// Converged joint path: default rates, surviving mass, the per-time static
// solution, and the drift that realizes it. Arrays are [type][time] with
// n_t+1 time points; nu is one allocation matrix per time point.
struct EquilibriumPath {
  std::vector<std::vector<double>> lambda_bar;
  std::vector<std::vector<double>> theta;
  std::vector<std::vector<double>> r, R, cb, cl, drift;
  std::vector<std::vector<std::vector<double>>> nu;
  int iterations = 0;
  std::vector<double> residual_history;
  DensityField field;
};

namespace detail {

// Drift schedule induced by a rate path: one static solve per time step.
inline std::vector<std::vector<double>> drift_schedule(
    const std::vector<std::vector<double>>& lambda_bar, const RunConfig& cfg) {
  const int n = cfg.network.size();
  const int n_t = cfg.grid.n_t;
  std::vector<std::vector<double>> sched(n, std::vector<double>(n_t, 0.0));
  std::vector<double> slice(n);
  for (int k = 0; k < n_t; ++k) {
    for (int x = 0; x < n; ++x) slice[x] = lambda_bar[x][k];
    StaticEquilibrium eq = static_solve(slice, cfg.network, cfg.dynamics, cfg.tol);
    for (int x = 0; x < n; ++x) sched[x][k] = eq.drift[x];
  }
  return sched;
}

inline double l2_distance(const std::vector<std::vector<double>>& a,
                          const std::vector<std::vector<double>>& b,
                          const std::vector<double>& mu, double dt, int upto) {
  double acc = 0.0;
  for (std::size_t x = 0; x < a.size(); ++x)
    for (int k = 0; k < upto; ++k) {
      double d = a[x][k] - b[x][k];
      acc += mu[x] * d * d * dt;
    }
  return std::sqrt(acc);
}

}  // namespace detail

// One sweep of the fixed-point map: solve the static game at each time step
// under the given rates, evolve the densities with the resulting drift, and
// read the realized rates back off the boundary flux.
inline std::vector<std::vector<double>> apply_D(
    const std::vector<std::vector<double>>& lambda_bar, const RunConfig& cfg,
    DensityField* field_out = nullptr, bool store_densities = false) {
  for (const auto& row : lambda_bar)
    for (double v : row)
      if (!(v <= cfg.tol.frag_tol))
        throw ValidationError("rates must be nonpositive up to tolerance");

  auto sched = detail::drift_schedule(lambda_bar, cfg);
  PdeGrid grid = PdeGrid::of(cfg.grid, cfg.horizon);
  std::vector<std::vector<double>> init(cfg.network.size());
  for (int x = 0; x < cfg.network.size(); ++x)
    init[x] = init_density(cfg.initial[x], grid);
  DensityField field = evolve(init, sched, grid, cfg.dynamics.sigma, store_densities);
  auto out = field.lambda_bar;
  if (field_out) *field_out = std::move(field);
  return out;
}

// Picard iteration to the fixed point of the rate map, starting from the
// no-default guess. If the full-horizon iteration stalls, falls back to
// marching a window across [0, T]: converge the rates on the window, freeze,
// extend; the window halves on repeated failure.
inline EquilibriumPath picard_solve(const RunConfig& cfg, int max_iter = 200,
                                    bool store_densities = false) {
  const int n = cfg.network.size();
  const int n_t = cfg.grid.n_t;
  const double dt = cfg.horizon / n_t;

  std::vector<double> history;
  int total_iters = 0;

  auto attempt = [&](int window, std::vector<std::vector<double>>& lam) -> bool {
    history.clear();
    lam.assign(n, std::vector<double>(n_t + 1, 0.0));
    int frozen = 0;
    double prev_res = inf_double();
    int iters_this_attempt = 0;
    while (frozen < n_t) {
      int upto = std::min(frozen + window, n_t);
      bool window_done = false;
      while (iters_this_attempt < max_iter) {
        auto next = apply_D(lam, cfg);
        ++iters_this_attempt;
        ++total_iters;
        double res = detail::l2_distance(next, lam, cfg.network.mu, dt, upto);
        history.push_back(res);
        bool damp = res > prev_res;
        prev_res = res;
        for (int x = 0; x < n; ++x)
          for (int k = frozen; k <= n_t; ++k)
            lam[x][k] = damp ? 0.5 * (lam[x][k] + next[x][k]) : next[x][k];
        if (res < cfg.tol.picard_tol) {
          window_done = true;
          break;
        }
      }
      if (!window_done) return false;
      frozen = upto;
      prev_res = inf_double();
    }
    return true;
  };

  std::vector<std::vector<double>> lam;
  bool ok = attempt(n_t, lam);
  for (int w = n_t / 2; !ok && w >= 1; w /= 2) ok = attempt(w, lam);
  if (!ok)
    throw NoConvergenceError("fixed-point iteration failed after " +
                             std::to_string(total_iters) + " sweeps, last residual " +
                             fmt12(history.empty() ? 0.0 : history.back()));

  EquilibriumPath path;
  path.lambda_bar = lam;
  path.iterations = total_iters;
  path.residual_history = std::move(history);

  auto sched = detail::drift_schedule(lam, cfg);
  PdeGrid grid = PdeGrid::of(cfg.grid, cfg.horizon);
  std::vector<std::vector<double>> init(n);
  for (int x = 0; x < n; ++x) init[x] = init_density(cfg.initial[x], grid);
  path.field = evolve(init, sched, grid, cfg.dynamics.sigma, store_densities);
  path.theta = path.field.theta;

  path.r.assign(n, std::vector<double>(n_t + 1, 0.0));
  path.R.assign(n, std::vector<double>(n_t + 1, 0.0));
  path.cb.assign(n, std::vector<double>(n_t + 1, 0.0));
  path.cl.assign(n, std::vector<double>(n_t + 1, 0.0));
  path.drift.assign(n, std::vector<double>(n_t + 1, 0.0));
  path.nu.resize(n_t + 1);
  std::vector<double> slice(n);
  for (int k = 0; k <= n_t; ++k) {
    for (int x = 0; x < n; ++x) slice[x] = lam[x][k];
    StaticEquilibrium eq = static_solve(slice, cfg.network, cfg.dynamics, cfg.tol);
    for (int x = 0; x < n; ++x) {
      path.r[x][k] = eq.r[x];
      path.R[x][k] = eq.R[x];
      path.cb[x][k] = eq.cb[x];
      path.cl[x][k] = eq.cl[x];
      path.drift[x][k] = eq.drift[x];
    }
    path.nu[k] = eq.nu;
  }
  return path;
}

struct NoCascadeReport {
  double max_drop = 0.0;
  double bound = 0.0;
  std::vector<Verdict> verdicts;  // one per time point
};

// Checks that the converged path stays cascade-free: every per-step loss of
// surviving mass is within the rate bound, and the state at every time point
// classifies as not fragile (or inconclusive) under the effective lending
// network of that instant. Throws on the first violation.
inline NoCascadeReport no_cascade_check(const EquilibriumPath& path, const RunConfig& cfg) {
  const int n = cfg.network.size();
  const int n_t = cfg.grid.n_t;
  const double dt = cfg.horizon / n_t;

  double max_rate = 0.0;
  for (const auto& row : path.lambda_bar)
    for (double v : row) max_rate = std::max(max_rate, std::fabs(v));
  const double c_jump = 1.5 * max_rate;

  NoCascadeReport rep;
  rep.bound = c_jump * dt + 1e-12;
  for (int x = 0; x < n; ++x)
    for (int k = 0; k < n_t; ++k) {
      double drop = path.theta[x][k] - path.theta[x][k + 1];
      rep.max_drop = std::max(rep.max_drop, drop);
      if (drop > rep.bound)
        throw CascadeDetectedError("mass drop " + fmt12(drop) + " at t=" +
                                   fmt12(k * dt) + " type " + cfg.network.types[x] +
                                   " exceeds bound " + fmt12(rep.bound));
    }

  if (path.field.p.empty())
    throw ValidationError("cascade check needs stored densities");

  const double dy = path.field.grid.dy();
  const double y_max = path.field.grid.y_max;
  std::vector<double> z_scan;
  for (double z = std::max(dy, y_max / 1000.0); z <= y_max / 2.0; z *= 1.25)
    z_scan.push_back(z);

  for (int k = 0; k <= n_t; ++k) {
    TypedNetwork eff;
    eff.types = cfg.network.types;
    eff.mu = cfg.network.mu;
    eff.adjacency.assign(n, std::vector<int>(n, 1));
    eff.connectivity.resize(n);
    eff.kernel.assign(n, std::vector<double>(n, 0.0));
    for (int x = 0; x < n; ++x) {
      eff.connectivity[x] = path.cl[x][k];
      double row_sum = 0.0;
      for (int y = 0; y < n; ++y) {
        eff.kernel[x][y] = path.nu[k][x][y] * cfg.network.mu[y];
        row_sum += eff.kernel[x][y];
      }
      if (row_sum <= 0.0)
        for (int y = 0; y < n; ++y) eff.kernel[x][y] = 1.0 / n;
    }

    FragilityInput in;
    in.net = std::move(eff);
    in.g = cfg.g;
    in.z_scan = z_scan;
    in.marginals.reserve(n);
    for (int x = 0; x < n; ++x)
      in.marginals.push_back(Marginal::from_grid_row(path.field.p[x][k], dy));
    FragilityReport fr = classify(in, cfg.tol.frag_tol);
    rep.verdicts.push_back(fr.verdict);
    if (fr.verdict == Verdict::Fragile)
      throw CascadeDetectedError("state classifies fragile at t=" + fmt12(k * dt));
  }
  return rep;
}

}  // namespace fragile_nets
