#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "fragile_nets/config.hpp"
#include "fragile_nets/errors.hpp"
#include "fragile_nets/maxplus.hpp"
#include "fragile_nets/network.hpp"
#include "fragile_nets/scc.hpp"

namespace fragile_nets {

// One instant of the lending game, solved for a fixed boundary-rate vector.
// r is the equilibrium growth rate demanded by each type, R the best rate
// reachable through the network, cb/cl borrowed and lent amounts, nu the
// per-mass lending weights (each lender's row integrates to 1 against mu).
struct StaticEquilibrium {
  std::vector<double> r;
  std::vector<double> R;
  std::vector<double> cb;
  std::vector<double> cl;
  std::vector<double> drift;
  std::vector<std::vector<double>> nu;
  int reroutes = 0;  // cycle-elimination steps taken
};

// Lending-rate matrix: A(i,j) = lambda_bar(j) where i may lend to j.
inline MaxPlusMatrix build_A(const std::vector<double>& lambda_bar,
                             const TypedNetwork& net, double frag_tol = 1e-8) {
  const int n = net.size();
  if (static_cast<int>(lambda_bar.size()) != n)
    throw DimensionMismatch("lambda_bar size must match type count");
  for (double v : lambda_bar) {
    if (!std::isfinite(v)) throw ValidationError("lambda_bar must be finite");
    if (v > frag_tol)
      throw ValidationError("lambda_bar entries must be <= 0, got " + std::to_string(v));
  }
  MaxPlusMatrix A(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (net.adjacency[i][j]) A.at(i, j) = lambda_bar[j];
  return A;
}

// Minimal fixed point r = alpha v (A (*) r), and the reachable rate
// R = (A (*) r v 0). R never exceeds max(alpha).
inline std::pair<std::vector<double>, std::vector<double>> solve_rates(
    const std::vector<double>& lambda_bar, const std::vector<double>& alpha,
    const TypedNetwork& net, double frag_tol = 1e-8) {
  MaxPlusMatrix A = build_A(lambda_bar, net, frag_tol);
  std::vector<double> r = min_solution(A, alpha, frag_tol);
  std::vector<double> reach = mp_matvec(A, r);
  std::vector<double> R(net.size());
  for (int i = 0; i < net.size(); ++i) R[i] = std::max(0.0, reach[i]);
  return {r, R};
}

namespace detail {

// Argmax target set of node i: adjacency neighbors within eq_tol of the best
// reachable r(j) + lambda(j).
inline std::vector<int> best_targets(int i, const std::vector<double>& r,
                                     const std::vector<double>& lambda_bar,
                                     const TypedNetwork& net, double eq_tol) {
  double best = mp_zero;
  for (int j = 0; j < net.size(); ++j)
    if (net.adjacency[i][j]) best = std::max(best, r[j] + lambda_bar[j]);
  std::vector<int> out;
  if (mp_is_zero(best)) return out;
  for (int j = 0; j < net.size(); ++j)
    if (net.adjacency[i][j] && r[j] + lambda_bar[j] >= best - eq_tol) out.push_back(j);
  return out;
}

inline void set_uniform_row(std::vector<double>& row, const std::vector<int>& support,
                            const std::vector<double>& mu) {
  std::fill(row.begin(), row.end(), 0.0);
  double mass = 0.0;
  for (int j : support) mass += mu[j];
  for (int j : support) row[j] = 1.0 / mass;
}

}  // namespace detail

// Starting flows send each lender's unit uniformly over its argmax targets.
// Any directed cycle of lenders is then broken by rerouting an exit node --
// a member whose best target outside the cycle achieves the common cycle
// rate -- onto its out-of-cycle argmax targets. Edges only ever shrink, so
// this terminates; a cycle with no exit is an input inconsistency.
inline std::vector<std::vector<double>> eliminate_cycles(
    const std::vector<double>& r, const std::vector<double>& lambda_bar,
    const std::vector<double>& alpha, const TypedNetwork& net,
    double eq_tol = 1e-9, int* reroutes_out = nullptr) {
  const int n = net.size();
  std::vector<std::vector<double>> nu(n, std::vector<double>(n, 0.0));
  for (int i = 0; i < n; ++i) {
    if (r[i] <= alpha[i] + eq_tol) continue;
    auto targets = detail::best_targets(i, r, lambda_bar, net, eq_tol);
    if (targets.empty())
      throw NumericalError("lender " + std::to_string(i) + " has no targets");
    detail::set_uniform_row(nu[i], targets, net.mu);
  }

  int reroutes = 0;
  for (int guard = 0; guard <= n * n; ++guard) {
    std::vector<std::vector<int>> edges(n, std::vector<int>(n, 0));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) edges[i][j] = nu[i][j] > 0.0 ? 1 : 0;
    SccFinder scc(edges);

    const std::vector<int>* cycle = nullptr;
    for (const auto& comp : scc.components())
      if (component_has_cycle(comp, edges))
        if (!cycle || comp.front() < cycle->front()) cycle = &comp;
    if (!cycle) {
      if (reroutes_out) *reroutes_out = reroutes;
      return nu;
    }

    std::vector<char> in_cycle(n, 0);
    double cycle_rate = mp_zero;
    for (int v : *cycle) {
      in_cycle[v] = 1;
      cycle_rate = std::max(cycle_rate, r[v]);
    }

    int exit_node = -1;
    for (int v : *cycle) {
      double outside_best = mp_zero;
      for (int j = 0; j < n; ++j)
        if (net.adjacency[v][j] && !in_cycle[j])
          outside_best = std::max(outside_best, r[j] + lambda_bar[j]);
      if (!mp_is_zero(outside_best) && outside_best >= cycle_rate - eq_tol) {
        exit_node = v;
        break;
      }
    }
    if (exit_node < 0) {
      std::string members;
      for (int v : *cycle) members += (members.empty() ? "" : ",") + std::to_string(v);
      throw NoExitNodeError("lending cycle {" + members + "} has no exit node");
    }

    auto targets = detail::best_targets(exit_node, r, lambda_bar, net, eq_tol);
    std::vector<int> outside;
    for (int j : targets)
      if (!in_cycle[j]) outside.push_back(j);
    if (outside.empty())
      throw NoExitNodeError("exit node " + std::to_string(exit_node) +
                            " has no out-of-cycle targets");
    detail::set_uniform_row(nu[exit_node], outside, net.mu);
    ++reroutes;
  }
  throw NumericalError("cycle elimination failed to terminate");
}

struct FlowAllocation {
  std::vector<std::vector<double>> nu;
  std::vector<double> cb;
  std::vector<double> cl;
  std::vector<std::vector<int>> layers;
};

// Topological layering of the acyclic flow graph. Layer 0 holds types with no
// outgoing flow; layer k types lend exactly into layer k-1 after restriction.
// Lent amounts are cleared down the layers: each lender passes its budget plus
// everything borrowed to it.
inline FlowAllocation allocate_flows(const std::vector<std::vector<double>>& nu_m,
                                     const std::vector<double>& R,
                                     const std::vector<double>& alpha,
                                     const TypedNetwork& net, double cbar,
                                     double eq_tol = 1e-9) {
  const int n = net.size();
  std::vector<char> lending(n, 0);
  for (int i = 0; i < n; ++i) lending[i] = R[i] > alpha[i] + eq_tol ? 1 : 0;

  std::vector<int> layer_of(n, -1);
  std::vector<std::vector<int>> layers;
  {
    std::vector<int> base;
    for (int i = 0; i < n; ++i) {
      bool none = true;
      for (int j = 0; j < n; ++j)
        if (nu_m[i][j] > 0.0) none = false;
      if (none) {
        layer_of[i] = 0;
        base.push_back(i);
      }
    }
    layers.push_back(std::move(base));
    int covered = static_cast<int>(layers[0].size());
    while (covered < n) {
      std::vector<int> next;
      for (int i = 0; i < n; ++i) {
        if (layer_of[i] >= 0) continue;
        for (int j = 0; j < n; ++j)
          if (nu_m[i][j] > 0.0 && layer_of[j] >= 0) {
            next.push_back(i);
            break;
          }
      }
      if (next.empty())
        throw CycleDetectedError("flow graph is not acyclic: " +
                                 std::to_string(n - covered) + " types unreachable");
      int k = static_cast<int>(layers.size());
      for (int i : next) layer_of[i] = k;
      covered += static_cast<int>(next.size());
      layers.push_back(std::move(next));
    }
  }

  FlowAllocation out;
  out.layers = layers;
  out.nu.assign(n, std::vector<double>(n, 0.0));
  for (int k = 1; k < static_cast<int>(layers.size()); ++k)
    for (int i : layers[k]) {
      std::vector<int> support;
      for (int j = 0; j < n; ++j)
        if (nu_m[i][j] > 0.0 && layer_of[j] < k) support.push_back(j);
      detail::set_uniform_row(out.nu[i], support, net.mu);
    }

  out.cb.assign(n, 0.0);
  out.cl.assign(n, 0.0);
  const int p = static_cast<int>(layers.size()) - 1;
  for (int step = 0; step <= p; ++step) {
    std::fill(out.cb.begin(), out.cb.end(), 0.0);
    std::fill(out.cl.begin(), out.cl.end(), 0.0);
    for (int k = 0; k <= step; ++k)
      for (int i : layers[k]) out.cl[i] = lending[i] ? cbar : 0.0;
    for (int k = step; k >= 1; --k)
      for (int i : layers[k - 1]) {
        double inflow = 0.0;
        for (int y : layers[k]) inflow += out.nu[y][i] * out.cl[y] * net.mu[y];
        out.cb[i] = inflow;
        out.cl[i] = lending[i] ? (cbar + out.cb[i]) : 0.0;
      }
  }
  (void)eq_tol;
  return out;
}

// Full static solve for one boundary-rate vector. The realized drift is
// alpha_prime + cbar * (R - alpha)^+, the optimal value of the lending
// problem at these rates.
inline StaticEquilibrium static_solve(const std::vector<double>& lambda_bar,
                                      const TypedNetwork& net,
                                      const DriftVolSpec& dyn,
                                      const Tolerances& tol = {}) {
  auto [r, R] = solve_rates(lambda_bar, dyn.alpha, net, tol.frag_tol);
  StaticEquilibrium eq;
  auto nu_m = eliminate_cycles(r, lambda_bar, dyn.alpha, net, tol.eq_tol, &eq.reroutes);
  auto flows = allocate_flows(nu_m, R, dyn.alpha, net, dyn.cbar, tol.eq_tol);
  eq.r = std::move(r);
  eq.R = std::move(R);
  eq.nu = std::move(flows.nu);
  eq.cb = std::move(flows.cb);
  eq.cl = std::move(flows.cl);
  eq.drift.resize(net.size());
  for (int i = 0; i < net.size(); ++i)
    eq.drift[i] = dyn.alpha_prime[i] + dyn.cbar * std::max(0.0, eq.R[i] - dyn.alpha[i]);
  return eq;
}

}  // namespace fragile_nets
