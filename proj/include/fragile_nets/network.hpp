#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "fragile_nets/errors.hpp"

namespace fragile_nets {

// Finite type space with masses, an allowed-exposure relation, connectivity
// strengths and an exposure kernel. kernel rows are probability vectors over
// types (or identically zero for an isolated type), and may only place weight
// where adjacency allows it.
struct TypedNetwork {
  std::vector<std::string> types;
  std::vector<double> mu;
  std::vector<std::vector<int>> adjacency;     // 0/1
  std::vector<double> connectivity;            // C(x) >= 0
  std::vector<std::vector<double>> kernel;     // row-stochastic or zero rows

  int size() const { return static_cast<int>(types.size()); }

  // Renormalizes kernel rows whose sum is within row_slack of 1, then checks
  // every structural invariant. Throws ValidationError/DimensionMismatch.
  void validate(double mass_tol = 1e-12, double row_slack = 1e-9) {
    const int n = size();
    if (n == 0) throw ValidationError("network has no types");
    if (static_cast<int>(mu.size()) != n || static_cast<int>(connectivity.size()) != n ||
        static_cast<int>(adjacency.size()) != n || static_cast<int>(kernel.size()) != n)
      throw DimensionMismatch("network field sizes disagree with type count");
    double mass = 0.0;
    for (double m : mu) {
      if (!(m > 0.0)) throw ValidationError("type masses must be strictly positive");
      mass += m;
    }
    if (std::abs(mass - 1.0) > mass_tol)
      throw ValidationError("type masses must sum to 1, got " + std::to_string(mass));
    for (double c : connectivity)
      if (!(c >= 0.0) || !std::isfinite(c))
        throw ValidationError("connectivity entries must be finite and >= 0");
    for (int i = 0; i < n; ++i) {
      if (static_cast<int>(adjacency[i].size()) != n ||
          static_cast<int>(kernel[i].size()) != n)
        throw DimensionMismatch("adjacency/kernel rows must be square");
      for (int j = 0; j < n; ++j)
        if (adjacency[i][j] != 0 && adjacency[i][j] != 1)
          throw ValidationError("adjacency entries must be 0 or 1");
      double row = 0.0;
      for (int j = 0; j < n; ++j) {
        if (kernel[i][j] < 0.0) throw ValidationError("kernel entries must be >= 0");
        row += kernel[i][j];
      }
      if (row != 0.0) {
        if (std::abs(row - 1.0) > row_slack)
          throw ValidationError("kernel row " + std::to_string(i) +
                                " sums to " + std::to_string(row));
        for (int j = 0; j < n; ++j) kernel[i][j] /= row;
      }
      for (int j = 0; j < n; ++j)
        if (kernel[i][j] > 0.0 && adjacency[i][j] == 0)
          throw ValidationError("kernel places weight outside adjacency at (" +
                                std::to_string(i) + "," + std::to_string(j) + ")");
    }
  }
};

// Uniform helper used by tests and topology comparisons: every row 1/n.
inline std::vector<std::vector<double>> uniform_kernel(int n) {
  return std::vector<std::vector<double>>(n, std::vector<double>(n, 1.0 / n));
}

// Each type exposed only to itself.
inline std::vector<std::vector<double>> clustered_kernel(int n) {
  std::vector<std::vector<double>> k(n, std::vector<double>(n, 0.0));
  for (int i = 0; i < n; ++i) k[i][i] = 1.0;
  return k;
}

inline std::vector<std::vector<int>> complete_adjacency(int n) {
  return std::vector<std::vector<int>>(n, std::vector<int>(n, 1));
}

// Uniform over each row's allowed targets; rows with no targets stay zero.
inline std::vector<std::vector<double>> kernel_from_adjacency(
    const std::vector<std::vector<int>>& adjacency) {
  const int n = static_cast<int>(adjacency.size());
  std::vector<std::vector<double>> k(n, std::vector<double>(n, 0.0));
  for (int i = 0; i < n; ++i) {
    int deg = 0;
    for (int j = 0; j < n; ++j) deg += adjacency[i][j] ? 1 : 0;
    if (deg == 0) continue;
    for (int j = 0; j < n; ++j)
      if (adjacency[i][j]) k[i][j] = 1.0 / deg;
  }
  return k;
}

}  // namespace fragile_nets
