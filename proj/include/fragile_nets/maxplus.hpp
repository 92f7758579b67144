#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "fragile_nets/errors.hpp"

namespace fragile_nets {

// Max-plus semiring: "plus" is max with neutral element -inf, "times" is
// ordinary + with neutral element 0. -inf is the IEEE value, kept exact and
// absorbing; no large-negative sentinel floats anywhere.
inline constexpr double mp_zero = -std::numeric_limits<double>::infinity();

inline bool mp_is_zero(double v) { return std::isinf(v) && v < 0.0; }

inline double mp_add(double a, double b) { return a > b ? a : b; }

inline double mp_mul(double a, double b) {
  if (mp_is_zero(a) || mp_is_zero(b)) return mp_zero;
  return a + b;
}

struct MaxPlusMatrix {
  int n = 0;
  std::vector<double> a;  // row-major

  MaxPlusMatrix() = default;
  explicit MaxPlusMatrix(int size) : n(size), a(size * size, mp_zero) {}

  double& at(int i, int j) { return a[i * n + j]; }
  double at(int i, int j) const { return a[i * n + j]; }

  static MaxPlusMatrix identity(int size) {
    MaxPlusMatrix m(size);
    for (int i = 0; i < size; ++i) m.at(i, i) = 0.0;
    return m;
  }
};

inline MaxPlusMatrix mp_matmul(const MaxPlusMatrix& A, const MaxPlusMatrix& B) {
  if (A.n != B.n) throw DimensionMismatch("max-plus product of unequal sizes");
  MaxPlusMatrix C(A.n);
  for (int i = 0; i < A.n; ++i)
    for (int k = 0; k < A.n; ++k) {
      double aik = A.at(i, k);
      if (mp_is_zero(aik)) continue;
      for (int j = 0; j < A.n; ++j)
        C.at(i, j) = mp_add(C.at(i, j), mp_mul(aik, B.at(k, j)));
    }
  return C;
}

inline std::vector<double> mp_matvec(const MaxPlusMatrix& A,
                                     const std::vector<double>& v) {
  if (static_cast<int>(v.size()) != A.n)
    throw DimensionMismatch("max-plus matrix/vector size mismatch");
  std::vector<double> out(A.n, mp_zero);
  for (int i = 0; i < A.n; ++i)
    for (int j = 0; j < A.n; ++j)
      out[i] = mp_add(out[i], mp_mul(A.at(i, j), v[j]));
  return out;
}

inline MaxPlusMatrix mp_elementwise_max(const MaxPlusMatrix& A,
                                        const MaxPlusMatrix& B) {
  MaxPlusMatrix C(A.n);
  for (int i = 0; i < A.n * A.n; ++i) C.a[i] = mp_add(A.a[i], B.a[i]);
  return C;
}

// Kleene star I (+) A (+) A^2 (+) ... (+) A^(n-1), computed by Floyd-Warshall
// closure. Requires every finite entry <= 0 (up to pos_tol slack), which caps
// cycle weights at 0 and makes paths longer than n-1 edges redundant.
inline MaxPlusMatrix kleene_star(const MaxPlusMatrix& A, double pos_tol = 1e-8) {
  for (int i = 0; i < A.n * A.n; ++i)
    if (!mp_is_zero(A.a[i]) && A.a[i] > pos_tol)
      throw PositiveEntryError("kleene star needs non-positive entries, found " +
                               std::to_string(A.a[i]));
  MaxPlusMatrix R = A;
  for (int k = 0; k < A.n; ++k)
    for (int i = 0; i < A.n; ++i) {
      double rik = R.at(i, k);
      if (mp_is_zero(rik)) continue;
      for (int j = 0; j < A.n; ++j)
        R.at(i, j) = mp_add(R.at(i, j), mp_mul(rik, R.at(k, j)));
    }
  for (int i = 0; i < A.n; ++i) R.at(i, i) = mp_add(R.at(i, i), 0.0);
  return R;
}

// Smallest r with r = A (*) r (+) alpha, namely r = A* (*) alpha.
// alpha must be finite and entrywise >= 0.
inline std::vector<double> min_solution(const MaxPlusMatrix& A,
                                        const std::vector<double>& alpha,
                                        double pos_tol = 1e-8) {
  for (double v : alpha)
    if (!std::isfinite(v) || v < 0.0)
      throw ValidationError("min_solution needs finite alpha >= 0");
  return mp_matvec(kleene_star(A, pos_tol), alpha);
}

// The fixed point is unique exactly when no zero-weight structure survives:
// every finite entry strictly below -tol.
inline bool is_unique_solution(const MaxPlusMatrix& A, double tol = 1e-8) {
  for (int i = 0; i < A.n * A.n; ++i)
    if (!mp_is_zero(A.a[i]) && A.a[i] >= -tol) return false;
  return true;
}

}  // namespace fragile_nets
