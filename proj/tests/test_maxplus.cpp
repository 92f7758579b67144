#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "fragile_nets/maxplus.hpp"
#include "support/oracles.hpp"

using namespace fragile_nets;

namespace {

// random matrix of nonpositive weights; entries are exact dyadics so every
// path sum is exact and algebraic identities hold bitwise
MaxPlusMatrix random_dyadic(std::mt19937_64& rng, int n, double density) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  MaxPlusMatrix m(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (u(rng) < density) m.at(i, j) = oracle::dyadic(rng, -4.0, -0.015625);
  return m;
}

std::vector<std::vector<double>> to_rows(const MaxPlusMatrix& m) {
  std::vector<std::vector<double>> rows(m.n, std::vector<double>(m.n));
  for (int i = 0; i < m.n; ++i)
    for (int j = 0; j < m.n; ++j) rows[i][j] = m.at(i, j);
  return rows;
}

}  // namespace

TEST_CASE("semiring identities hold bitwise on dyadic draws") {
  std::mt19937_64 rng(31337);
  for (int rep = 0; rep < 50; ++rep) {
    int n = 2 + static_cast<int>(rng() % 4);
    MaxPlusMatrix A = random_dyadic(rng, n, 0.7);
    MaxPlusMatrix B = random_dyadic(rng, n, 0.7);
    MaxPlusMatrix C = random_dyadic(rng, n, 0.7);
    MaxPlusMatrix I = MaxPlusMatrix::identity(n);

    CHECK(mp_matmul(mp_matmul(A, B), C).a == mp_matmul(A, mp_matmul(B, C)).a);
    CHECK(mp_matmul(A, I).a == A.a);
    CHECK(mp_matmul(I, A).a == A.a);
    CHECK(mp_matmul(A, mp_elementwise_max(B, C)).a ==
          mp_elementwise_max(mp_matmul(A, B), mp_matmul(A, C)).a);
  }
}

TEST_CASE("closure equals the explicit power sum") {
  std::mt19937_64 rng(99);
  for (int rep = 0; rep < 60; ++rep) {
    int n = 1 + static_cast<int>(rng() % 5);
    MaxPlusMatrix A = random_dyadic(rng, n, 0.6);
    MaxPlusMatrix star = kleene_star(A);
    auto expect = oracle::maxplus_closure_powersum(to_rows(A));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) CHECK(star.at(i, j) == expect[i][j]);
  }
}

TEST_CASE("closure on continuous draws matches within rounding") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> w(-4.0, -0.01);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 30; ++rep) {
    int n = 2 + static_cast<int>(rng() % 4);
    MaxPlusMatrix A(n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (u(rng) < 0.6) A.at(i, j) = w(rng);
    MaxPlusMatrix star = kleene_star(A);
    auto expect = oracle::maxplus_closure_powersum(to_rows(A));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        if (mp_is_zero(star.at(i, j)))
          CHECK(mp_is_zero(expect[i][j]));
        else
          CHECK(star.at(i, j) == Catch::Approx(expect[i][j]).margin(1e-12));
      }
  }
}

TEST_CASE("minimal solution agrees with fixed-point iteration from below") {
  std::mt19937_64 rng(2024);
  for (int rep = 0; rep < 60; ++rep) {
    int n = 1 + static_cast<int>(rng() % 5);
    MaxPlusMatrix A = random_dyadic(rng, n, 0.6);
    std::vector<double> alpha(n);
    for (auto& v : alpha) v = oracle::dyadic(rng, 0.0, 3.0);
    auto r = min_solution(A, alpha);
    auto expect = oracle::maxplus_min_fixpoint(to_rows(A), alpha);
    CHECK(r == expect);

    // r solves r = A (x) r (+) alpha exactly
    auto ar = mp_matvec(A, r);
    for (int i = 0; i < n; ++i) CHECK(r[i] == std::max(ar[i], alpha[i]));
  }
}

TEST_CASE("hand-worked products and closures") {
  MaxPlusMatrix A(2);
  A.at(0, 1) = -1.0;
  A.at(1, 0) = -2.0;
  MaxPlusMatrix A2 = mp_matmul(A, A);
  CHECK(A2.at(0, 0) == -3.0);
  CHECK(A2.at(1, 1) == -3.0);
  CHECK(mp_is_zero(A2.at(0, 1)));
  CHECK(mp_is_zero(A2.at(1, 0)));

  MaxPlusMatrix B(2);
  B.at(0, 1) = 0.0;
  MaxPlusMatrix Bs = kleene_star(B);
  CHECK(Bs.at(0, 0) == 0.0);
  CHECK(Bs.at(0, 1) == 0.0);
  CHECK(Bs.at(1, 1) == 0.0);
  CHECK(mp_is_zero(Bs.at(1, 0)));
}

TEST_CASE("two lenders quoting each other settle at the known rates") {
  MaxPlusMatrix A(2);
  A.at(0, 1) = -0.5;
  A.at(1, 0) = -0.5;
  auto r = min_solution(A, {2.0, 1.0});
  CHECK(r[0] == 2.0);
  CHECK(r[1] == 1.5);
  CHECK(is_unique_solution(A));
}

TEST_CASE("positive cycle weight is rejected") {
  MaxPlusMatrix A(2);
  A.at(0, 1) = 0.5;
  A.at(1, 0) = -0.2;
  CHECK_THROWS_AS(kleene_star(A), PositiveEntryError);
  CHECK_THROWS_AS(min_solution(A, {0.0, 0.0}), PositiveEntryError);
}

TEST_CASE("zero-weight structure defeats uniqueness") {
  MaxPlusMatrix A(2);
  A.at(0, 1) = 0.0;
  CHECK_FALSE(is_unique_solution(A));
  MaxPlusMatrix B(2);
  B.at(0, 1) = -1e-12;
  CHECK_FALSE(is_unique_solution(B));  // within tolerance of zero
  MaxPlusMatrix C(2);
  C.at(0, 1) = -0.5;
  CHECK(is_unique_solution(C));
}

TEST_CASE("validation of the rate source vector") {
  MaxPlusMatrix A(2);
  CHECK_THROWS_AS(min_solution(A, {-1.0, 0.0}), ValidationError);
  CHECK_THROWS_AS(min_solution(A, {0.0}), DimensionMismatch);
}
