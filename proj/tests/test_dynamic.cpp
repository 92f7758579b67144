#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "fragile_nets/dynamic_equilibrium.hpp"

using namespace fragile_nets;
using Catch::Matchers::WithinAbs;

namespace {

// three layers of lenders feeding the productive retail end
RunConfig chain_config() {
  RunConfig cfg;
  cfg.network.types = {"retail", "regional", "central"};
  cfg.network.mu = {0.5, 0.3, 0.2};
  cfg.network.adjacency = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
  cfg.network.connectivity = {0.5, 0.5, 0.5};
  cfg.network.kernel = kernel_from_adjacency(cfg.network.adjacency);
  cfg.g = affine_kind();
  cfg.dynamics.alpha_prime = {0.2, 0.2, 0.2};
  cfg.dynamics.alpha = {1.0, 0.3, 0.1};
  cfg.dynamics.sigma = 0.7;
  cfg.dynamics.cbar = 1.0;
  cfg.horizon = 1.0;
  cfg.grid.y_max = 6.0;
  cfg.grid.n_y = 120;
  cfg.grid.n_t = 50;
  cfg.initial.assign(3, DensitySpec::gaussian(1.2, 0.2));
  cfg.validate();
  return cfg;
}

RunConfig isolated_config() {
  RunConfig cfg;
  cfg.network.types = {"a", "b"};
  cfg.network.mu = {0.5, 0.5};
  cfg.network.adjacency = {{0, 0}, {0, 0}};
  cfg.network.connectivity = {0.3, 0.3};
  cfg.network.kernel = kernel_from_adjacency(cfg.network.adjacency);
  cfg.g = affine_kind();
  cfg.dynamics.alpha_prime = {0.1, -0.4};
  cfg.dynamics.alpha = {0.2, 0.2};
  cfg.dynamics.sigma = 0.6;
  cfg.horizon = 0.5;
  cfg.grid.y_max = 5.0;
  cfg.grid.n_y = 80;
  cfg.grid.n_t = 20;
  cfg.initial.assign(2, DensitySpec::gaussian(1.5, 0.2));
  cfg.validate();
  return cfg;
}

}  // namespace

TEST_CASE("one sweep of the rate map stays near zero over a tiny horizon") {
  RunConfig cfg = isolated_config();
  cfg.horizon = 0.02;
  cfg.grid.n_t = 4;
  cfg.validate();

  std::vector<std::vector<double>> zero(2, std::vector<double>(cfg.grid.n_t + 1, 0.0));
  DensityField field;
  auto out = apply_D(zero, cfg, &field, true);
  REQUIRE(out.size() == 2);
  for (const auto& row : out) {
    REQUIRE(static_cast<int>(row.size()) == cfg.grid.n_t + 1);
    for (double v : row) {
      CHECK(v <= 0.0);
      CHECK(std::abs(v) < 1e-4);
    }
    CHECK(row[cfg.grid.n_t] == row[cfg.grid.n_t - 1]);
  }
  REQUIRE(field.p.size() == 2);
  CHECK(field.theta[0][0] > 0.999);

  auto bad = zero;
  bad[0][2] = 0.1;
  CHECK_THROWS_AS(apply_D(bad, cfg), ValidationError);
}

TEST_CASE("without lending edges the iteration fixes in two sweeps") {
  RunConfig cfg = isolated_config();
  EquilibriumPath path = picard_solve(cfg);
  CHECK(path.iterations <= 2);
  CHECK(path.residual_history.back() < cfg.tol.picard_tol);

  // the map is constant, so the result is an exact fixed point
  auto re = apply_D(path.lambda_bar, cfg);
  CHECK(re == path.lambda_bar);

  // no lending anywhere: drift is the baseline, flows vanish
  for (int k = 0; k <= cfg.grid.n_t; ++k)
    for (int x = 0; x < 2; ++x) {
      CHECK(path.drift[x][k] == cfg.dynamics.alpha_prime[x]);
      CHECK(path.cb[x][k] == 0.0);
      CHECK(path.cl[x][k] == 0.0);
    }
  // the riskier baseline drains faster
  CHECK(path.theta[1].back() < path.theta[0].back());
}

TEST_CASE("the lending chain converges with strictly decreasing residuals") {
  RunConfig cfg = chain_config();
  EquilibriumPath path = picard_solve(cfg, 200, true);

  REQUIRE(path.residual_history.size() >= 2);
  for (std::size_t i = 1; i < path.residual_history.size(); ++i)
    CHECK(path.residual_history[i] < path.residual_history[i - 1]);
  CHECK(path.residual_history.back() < cfg.tol.picard_tol);

  // converged: one more sweep moves the rates by at most the tolerance scale
  auto re = apply_D(path.lambda_bar, cfg);
  double drift_dist = detail::l2_distance(re, path.lambda_bar, cfg.network.mu,
                                          cfg.horizon / cfg.grid.n_t, cfg.grid.n_t);
  CHECK(drift_dist < 10.0 * cfg.tol.picard_tol);

  const int n_t = cfg.grid.n_t;
  for (int x = 0; x < 3; ++x) {
    REQUIRE(static_cast<int>(path.theta[x].size()) == n_t + 1);
    for (int k = 0; k <= n_t; ++k) {
      CHECK(path.lambda_bar[x][k] <= 0.0);
      CHECK(path.theta[x][k] > 0.0);
      CHECK(path.r[x][k] >= cfg.dynamics.alpha[x]);
      if (k < n_t) CHECK(path.theta[x][k + 1] <= path.theta[x][k]);
    }
  }

  // the middle layer borrows from the top and relends to the bottom
  bool middle_lends = false;
  for (int k = 0; k <= n_t; ++k)
    if (path.cl[1][k] > 1.0 && path.cb[1][k] > 0.0) middle_lends = true;
  CHECK(middle_lends);

  // per-instant optimality: drift realizes the best reachable rate
  for (int k = 0; k <= n_t; k += 7)
    for (int x = 0; x < 3; ++x) {
      double reach = -std::numeric_limits<double>::infinity();
      for (int j = 0; j < 3; ++j)
        if (cfg.network.adjacency[x][j])
          reach = std::max(reach, path.r[j][k] + path.lambda_bar[j][k]);
      double best = std::isfinite(reach) ? std::max(0.0, reach) : 0.0;
      double want = cfg.dynamics.alpha_prime[x] +
                    cfg.dynamics.cbar * std::max(0.0, best - cfg.dynamics.alpha[x]);
      CHECK_THAT(path.drift[x][k], WithinAbs(want, 1e-12));
    }

  // per-instant clearing consistency
  for (int k = 0; k <= n_t; ++k)
    for (int x = 0; x < 3; ++x) {
      double inflow = 0.0;
      for (int y = 0; y < 3; ++y)
        inflow += path.nu[k][y][x] * path.cl[y][k] * cfg.network.mu[y];
      CHECK_THAT(path.cb[x][k], WithinAbs(inflow, 1e-12));
    }
}

TEST_CASE("a starved iteration budget exhausts the window fallback") {
  RunConfig cfg = chain_config();
  CHECK_THROWS_AS(picard_solve(cfg, 1), NoConvergenceError);
}

TEST_CASE("a symmetric pair stays exactly symmetric along the path") {
  RunConfig cfg;
  cfg.network.types = {"l", "r"};
  cfg.network.mu = {0.5, 0.5};
  cfg.network.adjacency = {{0, 1}, {1, 0}};
  cfg.network.connectivity = {0.4, 0.4};
  cfg.network.kernel = kernel_from_adjacency(cfg.network.adjacency);
  cfg.g = affine_kind();
  cfg.dynamics.alpha_prime = {0.1, 0.1};
  cfg.dynamics.alpha = {0.5, 0.5};
  cfg.dynamics.sigma = 0.6;
  cfg.horizon = 0.5;
  cfg.grid.y_max = 5.0;
  cfg.grid.n_y = 80;
  cfg.grid.n_t = 20;
  cfg.initial.assign(2, DensitySpec::gaussian(1.5, 0.2));
  cfg.validate();

  EquilibriumPath path = picard_solve(cfg, 200, true);
  for (int k = 0; k <= cfg.grid.n_t; ++k) {
    CHECK(path.lambda_bar[0][k] == path.lambda_bar[1][k]);
    CHECK(path.theta[0][k] == path.theta[1][k]);
    CHECK(path.drift[0][k] == path.drift[1][k]);
    CHECK(path.nu[k][0][1] == path.nu[k][1][0]);
  }
  // equal outside options leave no rate edge to lend over
  for (int k = 0; k <= cfg.grid.n_t; ++k) CHECK(path.cl[0][k] == 0.0);

  NoCascadeReport rep = no_cascade_check(path, cfg);
  CHECK(rep.max_drop <= rep.bound);
  CHECK(static_cast<int>(rep.verdicts.size()) == cfg.grid.n_t + 1);
}

TEST_CASE("the converged chain passes the cascade check") {
  RunConfig cfg = chain_config();
  EquilibriumPath path = picard_solve(cfg, 200, true);
  NoCascadeReport rep = no_cascade_check(path, cfg);
  CHECK(rep.max_drop <= rep.bound);
  for (Verdict v : rep.verdicts) CHECK(v != Verdict::Fragile);
}

TEST_CASE("the cascade check needs stored densities") {
  RunConfig cfg = isolated_config();
  EquilibriumPath path = picard_solve(cfg);  // densities not stored
  CHECK_THROWS_AS(no_cascade_check(path, cfg), ValidationError);
}

TEST_CASE("a planted mass drop is flagged") {
  RunConfig cfg = isolated_config();
  EquilibriumPath path = picard_solve(cfg, 200, true);
  path.theta[0][5] = path.theta[0][4] - 0.1;
  CHECK_THROWS_AS(no_cascade_check(path, cfg), CascadeDetectedError);
}

TEST_CASE("a fragile instant is flagged") {
  RunConfig cfg;
  cfg.network.types = {"pool"};
  cfg.network.mu = {1.0};
  cfg.network.adjacency = {{1}};
  cfg.network.connectivity = {1.0};
  cfg.network.kernel = {{1.0}};
  cfg.g = affine_kind();
  cfg.dynamics.alpha_prime = {0.0};
  cfg.dynamics.alpha = {0.0};
  cfg.dynamics.sigma = 0.5;
  cfg.horizon = 0.1;
  cfg.grid.y_max = 2.0;
  cfg.grid.n_y = 99;
  cfg.grid.n_t = 1;
  cfg.initial = {DensitySpec::gaussian(1.0, 0.1)};
  cfg.validate();

  // a staged path: flat mass, but the instant's density piles up against the
  // barrier while the effective lending weight is strong
  EquilibriumPath path;
  path.lambda_bar = {{0.0, 0.0}};
  path.theta = {{1.0, 1.0}};
  path.cl = {{4.0, 4.0}};
  path.cb = {{0.0, 0.0}};
  path.nu = {{{1.0}}, {{1.0}}};
  path.field.grid = PdeGrid::of(cfg.grid, cfg.horizon);
  std::vector<double> packed(cfg.grid.n_y + 2, 0.0);
  for (int j = 0; j < static_cast<int>(packed.size()); ++j)
    if (path.field.grid.y(j) <= 0.5) packed[j] = 2.0;
  path.field.p = {{packed, packed}};

  CHECK_THROWS_AS(no_cascade_check(path, cfg), CascadeDetectedError);
}
