#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include "fragile_nets/config.hpp"
#include "fragile_nets/errors.hpp"
#include "fragile_nets/interaction.hpp"
#include "fragile_nets/network.hpp"
#include "fragile_nets/rng.hpp"

namespace fragile_nets {

// Outcome of one instant's death resolution. rounds counts death waves,
// including the initial barrier wave; a quiet instant has rounds == 0 and a
// zero jump.
struct CascadeResult {
  std::vector<int> removed;
  std::vector<double> jump;
  int rounds = 0;
};

// Finite-population system coupled through survival fractions. Dead
// particles keep the value that killed them; survivors absorb every loss
// increment. All randomness is keyed by (type, particle id, step), so
// storage order is irrelevant and runs are reproducible by seed alone.
class ParticleEnsemble {
 public:
  ParticleEnsemble(TypedNetwork net, InteractionFn g, double sigma,
                   std::vector<std::vector<double>> values, std::uint64_t seed)
      : net_(std::move(net)),
        g_(std::move(g)),
        sigma_(sigma),
        values_(std::move(values)),
        rng_(seed) {
    const int n = net_.size();
    if (static_cast<int>(values_.size()) != n)
      throw DimensionMismatch("one value vector per type required");
    alive_.resize(n);
    ids_.resize(n);
    alive_count_.assign(n, 0);
    total_.assign(n, 0);
    loss_.assign(n, 0.0);
    frac_start_.assign(n, 1.0);
    for (int x = 0; x < n; ++x) {
      total_[x] = static_cast<int>(values_[x].size());
      if (total_[x] == 0) throw ValidationError("type " + std::to_string(x) + " is empty");
      alive_[x].assign(total_[x], 1);
      ids_[x].resize(total_[x]);
      for (int i = 0; i < total_[x]; ++i) ids_[x][i] = i;
      alive_count_[x] = total_[x];
      frac_start_[x] = 1.0;
    }
  }

  // Fresh ensemble with initial values sampled from the config's densities.
  static ParticleEnsemble from_config(const RunConfig& cfg) {
    CounterRng rng(cfg.particles.seed);
    std::vector<std::vector<double>> values(cfg.network.size());
    for (int x = 0; x < cfg.network.size(); ++x) {
      values[x].resize(cfg.particles.n_per_type);
      for (int i = 0; i < cfg.particles.n_per_type; ++i)
        values[x][i] = cfg.initial[x].sample(rng, x, i);
    }
    return ParticleEnsemble(cfg.network, cfg.g, cfg.dynamics.sigma,
                            std::move(values), cfg.particles.seed);
  }

  const TypedNetwork& net() const { return net_; }
  int types() const { return net_.size(); }
  int population(int x) const { return total_[x]; }
  double survived_fraction(int x) const {
    return static_cast<double>(alive_count_[x]) / total_[x];
  }
  double loss(int x) const { return loss_[x]; }
  const std::vector<double>& values(int x) const { return values_[x]; }
  const std::vector<char>& alive(int x) const { return alive_[x]; }

  std::vector<double> alive_values(int x) const {
    std::vector<double> out;
    out.reserve(alive_count_[x]);
    for (int i = 0; i < total_[x]; ++i)
      if (alive_[x][i]) out.push_back(values_[x][i]);
    return out;
  }

  // Test hook: applies one permutation to the storage order of a type.
  void permute(int x, const std::vector<int>& perm) {
    std::vector<double> v(total_[x]);
    std::vector<char> a(total_[x]);
    std::vector<std::uint64_t> id(total_[x]);
    for (int i = 0; i < total_[x]; ++i) {
      v[i] = values_[x][perm[i]];
      a[i] = alive_[x][perm[i]];
      id[i] = ids_[x][perm[i]];
    }
    values_[x] = std::move(v);
    alive_[x] = std::move(a);
    ids_[x] = std::move(id);
  }

  // Marks value <= 0 particles dead without moving anybody. Returns per-type
  // counts. Used for the barrier check and by tests that stage an instant.
  std::vector<int> mark_barrier_deaths() {
    std::vector<int> removed(types(), 0);
    for (int x = 0; x < types(); ++x) {
      frac_start_[x] = survived_fraction(x);
      for (int i = 0; i < total_[x]; ++i)
        if (alive_[x][i] && values_[x][i] <= 0.0) {
          alive_[x][i] = 0;
          --alive_count_[x];
          ++removed[x];
        }
    }
    return removed;
  }

  // Iterates the loss rule from the current death set: each round recomputes
  // the would-be jump against the fractions at the start of the instant and
  // kills every survivor it pushes to or below 0. Kill thresholds always use
  // the values particles carried into the instant, so the result is the least
  // death set closed under the rule. The final jump lands on the survivors.
  CascadeResult resolve_cascade(std::vector<int> initial_removed = {}) {
    const int n = types();
    CascadeResult res;
    res.removed = initial_removed.empty() ? std::vector<int>(n, 0)
                                          : std::move(initial_removed);
    res.jump.assign(n, 0.0);
    int waves = 0;
    for (int x = 0; x < n; ++x)
      if (res.removed[x] > 0) {
        waves = 1;
        break;
      }

    std::vector<double> jump(n, 0.0);
    for (;;) {
      for (int x = 0; x < n; ++x) {
        double acc = 0.0;
        for (int y = 0; y < n; ++y) {
          double w = net_.kernel[x][y];
          if (w == 0.0) continue;
          acc += w * (g_at(y, survived_fraction(y)) - g_at(y, frac_start_[y]));
        }
        jump[x] = net_.connectivity[x] * acc;
      }
      bool any_new = false;
      for (int x = 0; x < n; ++x) {
        if (jump[x] >= 0.0) continue;
        for (int i = 0; i < total_[x]; ++i)
          if (alive_[x][i] && values_[x][i] + jump[x] <= 0.0) {
            alive_[x][i] = 0;
            --alive_count_[x];
            values_[x][i] += jump[x];
            ++res.removed[x];
            any_new = true;
          }
      }
      if (!any_new) break;
      ++waves;
    }

    for (int x = 0; x < n; ++x) {
      if (jump[x] == 0.0) continue;
      for (int i = 0; i < total_[x]; ++i)
        if (alive_[x][i]) values_[x][i] += jump[x];
    }
    for (int x = 0; x < n; ++x) {
      loss_[x] += jump[x];
      frac_start_[x] = survived_fraction(x);
    }
    res.jump = std::move(jump);
    res.rounds = waves;
    return res;
  }

  // One full step: diffuse every live particle, apply the barrier, resolve
  // the cascade.
  CascadeResult sim_step(const std::vector<double>& drift, double sigma, double dt) {
    const double root_dt = std::sqrt(dt);
    for (int x = 0; x < types(); ++x) {
      for (int i = 0; i < total_[x]; ++i) {
        if (!alive_[x][i]) continue;
        double dz = drift[x] * dt +
                    sigma * root_dt * rng_.normal(stream::diffusion, x, ids_[x][i], step_);
        double v = values_[x][i] + dz;
        if (v > 1e12 || v < -1e12) {
          v = v > 0 ? 1e12 : -1e12;
          warn_clip();
        }
        values_[x][i] = v;
      }
    }
    ++step_;
    auto removed = mark_barrier_deaths();
    return resolve_cascade(std::move(removed));
  }

 private:
  double g_at(int x, double frac) {
    if (frac <= 0.0) {
      if (g_.kind == GKind::log)
        throw TotalWipeoutError("type " + std::to_string(x) +
                                " fully wiped out under log interaction");
      return g_.value_at_zero();
    }
    return g_.eval(frac);
  }

  void warn_clip() {
    if (clip_warned_) return;
    clip_warned_ = true;
    std::fprintf(stderr, "warning: particle value clipped at 1e12\n");
  }

  TypedNetwork net_;
  InteractionFn g_;
  double sigma_;
  std::vector<std::vector<double>> values_;
  std::vector<std::vector<char>> alive_;
  std::vector<std::vector<std::uint64_t>> ids_;
  std::vector<int> alive_count_, total_;
  std::vector<double> loss_;
  std::vector<double> frac_start_;
  CounterRng rng_;
  std::uint64_t step_ = 0;
  bool clip_warned_ = false;
};

struct CascadeEvent {
  int step = 0;
  double t = 0.0;
  std::vector<int> removed;
  std::vector<double> jump;
  int rounds = 0;
};

struct SimResult {
  std::vector<double> times;                      // interval boundaries
  std::vector<std::vector<double>> theta_hat;     // [type][time]
  std::vector<std::vector<double>> loss;          // [type][time]
  std::vector<CascadeEvent> cascades;             // death-bearing steps only
  std::vector<std::vector<double>> final_values;  // survivors per type
};

// Full run over the config horizon. The drift schedule (one value per type
// per time step) defaults to the baseline drift; steps_per_interval > 1
// subdivides each step for finer first-passage resolution while keeping the
// schedule piecewise constant.
inline SimResult run_sim(const RunConfig& cfg,
                         const std::vector<std::vector<double>>& drift_schedule = {},
                         int steps_per_interval = 1) {
  const int n = cfg.network.size();
  const int n_t = cfg.grid.n_t;
  const double dt = cfg.horizon / n_t;
  const double sub_dt = dt / steps_per_interval;

  ParticleEnsemble ens = ParticleEnsemble::from_config(cfg);
  SimResult out;
  out.times.resize(n_t + 1);
  out.theta_hat.assign(n, std::vector<double>(n_t + 1, 1.0));
  out.loss.assign(n, std::vector<double>(n_t + 1, 0.0));
  for (int k = 0; k <= n_t; ++k) out.times[k] = k * dt;
  for (int x = 0; x < n; ++x) {
    out.theta_hat[x][0] = ens.survived_fraction(x);
    out.loss[x][0] = ens.loss(x);
  }

  std::vector<double> drift(n);
  int step = 0;
  for (int k = 0; k < n_t; ++k) {
    for (int x = 0; x < n; ++x)
      drift[x] = drift_schedule.empty() ? cfg.dynamics.alpha_prime[x]
                                        : drift_schedule[x][k];
    for (int s = 0; s < steps_per_interval; ++s, ++step) {
      CascadeResult res = ens.sim_step(drift, cfg.dynamics.sigma, sub_dt);
      bool any = res.rounds > 0;
      if (any) {
        CascadeEvent ev;
        ev.step = step;
        ev.t = (k + static_cast<double>(s + 1) / steps_per_interval) * dt;
        ev.removed = res.removed;
        ev.jump = res.jump;
        ev.rounds = res.rounds;
        out.cascades.push_back(std::move(ev));
      }
    }
    for (int x = 0; x < n; ++x) {
      out.theta_hat[x][k + 1] = ens.survived_fraction(x);
      out.loss[x][k + 1] = ens.loss(x);
    }
  }
  for (int x = 0; x < n; ++x) out.final_values.push_back(ens.alive_values(x));
  return out;
}

}  // namespace fragile_nets
