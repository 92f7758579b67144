#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fragile_nets/density.hpp"
#include "fragile_nets/errors.hpp"
#include "fragile_nets/interaction.hpp"
#include "fragile_nets/network.hpp"
#include "fragile_nets/util.hpp"

namespace fragile_nets {

struct DriftVolSpec {
  std::vector<double> alpha_prime;  // baseline drift per type
  std::vector<double> alpha;        // outside-option rate per type, >= 0
  double sigma = 1.0;
  double cbar = 1.0;                // per-lender budget
  double gamma = 0.0;               // recorded risk-aversion scale (unused in drifts)
};

struct GridSpec {
  double y_max = 0.0;  // 0 = derive a default from the config
  int n_y = 200;
  int n_t = 100;
};

struct ParticleSpec {
  int n_per_type = 10000;
  std::uint64_t seed = 1;
};

struct Tolerances {
  double picard_tol = 1e-6;
  double eq_tol = 1e-9;
  double frag_tol = 1e-8;
};

struct RunConfig {
  TypedNetwork network;
  InteractionFn g;
  DriftVolSpec dynamics;
  double horizon = 1.0;
  GridSpec grid;
  ParticleSpec particles;
  Tolerances tol;
  std::vector<DensitySpec> initial;  // one spec per type

  // Coarse bound on any equilibrium drift magnitude.
  double drift_bound() const {
    double ap = 0.0, a = 0.0;
    for (double v : dynamics.alpha_prime) ap = std::max(ap, std::abs(v));
    for (double v : dynamics.alpha) a = std::max(a, v);
    return ap + dynamics.cbar * a;
  }

  void validate() {
    network.validate();
    g.validate();
    const int n = network.size();
    if (static_cast<int>(dynamics.alpha_prime.size()) != n ||
        static_cast<int>(dynamics.alpha.size()) != n)
      throw DimensionMismatch("dynamics vectors must have one entry per type");
    for (double v : dynamics.alpha)
      if (!(v >= 0.0) || !std::isfinite(v))
        throw ValidationError("alpha entries must be finite and >= 0");
    for (double v : dynamics.alpha_prime)
      if (!std::isfinite(v)) throw ValidationError("alpha_prime entries must be finite");
    if (!(dynamics.sigma > 0.0)) throw ValidationError("sigma must be > 0");
    if (!(dynamics.cbar > 0.0)) throw ValidationError("cbar must be > 0");
    if (!(dynamics.gamma >= 0.0)) throw ValidationError("gamma must be >= 0");
    if (!(horizon > 0.0)) throw ValidationError("horizon must be > 0");
    if (grid.n_y < 16) throw ValidationError("grid.n_y must be >= 16");
    if (grid.n_t < 8) throw ValidationError("grid.n_t must be >= 8");
    if (static_cast<int>(initial.size()) != n)
      throw DimensionMismatch("initial densities must have one spec per type");
    for (auto& d : initial) d.validate();
    if (grid.y_max == 0.0) {
      double loc = 0.0;
      for (const auto& d : initial) loc = std::max(loc, d.location());
      grid.y_max = 8.0 * (loc + drift_bound() * horizon +
                          4.0 * dynamics.sigma * std::sqrt(horizon));
    }
    if (!(grid.y_max > 0.0)) throw ValidationError("grid.y_max must be > 0");
    if (particles.n_per_type < 1)
      throw ValidationError("particles.n_per_type must be >= 1");
    for (auto& t : {tol.picard_tol, tol.eq_tol, tol.frag_tol})
      if (!(t > 0.0)) throw ValidationError("tolerances must be > 0");
  }
};

namespace detail {

inline const nlohmann::json& need(const nlohmann::json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw ParseError(std::string("missing config key: ") + key);
  return *it;
}

inline std::vector<double> dvec(const nlohmann::json& j, const char* what) {
  if (!j.is_array()) throw ParseError(std::string(what) + " must be an array");
  std::vector<double> v;
  for (const auto& e : j) {
    if (!e.is_number()) throw ParseError(std::string(what) + " must be numeric");
    v.push_back(e.get<double>());
  }
  return v;
}

inline DensitySpec density_from_json(const nlohmann::json& j) {
  std::string kind = need(j, "kind").get<std::string>();
  DensitySpec d;
  if (kind == "truncated_gaussian") {
    d = DensitySpec::gaussian(need(j, "mean").get<double>(), need(j, "sd").get<double>());
  } else if (kind == "triangle") {
    d = DensitySpec::triangle_of(need(j, "lo").get<double>(),
                                 need(j, "peak").get<double>(),
                                 need(j, "hi").get<double>());
  } else if (kind == "uniform") {
    d = DensitySpec::uniform_of(need(j, "lo").get<double>(), need(j, "hi").get<double>());
  } else if (kind == "tabulated") {
    std::vector<std::pair<double, double>> pts;
    for (const auto& p : need(j, "points"))
      pts.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
    d = DensitySpec::tabulated_of(std::move(pts));
  } else {
    throw ParseError("unknown density kind: " + kind);
  }
  return d;
}

inline nlohmann::json density_to_json(const DensitySpec& d) {
  nlohmann::json j;
  switch (d.kind) {
    case DensityKind::truncated_gaussian:
      j["kind"] = "truncated_gaussian";
      j["mean"] = d.mean;
      j["sd"] = d.sd;
      break;
    case DensityKind::triangle:
      j["kind"] = "triangle";
      j["lo"] = d.lo;
      j["peak"] = d.peak;
      j["hi"] = d.hi;
      break;
    case DensityKind::uniform:
      j["kind"] = "uniform";
      j["lo"] = d.lo;
      j["hi"] = d.hi;
      break;
    case DensityKind::tabulated: {
      j["kind"] = "tabulated";
      auto& pts = j["points"] = nlohmann::json::array();
      for (auto& p : d.table) pts.push_back({p.first, p.second});
      break;
    }
  }
  return j;
}

inline InteractionFn g_from_json(const nlohmann::json& j) {
  std::string kind = need(j, "kind").get<std::string>();
  if (kind == "log") return InteractionFn::log_kind();
  if (kind == "affine") return InteractionFn::affine_kind();
  if (kind == "tabulated") {
    std::vector<std::pair<double, double>> pts;
    for (const auto& p : need(j, "points"))
      pts.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
    return InteractionFn::tabulated(std::move(pts));
  }
  throw ParseError("unknown g kind: " + kind);
}

inline nlohmann::json g_to_json(const InteractionFn& g) {
  nlohmann::json j;
  switch (g.kind) {
    case GKind::log:
      j["kind"] = "log";
      break;
    case GKind::affine:
      j["kind"] = "affine";
      break;
    case GKind::tabulated: {
      j["kind"] = "tabulated";
      auto& pts = j["points"] = nlohmann::json::array();
      for (auto& p : g.table) pts.push_back({p.first, p.second});
      break;
    }
  }
  return j;
}

}  // namespace detail

// Builds a validated RunConfig from parsed JSON. Missing structural pieces
// get documented defaults: type labels t0..tn-1, a complete adjacency, unit
// connectivity, a kernel uniform over each row's allowed targets.
inline RunConfig config_from_json(const nlohmann::json& j) {
  using detail::dvec;
  using detail::need;
  RunConfig cfg;

  const auto& jmu = need(j, "mu");
  cfg.network.mu = dvec(jmu, "mu");
  const int n = static_cast<int>(cfg.network.mu.size());
  if (n == 0) throw ParseError("mu must be non-empty");

  if (j.contains("types")) {
    for (const auto& t : j["types"]) cfg.network.types.push_back(t.get<std::string>());
  } else {
    for (int i = 0; i < n; ++i) cfg.network.types.push_back("t" + std::to_string(i));
  }

  if (j.contains("adjacency")) {
    for (const auto& row : j["adjacency"]) {
      std::vector<int> r;
      for (const auto& e : row) r.push_back(e.get<int>());
      cfg.network.adjacency.push_back(std::move(r));
    }
  } else {
    cfg.network.adjacency = complete_adjacency(n);
  }

  if (j.contains("connectivity"))
    cfg.network.connectivity = dvec(j["connectivity"], "connectivity");
  else
    cfg.network.connectivity.assign(n, 1.0);

  if (j.contains("kernel")) {
    for (const auto& row : j["kernel"])
      cfg.network.kernel.push_back(dvec(row, "kernel row"));
  } else {
    cfg.network.kernel.assign(n, std::vector<double>(n, 0.0));
    for (int i = 0; i < n; ++i) {
      int deg = 0;
      for (int k = 0; k < n; ++k) deg += cfg.network.adjacency[i][k] ? 1 : 0;
      if (deg)
        for (int k = 0; k < n; ++k)
          if (cfg.network.adjacency[i][k]) cfg.network.kernel[i][k] = 1.0 / deg;
    }
  }

  cfg.g = j.contains("g") ? detail::g_from_json(j["g"]) : InteractionFn::log_kind();

  const auto& dyn = need(j, "dynamics");
  cfg.dynamics.alpha_prime = dvec(need(dyn, "alpha_prime"), "alpha_prime");
  cfg.dynamics.alpha = dvec(need(dyn, "alpha"), "alpha");
  cfg.dynamics.sigma = need(dyn, "sigma").get<double>();
  cfg.dynamics.cbar = need(dyn, "cbar").get<double>();
  cfg.dynamics.gamma = dyn.value("gamma", 0.0);

  cfg.horizon = need(j, "horizon").get<double>();

  if (j.contains("grid")) {
    const auto& g = j["grid"];
    cfg.grid.y_max = g.value("y_max", 0.0);
    cfg.grid.n_y = g.value("n_y", 200);
    cfg.grid.n_t = g.value("n_t", 100);
  }

  if (j.contains("particles")) {
    const auto& p = j["particles"];
    cfg.particles.n_per_type = p.value("n_per_type", 10000);
    cfg.particles.seed = p.value("seed", std::uint64_t{1});
  }

  if (j.contains("tolerances")) {
    const auto& t = j["tolerances"];
    cfg.tol.picard_tol = t.value("picard_tol", 1e-6);
    cfg.tol.eq_tol = t.value("eq_tol", 1e-9);
    cfg.tol.frag_tol = t.value("frag_tol", 1e-8);
  }

  const auto& init = need(j, "initial");
  if (init.is_array()) {
    for (const auto& d : init) cfg.initial.push_back(detail::density_from_json(d));
  } else {
    cfg.initial.assign(n, detail::density_from_json(init));
  }

  std::uint64_t env;
  if (env_seed(env)) cfg.particles.seed = env;

  cfg.validate();
  return cfg;
}

// Effective config with all defaults materialized; round trips exactly.
inline nlohmann::json config_to_json(const RunConfig& cfg) {
  nlohmann::json j;
  j["types"] = cfg.network.types;
  j["mu"] = cfg.network.mu;
  j["adjacency"] = cfg.network.adjacency;
  j["connectivity"] = cfg.network.connectivity;
  j["kernel"] = cfg.network.kernel;
  j["g"] = detail::g_to_json(cfg.g);
  j["dynamics"] = {{"alpha_prime", cfg.dynamics.alpha_prime},
                   {"alpha", cfg.dynamics.alpha},
                   {"sigma", cfg.dynamics.sigma},
                   {"cbar", cfg.dynamics.cbar},
                   {"gamma", cfg.dynamics.gamma}};
  j["horizon"] = cfg.horizon;
  j["grid"] = {{"y_max", cfg.grid.y_max}, {"n_y", cfg.grid.n_y}, {"n_t", cfg.grid.n_t}};
  j["particles"] = {{"n_per_type", cfg.particles.n_per_type},
                    {"seed", cfg.particles.seed}};
  j["tolerances"] = {{"picard_tol", cfg.tol.picard_tol},
                     {"eq_tol", cfg.tol.eq_tol},
                     {"frag_tol", cfg.tol.frag_tol}};
  auto& init = j["initial"] = nlohmann::json::array();
  for (const auto& d : cfg.initial) init.push_back(detail::density_to_json(d));
  return j;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("config is not valid JSON: " + std::string(e.what()));
  }
  try {
    return config_from_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("config has wrong shape: " + std::string(e.what()));
  }
}

inline void save_config(const RunConfig& cfg, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write config file: " + path);
  out << config_to_json(cfg).dump(2) << "\n";
}

inline std::string config_hash(const RunConfig& cfg) {
  return hex64(fnv1a64(config_to_json(cfg).dump()));
}

}  // namespace fragile_nets
