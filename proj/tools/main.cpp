#include <cstdint>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fragile_nets/config.hpp"
#include "fragile_nets/dynamic_equilibrium.hpp"
#include "fragile_nets/errors.hpp"
#include "fragile_nets/fragility.hpp"
#include "fragile_nets/io.hpp"
#include "fragile_nets/particle.hpp"
#include "fragile_nets/version.hpp"

namespace fn = fragile_nets;

namespace {

struct Options {
  std::string config_path;
  std::string out_dir = "out";
  std::vector<std::string> sets;
  bool force = false;
  bool verify = false;
  bool emit_densities = false;
  std::string kernels = "clustered,uniform";
  std::string marginals_path;
  std::optional<std::uint64_t> seed;
};

// Dotted-path override: "dynamics.sigma=0.5" writes 0.5 at that path in the
// raw config JSON, creating objects along the way. Values parse as JSON when
// they can, otherwise they are taken as strings.
void apply_override(nlohmann::json& j, const std::string& kv) {
  auto eq = kv.find('=');
  if (eq == std::string::npos || eq == 0)
    throw fn::ValidationError("override must look like path.to.key=value: " + kv);
  std::string path = kv.substr(0, eq), value = kv.substr(eq + 1);
  nlohmann::json parsed;
  try {
    parsed = nlohmann::json::parse(value);
  } catch (const nlohmann::json::parse_error&) {
    parsed = value;
  }
  nlohmann::json* node = &j;
  std::size_t start = 0;
  for (;;) {
    auto dot = path.find('.', start);
    std::string key = path.substr(start, dot == std::string::npos ? dot : dot - start);
    if (key.empty()) throw fn::ValidationError("empty key in override path: " + kv);
    if (dot == std::string::npos) {
      (*node)[key] = parsed;
      break;
    }
    node = &(*node)[key];
    start = dot + 1;
  }
}

fn::RunConfig load_config_with_opts(const Options& opt) {
  nlohmann::json j = nlohmann::json::parse(fn::read_text(opt.config_path), nullptr, true, true);
  for (const auto& kv : opt.sets) apply_override(j, kv);
  fn::RunConfig cfg = fn::config_from_json(j);
  if (opt.seed.has_value()) cfg.particles.seed = *opt.seed;
  cfg.validate();
  return cfg;
}

std::string join(const std::string& dir, const std::string& name) {
  return dir + "/" + name;
}

void write_artifact(const Options& opt, const std::string& name, const std::string& content) {
  std::string path = join(opt.out_dir, name);
  fn::guard_overwrite(path, opt.force);
  fn::write_text(path, content);
}

// Geometric scan grid over the initial supports, used whenever the caller
// has no better candidate set for the slope certificates.
std::vector<double> default_z_scan(const fn::RunConfig& cfg) {
  double hi = 0.0;
  for (const auto& d : cfg.initial) {
    double s = d.support_hi();
    if (!std::isfinite(s)) s = d.location() + 4.0 * d.sd;
    hi = std::max(hi, s);
  }
  if (hi <= 0.0) hi = 1.0;
  std::vector<double> scan;
  double lo = hi / 1000.0;
  const int points = 200;
  for (int i = 0; i < points; ++i)
    scan.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / (points - 1)));
  return scan;
}

int cmd_simulate(const Options& opt) {
  fn::RunConfig cfg = load_config_with_opts(opt);
  fn::SimResult sim = fn::run_sim(cfg);
  fn::ensure_dir(opt.out_dir);
  write_artifact(opt, "trajectory.csv", fn::trajectory_csv(sim, cfg.network.types));
  write_artifact(opt, "marginals.csv", fn::marginals_csv(sim, cfg.network.types));
  write_artifact(opt, "cascades.json", fn::cascades_json(sim, cfg.network.types).dump(2) + "\n");
  write_artifact(opt, "manifest.json", fn::manifest_json(cfg, "simulate").dump(2) + "\n");
  std::cout << "simulate: " << sim.cascades.size() << " cascade instants, final fractions:";
  for (int x = 0; x < cfg.network.size(); ++x)
    std::cout << ' ' << cfg.network.types[x] << '=' << fn::fmt12(sim.theta_hat[x].back());
  std::cout << '\n';
  return 0;
}

int cmd_fragility(const Options& opt) {
  fn::RunConfig cfg = load_config_with_opts(opt);
  fn::FragilityInput in;
  in.net = cfg.network;
  in.g = cfg.g;
  in.z_scan = default_z_scan(cfg);

  nlohmann::json source;
  if (!opt.marginals_path.empty()) {
    auto samples = fn::read_marginals_csv(opt.marginals_path, cfg.network.types);
    for (int x = 0; x < cfg.network.size(); ++x) {
      double survival =
          static_cast<double>(samples[x].size()) / cfg.particles.n_per_type;
      in.marginals.push_back(
          fn::Marginal::from_samples(std::move(samples[x]), survival));
    }
    source["marginals"] = opt.marginals_path;
    std::string manifest =
        std::filesystem::path(opt.marginals_path).parent_path().string() + "/manifest.json";
    if (std::filesystem::exists(manifest)) {
      nlohmann::json m = nlohmann::json::parse(fn::read_text(manifest));
      source["run_manifest"] = manifest;
      if (m.contains("config_hash")) source["run_config_hash"] = m["config_hash"];
      if (m.contains("seed")) source["run_seed"] = m["seed"];
    }
  } else {
    for (int x = 0; x < cfg.network.size(); ++x)
      in.marginals.push_back(fn::Marginal::from_density(cfg.initial[x]));
    source["marginals"] = "analytic-initial";
  }

  fn::SemimartBounds bounds;
  bounds.alpha_bar = *std::max_element(cfg.dynamics.alpha_prime.begin(),
                                       cfg.dynamics.alpha_prime.end());
  bounds.sigma_lo = cfg.dynamics.sigma;
  bounds.sigma_hi = cfg.dynamics.sigma;
  bounds.t = 0.0;
  bounds.eta = cfg.horizon / 2.0;
  bounds.n_terms = 200;

  fn::FragilityReport rep = fn::classify(in, cfg.tol.frag_tol, bounds);
  fn::ensure_dir(opt.out_dir);
  nlohmann::json rj = fn::fragility_json(rep, cfg.network.types);
  rj["source"] = source;
  write_artifact(opt, "report.json", rj.dump(2) + "\n");
  write_artifact(opt, "manifest.json", fn::manifest_json(cfg, "fragility").dump(2) + "\n");
  std::cout << fn::fragility_table(rep, cfg.network.types);
  return 0;
}

int cmd_equilibrium(const Options& opt) {
  fn::RunConfig cfg = load_config_with_opts(opt);
  bool need_densities = opt.emit_densities || opt.verify;
  fn::EquilibriumPath path = fn::picard_solve(cfg, 200, need_densities);
  const double dt = cfg.horizon / cfg.grid.n_t;

  nlohmann::json ej = fn::equilibrium_json(path, cfg.network.types, dt);
  if (opt.verify) {
    fn::NoCascadeReport nc = fn::no_cascade_check(path, cfg);
    std::vector<std::vector<double>> sched(cfg.network.size(),
                                           std::vector<double>(cfg.grid.n_t));
    for (int x = 0; x < cfg.network.size(); ++x)
      for (int k = 0; k < cfg.grid.n_t; ++k) sched[x][k] = path.drift[x][k];
    fn::SimResult sim = fn::run_sim(cfg, sched);
    double worst_z = 0.0;
    for (int x = 0; x < cfg.network.size(); ++x)
      for (int k = 0; k <= cfg.grid.n_t; ++k) {
        double th = path.theta[x][k];
        double se = std::sqrt(th * (1.0 - th) / cfg.particles.n_per_type) +
                    1.0 / cfg.particles.n_per_type;
        worst_z = std::max(worst_z, std::fabs(sim.theta_hat[x][k] - th) / se);
      }
    nlohmann::json v;
    v["max_mass_drop"] = fn::round12(nc.max_drop);
    v["mass_drop_bound"] = fn::round12(nc.bound);
    v["mc_max_deviation_se"] = fn::round12(worst_z);
    bool mc_ok = worst_z <= 3.0;
    v["pass"] = mc_ok;
    ej["verification"] = v;
    if (!mc_ok)
      throw fn::NoConvergenceError(
          "simulation disagrees with the solved path: max deviation " +
          fn::fmt12(worst_z) + " standard errors");
  }

  fn::ensure_dir(opt.out_dir);
  write_artifact(opt, "equilibrium.json", ej.dump(2) + "\n");
  write_artifact(opt, "path.csv", fn::path_csv(path, cfg.network.types, dt));
  write_artifact(opt, "allocations.csv", fn::allocations_csv(path, cfg.network.types, dt));
  if (opt.emit_densities)
    write_artifact(opt, "densities.csv", fn::densities_csv(path.field, cfg.network.types));
  write_artifact(opt, "manifest.json", fn::manifest_json(cfg, "equilibrium").dump(2) + "\n");
  std::cout << "equilibrium: converged in " << path.iterations << " sweeps, residual "
            << fn::fmt12(path.residual_history.empty() ? 0.0 : path.residual_history.back())
            << '\n';
  return 0;
}

int cmd_compare(const Options& opt) {
  fn::RunConfig cfg = load_config_with_opts(opt);
  std::vector<std::string> kernel_names;
  std::size_t start = 0;
  for (;;) {
    auto comma = opt.kernels.find(',', start);
    std::string name = opt.kernels.substr(
        start, comma == std::string::npos ? comma : comma - start);
    if (!name.empty()) kernel_names.push_back(name);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (kernel_names.empty()) throw fn::ValidationError("--kernels lists no kernels");

  const int n = cfg.network.size();
  std::ostringstream csv;
  csv << "kernel,type,c,component,closed,rho,verdict,max_theta_drop\n";
  nlohmann::json root;
  for (const auto& name : kernel_names) {
    fn::RunConfig variant = cfg;
    variant.network.adjacency = fn::complete_adjacency(n);
    if (name == "clustered")
      variant.network.kernel = fn::clustered_kernel(n);
    else if (name == "uniform")
      variant.network.kernel = fn::uniform_kernel(n);
    else
      throw fn::ValidationError("unknown kernel " + name + " (use clustered, uniform)");
    variant.network.validate();

    fn::FragilityInput in;
    in.net = variant.network;
    in.g = variant.g;
    in.z_scan = default_z_scan(variant);
    for (int x = 0; x < n; ++x)
      in.marginals.push_back(fn::Marginal::from_density(variant.initial[x]));
    fn::FragilityReport rep = fn::classify(in, variant.tol.frag_tol);

    fn::SimResult sim = fn::run_sim(variant);
    std::vector<double> drop(n, 0.0);
    for (int x = 0; x < n; ++x)
      for (int k = 0; k < variant.grid.n_t; ++k)
        drop[x] = std::max(drop[x], sim.theta_hat[x][k] - sim.theta_hat[x][k + 1]);

    std::vector<int> comp_of(n, -1);
    for (std::size_t ci = 0; ci < rep.components.size(); ++ci)
      for (int m : rep.components[ci].members) comp_of[m] = static_cast<int>(ci);
    for (int x = 0; x < n; ++x) {
      const auto& comp = rep.components[comp_of[x]];
      csv << name << ',' << variant.network.types[x] << ',' << fn::fmt12(rep.c[x]) << ','
          << comp_of[x] << ',' << (comp.closed ? "yes" : "no") << ','
          << (std::isfinite(comp.rho) ? fn::fmt12(comp.rho) : std::string("-inf")) << ','
          << fn::to_string(rep.verdict) << ',' << fn::fmt12(drop[x]) << '\n';
    }
    nlohmann::json entry = fn::fragility_json(rep, variant.network.types);
    nlohmann::json drops = nlohmann::json::object();
    for (int x = 0; x < n; ++x) drops[variant.network.types[x]] = fn::round12(drop[x]);
    entry["max_theta_drop"] = drops;
    root[name] = entry;
  }

  fn::ensure_dir(opt.out_dir);
  write_artifact(opt, "compare.csv", csv.str());
  write_artifact(opt, "compare.json", root.dump(2) + "\n");
  write_artifact(opt, "manifest.json",
                 fn::manifest_json(cfg, "compare-topologies").dump(2) + "\n");
  std::cout << csv.str();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{std::string(fn::kToolName) + " " + fn::kVersion +
               ": mean-field cascade simulation, fragility classification, "
               "and credit-network equilibria"};
  app.require_subcommand(1);

  Options opt;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config_path, "config JSON path")->required();
    sub->add_option("--out", opt.out_dir, "output directory (default: out)");
    sub->add_option("--set", opt.sets, "dotted-path config override, e.g. dynamics.sigma=0.5");
    sub->add_option("--seed", opt.seed, "RNG seed override");
    sub->add_flag("--force", opt.force, "overwrite existing output files");
  };

  CLI::App* sim = app.add_subcommand("simulate", "run the finite-population cascade simulator");
  add_common(sim);
  CLI::App* fra = app.add_subcommand("fragility", "classify the state of fragility");
  add_common(fra);
  fra->add_option("--marginals", opt.marginals_path,
                  "CSV of surviving values (type,value) from a simulate run");
  CLI::App* equ = app.add_subcommand("equilibrium", "solve the dynamic credit-network game");
  add_common(equ);
  equ->add_flag("--verify", opt.verify,
                "cross-check the path against simulation and the cascade-free bound");
  equ->add_flag("--emit-densities", opt.emit_densities, "also dump the full density field");
  CLI::App* cmp = app.add_subcommand("compare-topologies",
                                     "contrast kernels on one parameter set");
  add_common(cmp);
  cmp->add_option("--kernels", opt.kernels, "comma list: clustered,uniform");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (sim->parsed()) return cmd_simulate(opt);
    if (fra->parsed()) return cmd_fragility(opt);
    if (equ->parsed()) return cmd_equilibrium(opt);
    if (cmp->parsed()) return cmd_compare(opt);
    std::cerr << "no subcommand given\n";
    return 1;
  } catch (const fn::InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const fn::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "unexpected failure: " << e.what() << '\n';
    return 2;
  }
}
