#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "fragile_nets/io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;

namespace {

struct CliResult {
  int code = -1;
  std::string output;
};

fs::path work_root() {
  static fs::path root = [] {
    fs::path p = fs::temp_directory_path() / "fragile_nets_cli_tests";
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
  }();
  return root;
}

fs::path fresh_dir(const std::string& name) {
  fs::path dir = work_root() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string q(const std::string& s) { return "'" + s + "'"; }

CliResult run_cli(const std::string& args, const fs::path& capture_dir) {
  const char* bin = std::getenv("FRAGILE_NETS_CLI");
  REQUIRE(bin != nullptr);
  fs::path log = capture_dir / "cli_output.txt";
  std::string cmd = q(bin) + " " + args + " > " + q(log.string()) + " 2>&1";
  int status = std::system(cmd.c_str());
  CliResult res;
  res.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  if (fs::exists(log)) res.output = fragile_nets::read_text(log.string());
  return res;
}

json pool_config() {
  json j;
  j["types"] = {"solo"};
  j["mu"] = {1.0};
  j["connectivity"] = {1.0};
  j["g"] = {{"kind", "affine"}};
  j["dynamics"] = {{"alpha_prime", {0.0}},
                   {"alpha", {0.0}},
                   {"sigma", 0.6},
                   {"cbar", 1.0}};
  j["horizon"] = 0.25;
  j["grid"] = {{"y_max", 6.0}, {"n_y", 60}, {"n_t", 10}};
  j["particles"] = {{"n_per_type", 400}, {"seed", 7}};
  j["initial"] = {{"kind", "uniform"}, {"lo", 0.2}, {"hi", 1.2}};
  return j;
}

json chain_config() {
  json j;
  j["types"] = {"retail", "lender"};
  j["mu"] = {0.5, 0.5};
  j["adjacency"] = {{0, 0}, {1, 0}};
  j["connectivity"] = {0.5, 0.5};
  j["g"] = {{"kind", "affine"}};
  j["dynamics"] = {{"alpha_prime", {0.2, 0.2}},
                   {"alpha", {1.0, 0.2}},
                   {"sigma", 0.7},
                   {"cbar", 1.0}};
  j["horizon"] = 0.5;
  j["grid"] = {{"y_max", 6.0}, {"n_y", 80}, {"n_t", 20}};
  j["particles"] = {{"n_per_type", 500}, {"seed", 3}};
  j["initial"] = {{"kind", "truncated_gaussian"}, {"mean", 1.2}, {"sd", 0.2}};
  return j;
}

fs::path write_config(const fs::path& dir, const json& j) {
  fs::path p = dir / "config.json";
  std::ofstream(p) << j.dump(2) << "\n";
  return p;
}

json read_json(const fs::path& p) {
  return json::parse(fragile_nets::read_text(p.string()));
}

}  // namespace

TEST_CASE("cli rejects bare invocation and bad configs") {
  fs::path dir = fresh_dir("bad_input");
  CHECK(run_cli("", dir).code == 1);
  CHECK(run_cli("simulate --config " + q((dir / "missing.json").string()), dir).code == 1);

  fs::path broken = dir / "broken.json";
  std::ofstream(broken) << "{ this is not json";
  auto res = run_cli("simulate --config " + q(broken.string()) + " --out " +
                         q((dir / "out").string()),
                     dir);
  CHECK(res.code == 1);
}

TEST_CASE("simulate writes its artifact set and reruns reproduce it byte for byte") {
  fs::path dir = fresh_dir("simulate");
  fs::path cfg = write_config(dir, pool_config());
  fs::path out_a = dir / "a", out_b = dir / "b", out_c = dir / "c";

  auto res = run_cli("simulate --config " + q(cfg.string()) + " --out " + q(out_a.string()), dir);
  CHECK(res.code == 0);
  CHECK_THAT(res.output, ContainsSubstring("simulate:"));
  for (const char* name : {"trajectory.csv", "marginals.csv", "cascades.json", "manifest.json"})
    CHECK(fs::exists(out_a / name));

  json manifest = read_json(out_a / "manifest.json");
  CHECK(manifest["command"] == "simulate");
  CHECK(manifest["seed"] == 7);
  CHECK(manifest["config_hash"].is_string());

  // same config, fresh directory: identical bytes
  CHECK(run_cli("simulate --config " + q(cfg.string()) + " --out " + q(out_b.string()), dir).code == 0);
  CHECK(fragile_nets::read_text((out_a / "trajectory.csv").string()) ==
        fragile_nets::read_text((out_b / "trajectory.csv").string()));
  CHECK(fragile_nets::read_text((out_a / "marginals.csv").string()) ==
        fragile_nets::read_text((out_b / "marginals.csv").string()));

  // existing artifacts are protected unless forced
  CHECK(run_cli("simulate --config " + q(cfg.string()) + " --out " + q(out_a.string()), dir).code == 1);
  CHECK(run_cli("simulate --config " + q(cfg.string()) + " --out " + q(out_a.string()) + " --force",
                dir).code == 0);

  // a different seed changes the draw
  CHECK(run_cli("simulate --config " + q(cfg.string()) + " --out " + q(out_c.string()) +
                    " --seed 99",
                dir).code == 0);
  CHECK(fragile_nets::read_text((out_a / "marginals.csv").string()) !=
        fragile_nets::read_text((out_c / "marginals.csv").string()));
  CHECK(read_json(out_c / "manifest.json")["seed"] == 99);
}

TEST_CASE("config overrides change the manifest hash") {
  fs::path dir = fresh_dir("overrides");
  fs::path cfg = write_config(dir, pool_config());
  fs::path out_a = dir / "a", out_b = dir / "b";

  REQUIRE(run_cli("simulate --config " + q(cfg.string()) + " --out " + q(out_a.string()), dir).code == 0);
  REQUIRE(run_cli("simulate --config " + q(cfg.string()) + " --out " + q(out_b.string()) +
                      " --set dynamics.sigma=0.9",
                  dir).code == 0);
  json a = read_json(out_a / "manifest.json"), b = read_json(out_b / "manifest.json");
  CHECK(a["config_hash"] != b["config_hash"]);
  CHECK(b["config"]["dynamics"]["sigma"] == 0.9);

  // invalid values surface as input errors
  auto res = run_cli("simulate --config " + q(cfg.string()) + " --out " +
                         q((dir / "x").string()) + " --set dynamics.sigma=-1",
                     dir);
  CHECK(res.code == 1);
  CHECK_THAT(res.output, ContainsSubstring("error:"));
}

TEST_CASE("fragility classifies the threshold pool on both sides") {
  fs::path dir = fresh_dir("fragility");
  json base = pool_config();
  base["initial"] = {{"kind", "uniform"}, {"lo", 0.0}, {"hi", 0.5}};
  fs::path cfg = write_config(dir, base);

  fs::path out_f = dir / "f";
  auto res = run_cli("fragility --config " + q(cfg.string()) + " --out " + q(out_f.string()), dir);
  CHECK(res.code == 0);
  CHECK_THAT(res.output, ContainsSubstring("Fragile"));
  json rep = read_json(out_f / "report.json");
  CHECK(rep["verdict"] == "Fragile");
  CHECK_THAT(rep["c"]["solo"].get<double>(), WithinAbs(2.0, 1e-9));
  CHECK_THAT(rep["components"][0]["rho"].get<double>(), WithinAbs(std::log(2.0), 1e-9));
  CHECK(rep["source"]["marginals"] == "analytic-initial");

  fs::path out_n = dir / "n";
  res = run_cli("fragility --config " + q(cfg.string()) + " --out " + q(out_n.string()) +
                    " --set initial.hi=2.0",
                dir);
  CHECK(res.code == 0);
  json rep2 = read_json(out_n / "report.json");
  CHECK(rep2["verdict"] == "NotFragile");
  CHECK_THAT(rep2["components_upper"][0]["rho"].get<double>(), WithinAbs(std::log(0.5), 1e-9));
}

TEST_CASE("fragility consumes marginals from a simulate run") {
  fs::path dir = fresh_dir("fragility_marginals");
  json base = pool_config();
  base["particles"] = {{"n_per_type", 2000}, {"seed", 11}};
  fs::path cfg = write_config(dir, base);

  fs::path sim_out = dir / "sim";
  REQUIRE(run_cli("simulate --config " + q(cfg.string()) + " --out " + q(sim_out.string()), dir).code == 0);

  fs::path out = dir / "rep";
  auto res = run_cli("fragility --config " + q(cfg.string()) + " --out " + q(out.string()) +
                         " --marginals " + q((sim_out / "marginals.csv").string()),
                     dir);
  CHECK(res.code == 0);
  json rep = read_json(out / "report.json");
  CHECK(rep["source"]["marginals"] == (sim_out / "marginals.csv").string());
  CHECK(rep["source"]["run_config_hash"] == read_json(sim_out / "manifest.json")["config_hash"]);
  CHECK(rep["c"]["solo"].get<double>() > 0.0);
}

TEST_CASE("equilibrium solves a small chain and verification passes") {
  fs::path dir = fresh_dir("equilibrium");
  fs::path cfg = write_config(dir, chain_config());

  fs::path out = dir / "eq";
  auto res = run_cli("equilibrium --config " + q(cfg.string()) + " --out " + q(out.string()) +
                         " --verify",
                     dir);
  CHECK(res.code == 0);
  CHECK_THAT(res.output, ContainsSubstring("converged"));
  for (const char* name : {"equilibrium.json", "path.csv", "allocations.csv", "manifest.json"})
    CHECK(fs::exists(out / name));

  json ej = read_json(out / "equilibrium.json");
  CHECK(ej["iterations"].get<int>() >= 1);
  CHECK(ej["residual_history"].size() >= 1);
  CHECK(ej["verification"]["pass"] == true);
  CHECK(ej["verification"]["max_mass_drop"].get<double>() <=
        ej["verification"]["mass_drop_bound"].get<double>());
  CHECK(ej["theta"]["retail"].size() == 21);

  // the density dump is opt-in
  CHECK(!fs::exists(out / "densities.csv"));
  fs::path out2 = dir / "eq_dens";
  REQUIRE(run_cli("equilibrium --config " + q(cfg.string()) + " --out " + q(out2.string()) +
                      " --emit-densities",
                  dir).code == 0);
  CHECK(fs::exists(out2 / "densities.csv"));
}

TEST_CASE("numerical failures exit with the dedicated code") {
  fs::path dir = fresh_dir("numerical");
  fs::path cfg = write_config(dir, chain_config());
  auto res = run_cli("equilibrium --config " + q(cfg.string()) + " --out " +
                         q((dir / "out").string()) + " --set dynamics.sigma=0.05",
                     dir);
  CHECK(res.code == 2);
  CHECK_THAT(res.output, ContainsSubstring("numerical failure"));
}

TEST_CASE("compare-topologies contrasts kernels on one parameter set") {
  fs::path dir = fresh_dir("compare");
  json j;
  j["types"] = {"heavy", "light"};
  j["mu"] = {0.5, 0.5};
  j["connectivity"] = {1.5, 0.3};
  j["g"] = {{"kind", "affine"}};
  j["dynamics"] = {{"alpha_prime", {0.0, 0.0}},
                   {"alpha", {0.0, 0.0}},
                   {"sigma", 0.4},
                   {"cbar", 1.0}};
  j["horizon"] = 0.25;
  j["grid"] = {{"y_max", 4.0}, {"n_y", 60}, {"n_t", 10}};
  j["particles"] = {{"n_per_type", 500}, {"seed", 7}};
  j["initial"] = {{"kind", "uniform"}, {"lo", 0.0}, {"hi", 1.0}};
  fs::path cfg = write_config(dir, j);

  fs::path out = dir / "cmp";
  auto res = run_cli("compare-topologies --config " + q(cfg.string()) + " --out " +
                         q(out.string()),
                     dir);
  CHECK(res.code == 0);
  json root = read_json(out / "compare.json");
  REQUIRE(root.contains("clustered"));
  REQUIRE(root.contains("uniform"));
  CHECK(root["clustered"]["verdict"] == "Fragile");
  CHECK(root["uniform"]["verdict"] == "NotFragile");

  std::string csv = fragile_nets::read_text((out / "compare.csv").string());
  int lines = 0;
  for (char ch : csv)
    if (ch == '\n') ++lines;
  CHECK(lines == 5);

  CHECK(run_cli("compare-topologies --config " + q(cfg.string()) + " --out " +
                    q((dir / "cmp2").string()) + " --kernels ring",
                dir).code == 1);
}
