#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fragile_nets/config.hpp"
#include "fragile_nets/dynamic_equilibrium.hpp"
#include "fragile_nets/errors.hpp"
#include "fragile_nets/fragility.hpp"
#include "fragile_nets/particle.hpp"
#include "fragile_nets/util.hpp"
#include "fragile_nets/version.hpp"

namespace fragile_nets {

inline void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir + ": " + ec.message());
}

inline void guard_overwrite(const std::string& path, bool force) {
  if (!force && std::filesystem::exists(path))
    throw IoError(path + " already exists (use --force to overwrite)");
}

inline void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << content;
  if (!out) throw IoError("write failed for " + path);
}

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// All numeric artifact output goes through 12-significant-digit formatting,
// so reruns with the same seed produce byte-identical files.
inline nlohmann::json manifest_json(const RunConfig& cfg, const std::string& command) {
  nlohmann::json m;
  m["tool"] = kToolName;
  m["version"] = kVersion;
  m["command"] = command;
  m["config_hash"] = config_hash(cfg);
  m["seed"] = cfg.particles.seed;
  m["config"] = config_to_json(cfg);
  return m;
}

inline std::string trajectory_csv(const SimResult& sim, const std::vector<std::string>& types) {
  std::ostringstream out;
  out << "t,type,survived_fraction,loss\n";
  for (std::size_t k = 0; k < sim.times.size(); ++k)
    for (std::size_t x = 0; x < types.size(); ++x)
      out << fmt12(sim.times[k]) << ',' << types[x] << ','
          << fmt12(sim.theta_hat[x][k]) << ',' << fmt12(sim.loss[x][k]) << '\n';
  return out.str();
}

inline std::string marginals_csv(const SimResult& sim, const std::vector<std::string>& types) {
  std::ostringstream out;
  out << "type,value\n";
  for (std::size_t x = 0; x < types.size(); ++x)
    for (double v : sim.final_values[x]) out << types[x] << ',' << fmt12(v) << '\n';
  return out.str();
}

inline nlohmann::json cascades_json(const SimResult& sim, const std::vector<std::string>& types) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& ev : sim.cascades) {
    nlohmann::json e;
    e["step"] = ev.step;
    e["t"] = round12(ev.t);
    e["rounds"] = ev.rounds;
    nlohmann::json rem = nlohmann::json::object(), jmp = nlohmann::json::object();
    for (std::size_t x = 0; x < types.size(); ++x) {
      rem[types[x]] = ev.removed[x];
      jmp[types[x]] = round12(ev.jump[x]);
    }
    e["removed"] = rem;
    e["jump"] = jmp;
    arr.push_back(e);
  }
  nlohmann::json root;
  root["cascades"] = arr;
  nlohmann::json theta = nlohmann::json::object();
  for (std::size_t x = 0; x < types.size(); ++x) {
    theta[types[x]] = round12(sim.theta_hat[x].back());
  }
  root["final_survived_fraction"] = theta;
  return root;
}

inline nlohmann::json fragility_json(const FragilityReport& rep,
                                     const std::vector<std::string>& types) {
  nlohmann::json root;
  nlohmann::json c = nlohmann::json::object(), z = nlohmann::json::object();
  nlohmann::json cu = nlohmann::json::object(), zu = nlohmann::json::object();
  for (std::size_t x = 0; x < types.size(); ++x) {
    c[types[x]] = round12(rep.c[x]);
    z[types[x]] = round12(rep.z[x]);
    cu[types[x]] = round12(rep.c_up[x]);
    zu[types[x]] = round12(rep.z_up[x]);
  }
  root["c"] = c;
  root["z"] = z;
  root["c_upper"] = cu;
  root["z_upper"] = zu;
  auto comps = [&](const std::vector<ComponentInfo>& list) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& comp : list) {
      nlohmann::json e;
      nlohmann::json members = nlohmann::json::array();
      for (int i : comp.members) members.push_back(types[i]);
      e["members"] = members;
      e["closed"] = comp.closed;
      e["degenerate"] = comp.degenerate;
      if (std::isfinite(comp.rho))
        e["rho"] = round12(comp.rho);
      else
        e["rho"] = "-inf";
      arr.push_back(e);
    }
    return arr;
  };
  root["components"] = comps(rep.components);
  root["components_upper"] = comps(rep.components_upper);
  root["verdict"] = to_string(rep.verdict);
  if (rep.series.has_value()) {
    nlohmann::json s;
    nlohmann::json sums = nlohmann::json::array();
    for (double v : rep.series->partial_sums) sums.push_back(round12(v));
    s["partial_sums"] = sums;
    s["trend"] = to_string(rep.series->trend);
    root["series_diagnostic"] = s;
  }
  return root;
}

inline std::string fragility_table(const FragilityReport& rep,
                                   const std::vector<std::string>& types) {
  std::ostringstream out;
  std::vector<int> comp_of(types.size(), -1);
  for (std::size_t ci = 0; ci < rep.components.size(); ++ci)
    for (int m : rep.components[ci].members) comp_of[m] = static_cast<int>(ci);
  out << "type          c             z     component  closed     rho\n";
  for (std::size_t x = 0; x < types.size(); ++x) {
    const auto& comp = rep.components[comp_of[x]];
    char line[160];
    std::snprintf(line, sizeof line, "%-10s %9s %9s %9d %7s %9s\n", types[x].c_str(),
                  fmt12(rep.c[x]).c_str(), fmt12(rep.z[x]).c_str(), comp_of[x],
                  comp.closed ? "yes" : "no",
                  std::isfinite(comp.rho) ? fmt12(comp.rho).c_str() : "-inf");
    out << line;
  }
  out << "verdict: " << to_string(rep.verdict) << '\n';
  if (rep.series.has_value())
    out << "series trend: " << to_string(rep.series->trend) << '\n';
  return out.str();
}

inline std::string path_csv(const EquilibriumPath& path, const std::vector<std::string>& types,
                            double dt) {
  std::ostringstream out;
  out << "t,type,lambda_bar,theta,r,R,cb,cl,drift\n";
  for (std::size_t k = 0; k < path.theta[0].size(); ++k)
    for (std::size_t x = 0; x < types.size(); ++x)
      out << fmt12(k * dt) << ',' << types[x] << ',' << fmt12(path.lambda_bar[x][k]) << ','
          << fmt12(path.theta[x][k]) << ',' << fmt12(path.r[x][k]) << ','
          << fmt12(path.R[x][k]) << ',' << fmt12(path.cb[x][k]) << ','
          << fmt12(path.cl[x][k]) << ',' << fmt12(path.drift[x][k]) << '\n';
  return out.str();
}

inline std::string allocations_csv(const EquilibriumPath& path,
                                   const std::vector<std::string>& types, double dt) {
  std::ostringstream out;
  out << "t,lender,borrower,nu\n";
  for (std::size_t k = 0; k < path.nu.size(); ++k)
    for (std::size_t x = 0; x < types.size(); ++x)
      for (std::size_t y = 0; y < types.size(); ++y) {
        if (path.nu[k][x][y] == 0.0) continue;
        out << fmt12(k * dt) << ',' << types[x] << ',' << types[y] << ','
            << fmt12(path.nu[k][x][y]) << '\n';
      }
  return out.str();
}

inline std::string densities_csv(const DensityField& field,
                                 const std::vector<std::string>& types) {
  std::ostringstream out;
  out << "type,t,y,p\n";
  const double dy = field.grid.dy();
  for (std::size_t x = 0; x < field.p.size(); ++x)
    for (std::size_t k = 0; k < field.p[x].size(); ++k)
      for (std::size_t j = 0; j < field.p[x][k].size(); ++j)
        out << types[x] << ',' << fmt12(field.grid.t(static_cast<int>(k))) << ','
            << fmt12(j * dy) << ',' << fmt12(field.p[x][k][j]) << '\n';
  return out.str();
}

inline nlohmann::json equilibrium_json(const EquilibriumPath& path,
                                       const std::vector<std::string>& types, double dt) {
  nlohmann::json root;
  root["iterations"] = path.iterations;
  nlohmann::json hist = nlohmann::json::array();
  for (double v : path.residual_history) hist.push_back(round12(v));
  root["residual_history"] = hist;
  auto series = [&](const std::vector<std::vector<double>>& a) {
    nlohmann::json obj = nlohmann::json::object();
    for (std::size_t x = 0; x < types.size(); ++x) {
      nlohmann::json arr = nlohmann::json::array();
      for (double v : a[x]) arr.push_back(round12(v));
      obj[types[x]] = arr;
    }
    return obj;
  };
  nlohmann::json times = nlohmann::json::array();
  for (std::size_t k = 0; k < path.theta[0].size(); ++k) times.push_back(round12(k * dt));
  root["t"] = times;
  root["lambda_bar"] = series(path.lambda_bar);
  root["theta"] = series(path.theta);
  root["r"] = series(path.r);
  root["R"] = series(path.R);
  root["cb"] = series(path.cb);
  root["cl"] = series(path.cl);
  root["drift"] = series(path.drift);
  return root;
}

// Marginal samples CSV (type,value) from a simulate run, keyed by type name.
inline std::vector<std::vector<double>> read_marginals_csv(
    const std::string& path, const std::vector<std::string>& types) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path + ": empty file");
  std::vector<std::vector<double>> out(types.size());
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto comma = line.find(',');
    if (comma == std::string::npos)
      throw ParseError(path + ":" + std::to_string(line_no) + ": expected type,value");
    std::string ty = line.substr(0, comma);
    double v = 0.0;
    try {
      v = std::stod(line.substr(comma + 1));
    } catch (const std::exception&) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": bad number");
    }
    bool found = false;
    for (std::size_t x = 0; x < types.size(); ++x)
      if (types[x] == ty) {
        out[x].push_back(v);
        found = true;
        break;
      }
    if (!found)
      throw ParseError(path + ":" + std::to_string(line_no) + ": unknown type " + ty);
  }
  return out;
}

}  // namespace fragile_nets
