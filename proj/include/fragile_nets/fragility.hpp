#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fragile_nets/density.hpp"
#include "fragile_nets/errors.hpp"
#include "fragile_nets/interaction.hpp"
#include "fragile_nets/network.hpp"
#include "fragile_nets/scc.hpp"
#include "fragile_nets/util.hpp"

namespace fragile_nets {

// One type's surviving-value distribution, in whichever form the caller has:
// raw sample values, a nodal sub-density row on a uniform grid starting at 0,
// or a closed-form density. sub_cdf(z) is the mass of (0, z) among survivors,
// so it tops out at the survival probability.
struct Marginal {
  enum class Kind { samples, grid_row, analytic };

  static Marginal from_samples(std::vector<double> v, double survival) {
    Marginal m;
    m.kind = Kind::samples;
    m.samples = std::move(v);
    m.survival = survival;
    return m;
  }
  static Marginal from_grid_row(std::vector<double> row, double dy) {
    Marginal m;
    m.kind = Kind::grid_row;
    m.row = std::move(row);
    m.dy = dy;
    return m;
  }
  static Marginal from_density(DensitySpec d, double survival = 1.0) {
    Marginal m;
    m.kind = Kind::analytic;
    m.density = std::move(d);
    m.survival = survival;
    return m;
  }

  double sub_cdf(double z) const {
    if (z <= 0.0) return 0.0;
    switch (kind) {
      case Kind::samples: {
        if (samples.size() < 100)
          throw InsufficientDataError("marginal needs at least 100 samples, got " +
                                      std::to_string(samples.size()));
        std::size_t cnt = 0;
        for (double v : samples)
          if (v > 0.0 && v < z) ++cnt;
        return survival * static_cast<double>(cnt) / samples.size();
      }
      case Kind::grid_row: {
        double acc = 0.0;
        for (std::size_t j = 0; j + 1 < row.size(); ++j) {
          double lo = j * dy, hi = (j + 1) * dy;
          if (hi <= z) {
            acc += 0.5 * (row[j] + row[j + 1]) * dy;
          } else {
            double f = (z - lo) / dy;
            double mid = row[j] + f * (row[j + 1] - row[j]);
            acc += 0.5 * (row[j] + mid) * (z - lo);
            break;
          }
        }
        return acc;
      }
      case Kind::analytic:
        return survival * density.sub_cdf(z);
    }
    return 0.0;
  }

  double total_mass() const {
    switch (kind) {
      case Kind::samples:
      case Kind::analytic:
        return survival;
      case Kind::grid_row: {
        double acc = 0.0;
        for (std::size_t j = 0; j + 1 < row.size(); ++j)
          acc += 0.5 * (row[j] + row[j + 1]) * dy;
        return acc;
      }
    }
    return 0.0;
  }

  Kind kind = Kind::analytic;
  std::vector<double> samples;
  std::vector<double> row;
  double dy = 0.0;
  DensitySpec density;
  double survival = 1.0;
};

struct FragilityInput {
  std::vector<Marginal> marginals;  // one per type
  InteractionFn g;
  TypedNetwork net;
  std::vector<double> z_scan;

  void validate() const {
    if (static_cast<int>(marginals.size()) != net.size())
      throw DimensionMismatch("one marginal per type required");
    if (z_scan.size() < 2) throw ValidationError("z_scan needs at least 2 points");
    double prev = 0.0;
    for (double z : z_scan) {
      if (!(z > prev)) throw ValidationError("z_scan must be strictly increasing and positive");
      prev = z;
    }
    for (const auto& m : marginals)
      if (!(m.survival > 0.0 && m.survival <= 1.0))
        throw ValidationError("survival must lie in (0,1]");
  }
};

// Linear-slope certificates for the sub-CDF near 0. The lower pair is the
// steepest slope c such that sub_cdf(z')·g'(survival) >= c·z' holds at every
// scan point z' <= z for some scan point z; the upper pair is the shallowest
// slope with the reversed inequality. Ties resolve to the largest z.
struct CzPair {
  double c = 0.0;
  double z = 0.0;
};

struct CzEstimate {
  std::vector<CzPair> lower, upper;
};

inline CzEstimate estimate_cz(const FragilityInput& in) {
  in.validate();
  const int n = in.net.size();
  CzEstimate out;
  out.lower.resize(n);
  out.upper.resize(n);
  const int k = static_cast<int>(in.z_scan.size());
  std::vector<double> ratio(k);
  for (int x = 0; x < n; ++x) {
    const Marginal& m = in.marginals[x];
    double gp = in.g.prime(m.kind == Marginal::Kind::grid_row ? m.total_mass()
                                                              : m.survival);
    for (int i = 0; i < k; ++i)
      ratio[i] = m.sub_cdf(in.z_scan[i]) * gp / in.z_scan[i];

    double run_min = ratio[0], run_max = ratio[0];
    CzPair lo{run_min, in.z_scan[0]}, up{run_max, in.z_scan[0]};
    for (int i = 1; i < k; ++i) {
      run_min = std::min(run_min, ratio[i]);
      run_max = std::max(run_max, ratio[i]);
      if (run_min >= lo.c) lo = {run_min, in.z_scan[i]};
      if (run_max <= up.c) up = {run_max, in.z_scan[i]};
    }
    out.lower[x] = lo;
    out.upper[x] = up;
  }
  return out;
}

// Weighted type matrix: row x holds C(x)·kernel(x,x')·c(x').
inline std::vector<std::vector<double>> weight_matrix(
    const TypedNetwork& net, const std::vector<double>& c) {
  const int n = net.size();
  std::vector<std::vector<double>> m(n, std::vector<double>(n, 0.0));
  for (int x = 0; x < n; ++x)
    for (int y = 0; y < n; ++y) m[x][y] = net.connectivity[x] * net.kernel[x][y] * c[y];
  return m;
}

struct ComponentInfo {
  std::vector<int> members;
  bool closed = false;
  bool degenerate = false;  // singleton without self-weight
  double rho = 0.0;
};

// Strongly connected components of the positive-entry digraph of M, each
// tagged closed when no positive entry leaves it. rho is filled by the
// caller.
inline std::vector<ComponentInfo> closed_components(
    const std::vector<std::vector<double>>& m) {
  const int n = static_cast<int>(m.size());
  for (const auto& row : m) {
    if (static_cast<int>(row.size()) != n) throw DimensionMismatch("matrix must be square");
    for (double v : row)
      if (!(v >= 0.0) || !std::isfinite(v))
        throw ValidationError("matrix entries must be finite and nonnegative");
  }
  std::vector<std::vector<int>> adj(n, std::vector<int>(n, 0));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (m[i][j] > 0.0) adj[i][j] = 1;

  SccFinder scc(adj);
  std::vector<ComponentInfo> out;
  for (const auto& comp : scc.components()) {
    ComponentInfo info;
    info.members = comp;
    info.degenerate = comp.size() == 1 && m[comp[0]][comp[0]] == 0.0;
    bool closed = true;
    for (int i : comp)
      for (int j = 0; j < n; ++j) {
        if (m[i][j] <= 0.0) continue;
        if (std::find(comp.begin(), comp.end(), j) == comp.end()) {
          closed = false;
          break;
        }
      }
    info.closed = closed;
    out.push_back(std::move(info));
  }
  return out;
}

// Log of the spectral radius of a nonnegative irreducible matrix, by power
// iteration on M + eps·I (the shift makes the iteration aperiodic; the
// spectral radius shifts by exactly eps, which is subtracted back out).
// Degenerate singletons give -inf.
inline double log_pf_eigenvalue(const std::vector<std::vector<double>>& m,
                                double frag_tol = 1e-8) {
  const int n = static_cast<int>(m.size());
  if (n == 0) throw ValidationError("empty matrix");
  if (n == 1) return m[0][0] > 0.0 ? std::log(m[0][0]) : -inf_double();

  double max_entry = 0.0;
  for (const auto& row : m)
    for (double v : row) max_entry = std::max(max_entry, v);
  if (max_entry == 0.0) return -inf_double();

  const double eps = std::max(frag_tol, 0.05 * max_entry);
  std::vector<double> v(n, 1.0 / n), w(n);
  double radius = 0.0;
  bool done = false;
  for (int it = 0; it < 10000; ++it) {
    double lo = inf_double(), hi = 0.0, norm = 0.0;
    for (int i = 0; i < n; ++i) {
      double acc = eps * v[i];
      for (int j = 0; j < n; ++j) acc += m[i][j] * v[j];
      w[i] = acc;
      norm += acc;
      double q = acc / v[i];
      lo = std::min(lo, q);
      hi = std::max(hi, q);
    }
    for (int i = 0; i < n; ++i) v[i] = w[i] / norm;
    if (hi - lo <= 1e-13 * hi) {
      radius = 0.5 * (lo + hi);
      done = true;
      break;
    }
  }
  if (!done) throw NoConvergenceError("power iteration did not converge in 10000 steps");
  double r = radius - eps;
  return r > 0.0 ? std::log(r) : -inf_double();
}

enum class Verdict { Fragile, NotFragile, Inconclusive };
enum class Trend { Diverging, Bounded, Undetermined };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Fragile: return "Fragile";
    case Verdict::NotFragile: return "NotFragile";
    case Verdict::Inconclusive: return "Inconclusive";
  }
  return "?";
}
inline const char* to_string(Trend t) {
  switch (t) {
    case Trend::Diverging: return "Diverging";
    case Trend::Bounded: return "Bounded";
    case Trend::Undetermined: return "Undetermined";
  }
  return "?";
}

struct SeriesParams {
  std::vector<double> c, z, eps;  // per type
  double alpha_bar = 0.0;
  double sigma_lo = 1.0, sigma_hi = 1.0;
  double t = 0.0;
  double eta = 0.5;
  int n_terms = 200;
  int x0 = 0;
};

struct SeriesDiagnostic {
  std::vector<double> partial_sums;
  Trend trend = Trend::Undetermined;
};

// Partial sums of the borderline-case series. Terms are weighted path sums
// through the type graph with per-step survival factors built from the
// normal tail function; the trend is read off the geometric mean of the
// successive term ratios over the last half of the terms.
inline SeriesDiagnostic series_diagnostic(const SeriesParams& p, const TypedNetwork& net) {
  const int n = net.size();
  if (static_cast<int>(p.c.size()) != n || static_cast<int>(p.z.size()) != n ||
      static_cast<int>(p.eps.size()) != n)
    throw DimensionMismatch("c, z, eps must each have one entry per type");
  if (!(p.sigma_lo > 0.0) || !(p.sigma_hi > 0.0))
    throw ValidationError("volatility bounds must be positive");
  if (!(p.eta > 0.0)) throw ValidationError("eta must be positive");
  if (p.n_terms < 4) throw ValidationError("need at least 4 terms");
  if (p.x0 < 0 || p.x0 >= n) throw ValidationError("x0 out of range");
  for (int x = 0; x < n; ++x) {
    if (!(p.c[x] >= 0.0)) throw ValidationError("c must be nonnegative");
    if (p.c[x] > 0.0 && !(p.eps[x] > 0.0 && p.eps[x] < p.z[x]))
      throw ValidationError("eps must lie strictly inside (0, z)");
  }

  const double a_tilde = -1.01 * std::sqrt(std::acos(-1.0) / 2.0) * p.alpha_bar / p.sigma_lo;
  auto s_of = [&](int k) { return p.t + p.eta / k; };

  std::vector<std::vector<double>> m = weight_matrix(net, p.c);

  SeriesDiagnostic out;
  out.partial_sums.resize(p.n_terms);
  std::vector<double> log_terms(p.n_terms, -inf_double());

  std::vector<double> u(n, 0.0), next(n);
  u[p.x0] = 1.0;
  double log_scale = 0.0;
  double partial = 0.0;
  for (int term = 1; term <= p.n_terms; ++term) {
    if (term > 1) {
      // weight the intermediate node by its survival factor before stepping
      int mstep = term - 1;
      double sm = s_of(mstep), sm1 = s_of(mstep + 1);
      double denom = std::sqrt(p.sigma_lo * p.sigma_lo * (sm - sm1) +
                               p.sigma_hi * p.sigma_hi * (sm1 - p.t));
      for (int x = 0; x < n; ++x) {
        double d = 1.0 - 4.0 * phi_bar((p.z[x] - p.eps[x] + p.alpha_bar * (sm - p.t)) / denom);
        u[x] *= std::max(d, 0.0);
      }
    }
    for (int i = 0; i < n; ++i) {
      double acc = 0.0;
      for (int j = 0; j < n; ++j) acc += u[j] * m[j][i];
      next[i] = acc;
    }
    u = next;
    double total = 0.0;
    for (double v : u) total += v;
    if (total > 0.0 && (total > 1e200 || total < 1e-200)) {
      log_scale += std::log(total);
      for (double& v : u) v /= total;
      total = 1.0;
    }

    double sn = s_of(term), sn1 = s_of(term + 1);
    double pref = std::sqrt(sn - sn1) + a_tilde * (sn1 - p.t);
    double lt = total > 0.0 && pref > 0.0
                    ? std::log(pref) + log_scale + std::log(total)
                    : -inf_double();
    log_terms[term - 1] = lt;
    double tval = std::isfinite(lt) ? std::exp(lt) : 0.0;
    partial += tval;
    out.partial_sums[term - 1] = partial;
  }

  const int window = p.n_terms / 2;
  const int first = p.n_terms - window;
  bool all_zero = true;
  for (int i = first; i < p.n_terms; ++i)
    if (std::isfinite(log_terms[i])) all_zero = false;
  if (all_zero || window < 2) {
    out.trend = Trend::Bounded;
    return out;
  }
  double a = log_terms[first - 1], b = log_terms[p.n_terms - 1];
  if (!std::isfinite(a) || !std::isfinite(b)) {
    out.trend = Trend::Undetermined;
    return out;
  }
  double gm = std::exp((b - a) / window);
  if (gm > 1.0 + 1e-3)
    out.trend = Trend::Diverging;
  else if (gm < 1.0 - 1e-3)
    out.trend = Trend::Bounded;
  else
    out.trend = Trend::Undetermined;
  return out;
}

struct SemimartBounds {
  double alpha_bar = 0.0;
  double sigma_lo = 1.0, sigma_hi = 1.0;
  double t = 0.0;
  double eta = 0.5;
  int n_terms = 200;
  int x0 = 0;
};

struct FragilityReport {
  std::vector<double> c, z;        // lower-envelope pairs (fragile test)
  std::vector<double> c_up, z_up;  // upper-envelope pairs (not-fragile test)
  std::vector<std::vector<double>> m_low, m_up;
  std::vector<ComponentInfo> components;        // of m_low
  std::vector<ComponentInfo> components_upper;  // of m_up
  Verdict verdict = Verdict::Inconclusive;
  std::optional<SeriesDiagnostic> series;
};

namespace detail {
inline std::vector<std::vector<double>> submatrix(
    const std::vector<std::vector<double>>& m, const std::vector<int>& idx) {
  std::vector<std::vector<double>> s(idx.size(), std::vector<double>(idx.size()));
  for (std::size_t a = 0; a < idx.size(); ++a)
    for (std::size_t b = 0; b < idx.size(); ++b) s[a][b] = m[idx[a]][idx[b]];
  return s;
}

inline void fill_rho(std::vector<ComponentInfo>& comps,
                     const std::vector<std::vector<double>>& m, double frag_tol) {
  for (auto& comp : comps) {
    if (comp.degenerate) {
      comp.rho = -inf_double();
      continue;
    }
    comp.rho = log_pf_eigenvalue(submatrix(m, comp.members), frag_tol);
  }
}
}  // namespace detail

// Full classification: envelope estimation, both weighted matrices, closed
// components, eigenvalues, verdict. The verdict is Fragile when some closed
// component of the lower matrix has rho above frag_tol, NotFragile when every
// closed component of the upper matrix sits below -frag_tol, Inconclusive
// otherwise; an inconclusive verdict runs the series diagnostic when
// drift/volatility bounds are supplied.
inline FragilityReport classify(const FragilityInput& in, double frag_tol = 1e-8,
                                const std::optional<SemimartBounds>& bounds = {}) {
  CzEstimate cz = estimate_cz(in);
  const int n = in.net.size();
  FragilityReport rep;
  rep.c.resize(n);
  rep.z.resize(n);
  rep.c_up.resize(n);
  rep.z_up.resize(n);
  for (int x = 0; x < n; ++x) {
    rep.c[x] = cz.lower[x].c;
    rep.z[x] = cz.lower[x].z;
    rep.c_up[x] = cz.upper[x].c;
    rep.z_up[x] = cz.upper[x].z;
  }
  rep.m_low = weight_matrix(in.net, rep.c);
  rep.m_up = weight_matrix(in.net, rep.c_up);
  rep.components = closed_components(rep.m_low);
  rep.components_upper = closed_components(rep.m_up);
  detail::fill_rho(rep.components, rep.m_low, frag_tol);
  detail::fill_rho(rep.components_upper, rep.m_up, frag_tol);

  bool fragile = false;
  for (const auto& comp : rep.components)
    if (comp.closed && comp.rho > frag_tol) fragile = true;
  bool calm = true;
  for (const auto& comp : rep.components_upper)
    if (comp.closed && !(comp.rho < -frag_tol)) calm = false;

  if (fragile)
    rep.verdict = Verdict::Fragile;
  else if (calm)
    rep.verdict = Verdict::NotFragile;
  else
    rep.verdict = Verdict::Inconclusive;

  if (rep.verdict == Verdict::Inconclusive && bounds.has_value()) {
    SeriesParams sp;
    sp.c = rep.c;
    sp.z = rep.z;
    sp.eps.resize(n);
    for (int x = 0; x < n; ++x) sp.eps[x] = 0.5 * rep.z[x];
    sp.alpha_bar = bounds->alpha_bar;
    sp.sigma_lo = bounds->sigma_lo;
    sp.sigma_hi = bounds->sigma_hi;
    sp.t = bounds->t;
    sp.eta = bounds->eta;
    sp.n_terms = bounds->n_terms;
    sp.x0 = bounds->x0;
    rep.series = series_diagnostic(sp, in.net);
  }
  return rep;
}

}  // namespace fragile_nets
