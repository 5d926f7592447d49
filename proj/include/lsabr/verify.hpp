#pragma once

// Verification harness: identity suites, the three-way oracle chain, the
// commutation and corrected-derivative identities, Garding checks, the
// smoothing-decay fit and the error-vs-volvol study.
//
// Residuals of field identities are relative to the weighted norm of the
// input. Every check records (id, residual, tolerance, bound); a lower bound
// passes when residual >= tol, an upper bound when residual <= tol.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "lsabr/coeffs.hpp"
#include "lsabr/fdsolver.hpp"
#include "lsabr/model.hpp"
#include "lsabr/semigroups.hpp"

namespace lsabr {

using json = nlohmann::ordered_json;

struct Check {
  std::string id;
  double residual = 0.0;
  double tol = 0.0;
  bool lower_bound = false;
  bool pass = false;
};

inline json params_json(const ModelParams& p) {
  return json{{"kappa", p.kappa}, {"theta", p.theta}, {"nu", p.nu},     {"rho", p.rho},
              {"alpha", p.alpha}, {"beta", p.beta},   {"lambda", p.lambda}};
}

inline json grid_json(const Grid2D& g) {
  bool uniform = true;
  const double h = (g.beta() - g.alpha()) / static_cast<double>(g.n_sigma() - 1);
  for (std::size_t i = 1; i < g.n_sigma(); ++i) {
    if (std::abs(g.sigma()[i] - g.sigma()[i - 1] - h) > 1e-9 * h) uniform = false;
  }
  return json{{"n_sigma", g.n_sigma()},   {"n_x", g.n_x()},       {"sigma_min", g.alpha()},
              {"sigma_max", g.beta()},    {"x_min", g.x().front()}, {"x_max", g.x().back()},
              {"sigma_uniform", uniform}};
}

struct SuiteReport {
  std::string suite;
  json params = json::object();
  json grid = json::object();
  json environment = json::object();
  std::vector<Check> checks;

  void add(std::string id, double residual, double tol, bool lower_bound = false) {
    Check c{std::move(id), residual, tol, lower_bound, false};
    c.pass = std::isfinite(residual) && (lower_bound ? residual >= tol : residual <= tol);
    checks.push_back(std::move(c));
  }

  [[nodiscard]] const Check* find(const std::string& id) const {
    for (const auto& c : checks)
      if (c.id == id) return &c;
    return nullptr;
  }

  [[nodiscard]] bool passed() const {
    return !checks.empty() && std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
  }

  void merge(const SuiteReport& other) { checks.insert(checks.end(), other.checks.begin(), other.checks.end()); }

  [[nodiscard]] std::vector<Check> sorted() const {
    auto v = checks;
    std::stable_sort(v.begin(), v.end(), [](const Check& a, const Check& b) { return a.id < b.id; });
    return v;
  }

  [[nodiscard]] json to_json() const {
    json cs = json::array();
    for (const auto& c : sorted()) {
      cs.push_back(json{{"id", c.id},
                        {"residual", c.residual},
                        {"tol", c.tol},
                        {"bound", c.lower_bound ? "lower" : "upper"},
                        {"pass", c.pass}});
    }
    return json{{"suite", suite},
                {"params", params},
                {"grid", grid},
                {"environment", environment},
                {"checks", cs},
                {"verdict", passed() ? "pass" : "fail"}};
  }

  [[nodiscard]] std::string to_text() const {
    std::size_t w = 5;
    for (const auto& c : checks) w = std::max(w, c.id.size());
    std::ostringstream os;
    os << "suite " << suite << '\n';
    for (const auto& c : sorted()) {
      char buf[96];
      std::snprintf(buf, sizeof buf, "  %-4s  %12.4e  %s %10.3e", c.pass ? "ok" : "FAIL", c.residual,
                    c.lower_bound ? ">=" : "<=", c.tol);
      os << "  " << c.id << std::string(w - c.id.size(), ' ') << buf << '\n';
    }
    os << "verdict " << (passed() ? "pass" : "fail") << '\n';
    return os.str();
  }
};

// ---------------------------------------------------------------------------
// Scalar identities

/// Flow semigroup, variance cocycle, D = C o delta, D(0) = 0, D > 0 and f < 0
/// on a 32^3 lattice (t, s, sigma) in [0,2]^2 x [alpha, beta] for kappa in
/// {0.25, 1, 4}, plus the kappa -> 0 limit.
inline SuiteReport run_scalar_identities(const ModelParams& base, double tol = 1e-12) {
  base.validate();
  SuiteReport r;
  r.suite = "scalar";
  r.params = params_json(base);
  constexpr int n = 32;
  double flow_res = 0.0, cocycle = 0.0, dual = 0.0, zero = 0.0;
  double nonpositive = 0.0, nonnegative_f = 0.0;
  for (double kappa : {0.25, 1.0, 4.0}) {
    ModelParams p = base;
    p.kappa = kappa;
    for (int a = 0; a < n; ++a) {
      const double t = 2.0 * a / (n - 1);
      if (t > 0.0 && !(discriminant(p, t) < 0.0)) nonnegative_f += 1.0;
      for (int b = 0; b < n; ++b) {
        const double s = 2.0 * b / (n - 1);
        for (int c = 0; c < n; ++c) {
          const double sig = p.alpha + (p.beta - p.alpha) * c / (n - 1);
          flow_res = std::max(flow_res, std::abs(flow(p, t, flow(p, s, sig)) - flow(p, t + s, sig)));
          cocycle = std::max(
              cocycle, std::abs(variance(p, t, sig) + variance(p, s, flow(p, t, sig)) - variance(p, t + s, sig)));
          if (b == 0) {
            dual = std::max(dual, std::abs(variance(p, t, sig) - variance_dual(p, t, flow(p, t, sig))));
            if (t == 0.0) zero = std::max(zero, std::abs(variance(p, 0.0, sig)));
            if (t > 0.0 && !(variance(p, t, sig) > 0.0)) nonpositive += 1.0;
          }
        }
      }
    }
  }
  r.add("scalar.flow_semigroup", flow_res, tol);
  r.add("scalar.variance_cocycle", cocycle, tol);
  r.add("scalar.variance_dual_relation", dual, tol);
  r.add("scalar.variance_at_zero", zero, tol);
  r.add("scalar.variance_positive_violations", nonpositive, 0.0);
  r.add("scalar.discriminant_negative_violations", nonnegative_f, 0.0);

  // kappa -> 0: D -> sigma^2 t / 2 (relative).
  ModelParams p = base;
  p.kappa = 1e-12;
  double rel = 0.0;
  for (int a = 1; a <= n; ++a) {
    const double t = 4.0 * a / n;
    for (int c = 0; c < n; ++c) {
      const double sig = p.alpha + (p.beta - p.alpha) * c / (n - 1);
      const double lim = 0.5 * sig * sig * t;
      rel = std::max(rel, std::abs(variance(p, t, sig) - lim) / lim);
    }
  }
  r.add("scalar.small_kappa_limit", rel, 1e-8);
  return r;
}

// ---------------------------------------------------------------------------
// Field identities

/// Smooth test datum scaled to the grid: Gaussian in x (centre of the
/// x-range, width a twelfth of it) times a broad Gaussian in sigma.
inline Field identity_test_field(const std::shared_ptr<const Grid2D>& g) {
  const double xc = 0.5 * (g->x().front() + g->x().back());
  const double xw = (g->x().back() - g->x().front()) / 12.0;
  const double sc = 0.5 * (g->alpha() + g->beta());
  const double sw = g->beta() - g->alpha();
  return sample(g, [&](double s, double x) {
    const double zx = (x - xc) / xw, zs = (s - sc) / sw;
    return std::exp(-0.5 * (zx * zx + zs * zs));
  });
}

/// Semigroup law S(t)S(s) = S(t+s) at t = s = 1/2.
inline double semigroup_law_residual(const ModelParams& p, const Field& h, const QuadratureSpec& q, double t = 0.5,
                                     double s = 0.5) {
  const WeightSpec w{p.lambda};
  const Field a = composite_apply(p, t, composite_apply(p, s, h, q).field, q).field;
  const Field b = composite_apply(p, t + s, h, q).field;
  return weighted_l2_distance(a, b, w) / weighted_l2_norm(h, w);
}

/// e^{D B} e^{tA} h against e^{tA} e^{C B} h.
inline double ordering_residual(const ModelParams& p, double t, const Field& h, const QuadratureSpec& q) {
  const WeightSpec w{p.lambda};
  const Field a = composite_apply(p, t, h, q, Ordering::heat_after_transport).field;
  const Field b = composite_apply(p, t, h, q, Ordering::transport_after_heat).field;
  return weighted_l2_distance(a, b, w) / weighted_l2_norm(h, w);
}

/// e^{tA} e^{gB} h against e^{(g o delta_t) B} e^{tA} h.
inline double cross_commutation_residual(const ModelParams& p, double t, const std::function<double(double)>& g,
                                         const Field& h, const QuadratureSpec& q) {
  const auto sig = h.grid().sigma();
  std::vector<double> gs(sig.size()), gd(sig.size());
  for (std::size_t i = 0; i < sig.size(); ++i) {
    gs[i] = g(sig[i]);
    gd[i] = g(flow(p, t, sig[i]));
  }
  const WeightSpec w{p.lambda};
  const Field a = transport_apply(p, t, heat_apply(gs, h, q).field);
  const Field b = heat_apply(gd, transport_apply(p, t, h), q).field;
  return weighted_l2_distance(a, b, w) / weighted_l2_norm(h, w);
}

/// Scalar identities at 1e-12 plus the field identities (semigroup law,
/// cross-commutation with g = sigma^2 / 4, ordering equivalence at t = 1/4
/// and t = 1) at `tol`, on identity_test_field(g).
inline SuiteReport run_identity_suite(const ModelParams& p, const std::shared_ptr<const Grid2D>& g,
                                      const QuadratureSpec& q, double tol) {
  p.validate();
  g->check_matches(p);
  SuiteReport r = run_scalar_identities(p);
  r.suite = "identities";
  r.grid = grid_json(*g);
  const Field h = identity_test_field(g);
  r.add("field.semigroup_law", semigroup_law_residual(p, h, q), tol);
  r.add("field.cross_commutation", cross_commutation_residual(p, 0.5, [](double s) { return 0.25 * s * s; }, h, q),
        tol);
  r.add("field.ordering_t0.25", ordering_residual(p, 0.25, h, q), tol);
  r.add("field.ordering_t1", ordering_residual(p, 1.0, h, q), tol);
  return r;
}

/// Transport bound ||e^{tA} h|| <= e^{kappa t / 2} ||h||: residual is the
/// ratio ||e^{tA} h|| / (e^{kappa t/2} ||h||), one check per (t, field).
inline SuiteReport check_transport_bound(const ModelParams& p, const std::vector<double>& times,
                                         const std::vector<std::pair<std::string, Field>>& fields,
                                         double slack = 1e-3) {
  SuiteReport r;
  r.suite = "transport_bound";
  r.params = params_json(p);
  if (!fields.empty()) r.grid = grid_json(fields.front().second.grid());
  const WeightSpec w{p.lambda};
  for (const auto& [name, h] : fields) {
    const double hn = weighted_l2_norm(h, w);
    for (double t : times) {
      const double ratio = weighted_l2_norm(transport_apply(p, t, h), w) / hn;
      char id[64];
      std::snprintf(id, sizeof id, "transport.%s.t%g", name.c_str(), t);
      r.add(id, ratio / std::exp(0.5 * p.kappa * t), 1.0 + slack);
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// Hadamard commutation e^{tA} d_sigma = e^{kappa t} d_sigma e^{tA}

/// Analytic sigma-profile: value for complex arguments (complex-step
/// differentiation) and the exact derivative.
struct SigmaProfile {
  std::string name;
  std::function<std::complex<double>(std::complex<double>)> value;
  std::function<double(double)> derivative;

  /// sum_k c_k sigma^k.
  static SigmaProfile polynomial(std::vector<double> c) {
    SigmaProfile pr;
    pr.name = "polynomial";
    pr.value = [c](std::complex<double> s) {
      std::complex<double> acc = 0.0;
      for (std::size_t k = c.size(); k-- > 0;) acc = acc * s + c[k];
      return acc;
    };
    pr.derivative = [c](double s) {
      double acc = 0.0;
      for (std::size_t k = c.size(); k-- > 1;) acc = acc * s + static_cast<double>(k) * c[k];
      return acc;
    };
    return pr;
  }

  static SigmaProfile gaussian(double center, double width) {
    SigmaProfile pr;
    pr.name = "gaussian";
    pr.value = [=](std::complex<double> s) {
      const auto z = (s - center) / width;
      return std::exp(-0.5 * z * z);
    };
    pr.derivative = [=](double s) {
      const double z = (s - center) / width;
      return -z / width * std::exp(-0.5 * z * z);
    };
    return pr;
  }
};

/// max over sigma of | (e^{tA} h')(sigma) - e^{kappa t} d/dsigma [h(delta_t(sigma))] |,
/// the right-hand derivative taken by complex step through the flow.
inline double check_hadamard(const ModelParams& p, double t, const SigmaProfile& h, std::span<const double> sigmas) {
  constexpr double step = 1e-30;
  const double grow = std::exp(p.kappa * t);
  double res = 0.0;
  for (double s : sigmas) {
    const double lhs = h.derivative(flow(p, t, s));
    const double d = std::imag(h.value(flow_generic(p, t, std::complex<double>(s, step)))) / step;
    res = std::max(res, std::abs(lhs - grow * d));
  }
  return res;
}

// ---------------------------------------------------------------------------
// Corrected derivative d_sigma S(t) xi = e^{-kappa t} S(t) d_sigma xi + d_sigma D . B S(t) xi

struct TensorGaussian {
  double sigma_center = 0.3;
  double sigma_width = 0.1;
  double x_center = 0.0;
  double x_width = 0.5;

  [[nodiscard]] double value(double s, double x) const {
    const double a = (s - sigma_center) / sigma_width, b = (x - x_center) / x_width;
    return std::exp(-0.5 * (a * a + b * b));
  }
  [[nodiscard]] double d_sigma(double s, double x) const {
    return -(s - sigma_center) / (sigma_width * sigma_width) * value(s, x);
  }
};

struct CorrectedDerivativeReport {
  std::vector<std::size_t> n_sigma, n_x;
  std::vector<double> residuals;  // relative discrete L2 residual per level
  std::vector<double> orders;     // log2 of successive residual ratios
  [[nodiscard]] double min_order() const {
    return orders.empty() ? 0.0 : *std::min_element(orders.begin(), orders.end());
  }
};

/// Residual field of the corrected-derivative identity on one grid: S(t) xi and
/// S(t) d_sigma xi are Green evaluations; d_sigma and B are centered
/// differences; rows/columns next to the edges are left zero.
inline Field corrected_derivative_residual_field(const ModelParams& p, double t, const TensorGaussian& xi,
                                                 const std::shared_ptr<const Grid2D>& g, const QuadratureSpec& q) {
  const Field u = green_apply(p, t, [&](double s, double x) { return xi.value(s, x); }, g, q);
  const Field v = green_apply(p, t, [&](double s, double x) { return xi.d_sigma(s, x); }, g, q);
  const auto sig = g->sigma();
  const double dx = g->dx();
  const double decay = std::exp(-p.kappa * t);
  Field r(g);
  for (std::size_t i = 1; i + 1 < g->n_sigma(); ++i) {
    const double hm = sig[i] - sig[i - 1], hp = sig[i + 1] - sig[i];
    const double wm = -hp / (hm * (hm + hp)), w0 = (hp - hm) / (hm * hp), wp = hm / (hp * (hm + hp));
    const double dd = variance_dsigma(p, t, sig[i]);
    for (std::size_t j = 1; j + 1 < g->n_x(); ++j) {
      const double lhs = wm * u(i - 1, j) + w0 * u(i, j) + wp * u(i + 1, j);
      const double bu = (u(i, j + 1) - 2.0 * u(i, j) + u(i, j - 1)) / (dx * dx) - (u(i, j + 1) - u(i, j - 1)) / (2.0 * dx);
      r(i, j) = lhs - (decay * v(i, j) + dd * bu);
    }
  }
  return r;
}

/// Runs the identity on `levels` uniform grids, each halving both spacings
/// of the previous one, and reports residuals relative to ||d_sigma S(t) xi||
/// scale (the norm of S(t) d_sigma xi on the finest grid).
inline CorrectedDerivativeReport check_corrected_derivative(const ModelParams& p, double t, const TensorGaussian& xi,
                                                            std::size_t n_sigma, std::size_t n_x, double x_min,
                                                            double x_max, const QuadratureSpec& q, int levels = 3) {
  CorrectedDerivativeReport rep;
  const WeightSpec w{p.lambda};
  for (int l = 0; l < levels; ++l) {
    const auto g = make_grid(Grid2D::uniform(p.alpha, p.beta, n_sigma, x_min, x_max, n_x));
    const Field res = corrected_derivative_residual_field(p, t, xi, g, q);
    const Field ref = green_apply(p, t, [&](double s, double x) { return xi.d_sigma(s, x); }, g, q);
    rep.n_sigma.push_back(n_sigma);
    rep.n_x.push_back(n_x);
    rep.residuals.push_back(weighted_l2_norm(res, w) / weighted_l2_norm(ref, w));
    n_sigma = 2 * n_sigma - 1;
    n_x = 2 * n_x - 1;
  }
  for (std::size_t k = 1; k < rep.residuals.size(); ++k) {
    rep.orders.push_back(std::log2(rep.residuals[k - 1] / rep.residuals[k]));
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Oracle chain: closed form vs dense exponential vs Crank-Nicolson (L0)

struct OracleDistances {
  double closed_vs_expm = 0.0;
  double closed_vs_cn = 0.0;
  double expm_vs_cn = 0.0;
};

/// Datum for the oracle chain: Gaussian in x (width a twelfth of the range,
/// so the Dirichlet truncation at the x-edges stays below 1e-7) times a
/// Gaussian in sigma.
inline std::function<double(double, double)> oracle_datum(const Grid2D& g) {
  const double xc = 0.5 * (g.x().front() + g.x().back());
  const double xw = (g.x().back() - g.x().front()) / 12.0;
  const double sc = 0.5 * (g.alpha() + g.beta());
  const double sw = 0.5 * (g.beta() - g.alpha());
  return [=](double s, double x) {
    const double a = (x - xc) / xw, b = (s - sc) / sw;
    return std::exp(-0.5 * (a * a + b * b));
  };
}

inline OracleDistances oracle_distances(const ModelParams& p, const std::shared_ptr<const Grid2D>& g, double t,
                                        const ThetaScheme& scheme, const QuadratureSpec& q) {
  const auto f = oracle_datum(*g);
  Field h = sample(g, f);
  for (std::size_t i = 0; i < g->n_sigma(); ++i) h(i, 0) = h(i, g->n_x() - 1) = 0.0;
  const FDOperator op = assemble(p, g, Generator::L0);
  const Field closed = green_apply(p, t, f, g, q);
  const Field ex = expm_apply(op, expm_oracle(op, t), h);
  const Field cn = solve_to(op, scheme, h, t);
  const WeightSpec w{p.lambda};
  const double hn = weighted_l2_norm(h, w);
  return {weighted_l2_distance(closed, ex, w) / hn, weighted_l2_distance(closed, cn, w) / hn,
          weighted_l2_distance(ex, cn, w) / hn};
}

/// Pairwise distances on `g` (<= tol) and their shrink factor against a grid
/// with half the nodes per axis (>= shrink).
inline SuiteReport run_oracle_suite(const ModelParams& p, const std::shared_ptr<const Grid2D>& g, double t,
                                    const ThetaScheme& scheme, const QuadratureSpec& q, double tol = 5e-4,
                                    double shrink = 3.5) {
  SuiteReport r;
  r.suite = "oracle";
  r.params = params_json(p);
  r.grid = grid_json(*g);
  r.environment = json{{"t", t}, {"dt", scheme.dt}};
  const auto coarse = make_grid(Grid2D::uniform(p.alpha, p.beta, g->n_sigma() / 2, g->x().front(), g->x().back(),
                                                g->n_x() / 2));
  const OracleDistances fine = oracle_distances(p, g, t, scheme, q);
  const OracleDistances crs = oracle_distances(p, coarse, t, scheme, q);
  r.add("oracle.closed_vs_expm", fine.closed_vs_expm, tol);
  r.add("oracle.closed_vs_cn", fine.closed_vs_cn, tol);
  r.add("oracle.expm_vs_cn", fine.expm_vs_cn, tol);
  r.add("oracle.closed_vs_expm.shrink", crs.closed_vs_expm / fine.closed_vs_expm, shrink, true);
  r.add("oracle.closed_vs_cn.shrink", crs.closed_vs_cn / fine.closed_vs_cn, shrink, true);
  return r;
}

// ---------------------------------------------------------------------------
// Garding

inline SuiteReport run_garding_suite(const ModelParams& p, const std::shared_ptr<const Grid2D>& g,
                                     std::size_t trials, std::uint64_t seed) {
  SuiteReport r;
  r.suite = "garding";
  r.params = params_json(p);
  r.grid = grid_json(*g);
  r.environment = json{{"trials", trials}, {"seed", seed}};
  constexpr double tiny = std::numeric_limits<double>::min();
  constexpr double finite = std::numeric_limits<double>::max();

  const FDOperator l = assemble(p, g, Generator::L, true);
  const GardingReport gl = garding_check(l, trials, seed);
  r.add("garding.L.c1", gl.c1, tiny, true);
  r.add("garding.L.c2", gl.c2, finite);
  r.add("garding.L.holds", gl.holds ? 0.0 : 1.0, 0.0);
  const GardingReport again = garding_check(l, trials, seed);
  r.add("garding.L.reproducible",
        std::abs(again.mu - gl.mu) + std::abs(again.c1 - gl.c1) + std::abs(again.c2 - gl.c2), 0.0);

  // B is dissipative; A is bounded by kappa/2 up to discretization.
  const GardingReport gb = garding_check(assemble(p, g, Generator::B), trials, seed);
  r.add("garding.B.c2", gb.c2, 1e-10);
  const GardingReport ga = garding_check(assemble(p, g, Generator::A), trials, seed);
  r.add("garding.A.mu_over_half_kappa", ga.mu / (0.5 * p.kappa), 1.05);
  return r;
}

// ---------------------------------------------------------------------------
// Smoothing decay of d_x^k S(t) h

struct SmoothingFit {
  int k = 0;
  std::vector<double> times, ratios;
  double exponent = 0.0;
  bool bound_ok = false;  // exponent >= -k/2 - 0.15
};

struct SmoothingReport {
  std::vector<SmoothingFit> fits;
};

/// Ordinary least squares slope of y against x.
inline double ols_slope(std::span<const double> x, std::span<const double> y) {
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    mx += x[k];
    my += y[k];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxy += (x[k] - mx) * (y[k] - my);
    sxx += (x[k] - mx) * (x[k] - mx);
  }
  return sxy / sxx;
}

/// Centered k-th x-difference (k <= 2), zero on the outer columns.
inline Field x_derivative(const Field& u, int k) {
  if (k == 0) return u;
  const Grid2D& g = u.grid();
  const double dx = g.dx();
  Field d(u.grid_ptr());
  for (std::size_t i = 0; i < g.n_sigma(); ++i)
    for (std::size_t j = 1; j + 1 < g.n_x(); ++j) {
      d(i, j) = k == 1 ? (u(i, j + 1) - u(i, j - 1)) / (2.0 * dx)
                       : (u(i, j + 1) - 2.0 * u(i, j) + u(i, j - 1)) / (dx * dx);
    }
  return d;
}

/// ||d_x^k S(t) h|| / ||h|| at t = 2^-8, ..., 2^-1 and the fitted log-log
/// exponent for each k.
inline SmoothingReport check_smoothing_decay(const ModelParams& p, const Field& h, const QuadratureSpec& q,
                                             const std::vector<int>& ks = {0, 1, 2}) {
  for (int k : ks)
    if (k < 0 || k > 2) throw std::invalid_argument("check_smoothing_decay: k must be 0, 1 or 2");
  const WeightSpec w{p.lambda};
  const double hn = weighted_l2_norm(h, w);
  std::vector<double> times;
  for (int e = 8; e >= 1; --e) times.push_back(std::ldexp(1.0, -e));
  std::vector<Field> states;
  for (double t : times) states.push_back(composite_apply(p, t, h, q).field);
  SmoothingReport rep;
  for (int k : ks) {
    SmoothingFit f;
    f.k = k;
    f.times = times;
    std::vector<double> lt, lr;
    for (std::size_t n = 0; n < times.size(); ++n) {
      f.ratios.push_back(weighted_l2_norm(x_derivative(states[n], k), w) / hn);
      lt.push_back(std::log(times[n]));
      lr.push_back(std::log(f.ratios.back()));
    }
    f.exponent = ols_slope(lt, lr);
    f.bound_ok = f.exponent >= -0.5 * k - 0.15;
    rep.fits.push_back(std::move(f));
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Error-vs-volvol study

struct ErrorStudyReport {
  enum class Status { valid, smallest_excluded, invalid };

  ModelParams params;
  double t = 0.0;
  ThetaScheme scheme;
  json grid = json::object();
  std::vector<double> nu_values;
  std::vector<double> errors;      // ||u_L - S(t) h||, discrete L2_lambda
  std::vector<bool> used_in_fit;   // e_nu > 5 fd_floor
  double fd_floor = 0.0;           // ||u_{L0} - S(t) h|| from the same solver
  std::optional<double> fitted_slope;
  double h_norm = 0.0;
  double h_dsigma_norm = 0.0;
  double constant_estimate = 0.0;  // max e / (nu (||h|| + nu ||d_sigma h||))
  double constant_intro = 0.0;     // max e / (nu (||h|| + ||d_sigma h||))
  Status status = Status::invalid;
  std::string message;

  [[nodiscard]] static const char* to_string(Status s) {
    switch (s) {
      case Status::valid: return "valid";
      case Status::smallest_excluded: return "smallest_excluded";
      case Status::invalid: return "invalid";
    }
    return "?";
  }

  [[nodiscard]] bool floor_clear() const {
    return !errors.empty() && fd_floor < *std::min_element(errors.begin(), errors.end()) / 5.0;
  }

  [[nodiscard]] json to_json() const {
    json pts = json::array();
    for (std::size_t k = 0; k < nu_values.size(); ++k) {
      pts.push_back(json{{"nu", nu_values[k]}, {"error", errors[k]}, {"used_in_fit", static_cast<bool>(used_in_fit[k])}});
    }
    return json{{"suite", "error_study"},
                {"params", params_json(params)},
                {"grid", grid},
                {"t", t},
                {"dt", scheme.dt},
                {"theta_weight", scheme.theta_weight},
                {"points", pts},
                {"fd_floor", fd_floor},
                {"fitted_slope", fitted_slope ? json(*fitted_slope) : json(nullptr)},
                {"h_norm", h_norm},
                {"h_dsigma_norm", h_dsigma_norm},
                {"constant_estimate", constant_estimate},
                {"constant_intro", constant_intro},
                {"status", to_string(status)},
                {"message", message}};
  }
};

/// Weighted norm of the sigma-derivative of h (centered, one-sided at the edges).
inline double dsigma_norm(const Field& h, const WeightSpec& w) {
  const Grid2D& g = h.grid();
  const auto s = g.sigma();
  const std::size_t n = g.n_sigma();
  Field d(h.grid_ptr());
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t a = i == 0 ? 0 : i - 1, b = i + 1 == n ? n - 1 : i + 1;
    for (std::size_t j = 0; j < g.n_x(); ++j) d(i, j) = (h(b, j) - h(a, j)) / (s[b] - s[a]);
  }
  return weighted_l2_norm(d, w);
}

/// For each nu: Crank-Nicolson (or the given theta-scheme) solve of du/dt = L u
/// to t, distance to the closed-form S(t) h. fd_floor is the same distance for
/// the nu = 0 generator. The slope is fitted over points with e > 5 fd_floor;
/// the study is invalid if any point other than the smallest nu is excluded or
/// fewer than two points remain.
inline ErrorStudyReport run_error_study(const ModelParams& p_base, const std::vector<double>& nu_list, double t,
                                        const std::shared_ptr<const Grid2D>& g, const ThetaScheme& scheme,
                                        const Field& h, const QuadratureSpec& q = {}) {
  p_base.validate();
  if (nu_list.empty()) throw std::invalid_argument("run_error_study: empty nu list");
  for (std::size_t k = 0; k < nu_list.size(); ++k) {
    if (!(nu_list[k] > 0.0) || (k > 0 && !(nu_list[k] > nu_list[k - 1]))) {
      throw std::invalid_argument("run_error_study: nu values must be positive and strictly increasing");
    }
  }
  if (!(t > 0.0)) throw std::invalid_argument("run_error_study: t must be > 0");
  ErrorStudyReport rep;
  rep.params = p_base;
  rep.t = t;
  rep.scheme = scheme;
  rep.grid = grid_json(*g);
  rep.nu_values = nu_list;
  const WeightSpec w{p_base.lambda};
  const Field reference = composite_apply(p_base.with_nu(0.0), t, h, q).field;
  rep.h_norm = weighted_l2_norm(h, w);
  rep.h_dsigma_norm = dsigma_norm(h, w);

  const Field u0 = solve_to(assemble(p_base.with_nu(0.0), g, Generator::L0), scheme, h, t);
  rep.fd_floor = weighted_l2_distance(u0, reference, w);
  for (double nu : nu_list) {
    const Field u = solve_to(assemble(p_base.with_nu(nu), g, Generator::L), scheme, h, t);
    rep.errors.push_back(weighted_l2_distance(u, reference, w));
  }

  std::vector<double> lx, ly;
  std::size_t excluded = 0;
  for (std::size_t k = 0; k < nu_list.size(); ++k) {
    const bool use = rep.errors[k] > 5.0 * rep.fd_floor;
    rep.used_in_fit.push_back(use);
    if (use) {
      lx.push_back(std::log(nu_list[k]));
      ly.push_back(std::log(rep.errors[k]));
    } else {
      ++excluded;
    }
    const double nu = nu_list[k];
    rep.constant_estimate = std::max(rep.constant_estimate, rep.errors[k] / (nu * (rep.h_norm + nu * rep.h_dsigma_norm)));
    rep.constant_intro = std::max(rep.constant_intro, rep.errors[k] / (nu * (rep.h_norm + rep.h_dsigma_norm)));
  }
  if (lx.size() >= 2) rep.fitted_slope = ols_slope(lx, ly);

  const bool only_smallest = excluded == 1 && !rep.used_in_fit.front();
  if (excluded == 0) {
    rep.status = ErrorStudyReport::Status::valid;
  } else if (only_smallest && (lx.size() >= 2 || nu_list.size() == 1)) {
    rep.status = ErrorStudyReport::Status::smallest_excluded;
    rep.message = "smallest nu point is within 5x of the discretization floor and was left out of the fit";
  } else {
    rep.status = ErrorStudyReport::Status::invalid;
    rep.message = "discretization floor contaminates more than the smallest nu point; refine the grid";
  }
  if (nu_list.size() == 1 && rep.status != ErrorStudyReport::Status::invalid) rep.message = "single nu value: no slope";
  return rep;
}

/// The default study: kappa = 1, theta = 0.2, I = (0.05, 0.6), rho = 0.3,
/// lambda = 0, t = 1, h = Gaussian in x (centre 0, width 0.5) times a smooth
/// bump in sigma supported in [0.15, 0.45]. The sigma grid is graded toward
/// beta, where the nu > 0 solution has a Dirichlet layer of width ~ nu^2.
struct StudySetup {
  ModelParams params;
  std::shared_ptr<const Grid2D> grid;
  Field h;
  double t = 1.0;
  ThetaScheme scheme;
  std::vector<double> nu_list;
};

inline Field study_datum(const std::shared_ptr<const Grid2D>& g, double x_width, double sigma_lo, double sigma_hi) {
  Field h = sample(g, [&](double s, double x) {
    const double z = x / x_width;
    return std::exp(-0.5 * z * z) * smooth_bump(s, sigma_lo, sigma_hi);
  });
  for (std::size_t i = 0; i < g->n_sigma(); ++i) h(i, 0) = h(i, g->n_x() - 1) = 0.0;
  return h;
}

inline StudySetup default_study(double dt = 0.01) {
  ModelParams p;
  p.kappa = 1.0;
  p.theta = 0.2;
  p.alpha = 0.05;
  p.beta = 0.6;
  p.rho = 0.3;
  p.lambda = 0.0;
  auto g = make_grid(Grid2D(Grid2D::graded_toward_end(0.05, 0.6, 111, 1e-4, 1.1), Grid2D::linspace(-4.0, 4.0, 81)));
  Field h = study_datum(g, 0.5, 0.15, 0.45);
  return StudySetup{p, g, std::move(h), 1.0, ThetaScheme{0.5, dt, 1e-12}, {0.05, 0.1, 0.2, 0.4}};
}

}  // namespace lsabr
