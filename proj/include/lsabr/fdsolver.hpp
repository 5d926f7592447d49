#pragma once

// Finite-difference discretization of the lambda-SABR generators on the strip
// [alpha, beta] x [x_min, x_max]:
//
//   A  = kappa (theta - sigma) d_sigma
//   B  = d_x^2 - d_x
//   L0 = A + sigma^2/2 B
//   L1 = rho sigma^2 d_x d_sigma
//   L2 = sigma^2/2 d_sigma^2
//   L  = L0 + nu L1 + nu^2 L2
//
// Second-order centered stencils throughout (three-point non-uniform formulas
// in sigma). Unknowns are ordered sigma-major. The x-edges are always
// Dirichlet. The sigma-edges are Dirichlet for generators carrying sigma
// diffusion (L with nu > 0, L1, L2); for the first-order-in-sigma generators
// (A, B, L0, and L at nu = 0) both sigma-edges are outflow boundaries of the
// transport and their rows are unknowns discretized with first-order
// one-sided differences pointing into the strip.

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "lsabr/banded.hpp"
#include "lsabr/model.hpp"

namespace lsabr {

enum class Generator { L, L0, A, B, L1, L2 };

inline std::string to_string(Generator g) {
  switch (g) {
    case Generator::L: return "L";
    case Generator::L0: return "L0";
    case Generator::A: return "A";
    case Generator::B: return "B";
    case Generator::L1: return "L1";
    case Generator::L2: return "L2";
  }
  return "?";
}

inline Generator parse_generator(const std::string& s) {
  for (Generator g : {Generator::L, Generator::L0, Generator::A, Generator::B, Generator::L1, Generator::L2}) {
    if (to_string(g) == s) return g;
  }
  throw std::invalid_argument("unknown generator '" + s + "' (expected L, L0, A, B, L1 or L2)");
}

/// Sparse stencil over active nodes (CSR). Column indices address the full
/// grid so that boundary nodes can be read from any field.
class FDOperator {
 public:
  [[nodiscard]] const ModelParams& params() const { return params_; }
  [[nodiscard]] Generator generator() const { return which_; }
  [[nodiscard]] const Grid2D& grid() const { return *grid_; }
  [[nodiscard]] const std::shared_ptr<const Grid2D>& grid_ptr() const { return grid_; }
  [[nodiscard]] const Field& boundary_values() const { return bc_; }

  /// Active sigma rows are [sigma_first, sigma_last]; active x columns are 1..n_x-2.
  [[nodiscard]] std::size_t sigma_first() const { return s0_; }
  [[nodiscard]] std::size_t sigma_last() const { return s1_; }
  [[nodiscard]] std::size_t n_x_active() const { return grid_->n_x() - 2; }
  [[nodiscard]] std::size_t n_unknowns() const { return (s1_ - s0_ + 1) * n_x_active(); }
  /// Half-bandwidth of the unknown-to-unknown matrix (n_x_active + 1 for the
  /// nine-point stencil).
  [[nodiscard]] std::size_t bandwidth() const {
    std::size_t bw = 0;
    for_each_interior_entry([&](std::size_t r, std::size_t c, double) { bw = std::max(bw, r > c ? r - c : c - r); });
    return bw;
  }

  [[nodiscard]] bool is_active(std::size_t i, std::size_t j) const {
    return i >= s0_ && i <= s1_ && j >= 1 && j + 1 < grid_->n_x();
  }
  [[nodiscard]] std::size_t unknown(std::size_t i, std::size_t j) const { return (i - s0_) * n_x_active() + (j - 1); }
  [[nodiscard]] std::size_t node_of_unknown(std::size_t r) const {
    return (s0_ + r / n_x_active()) * grid_->n_x() + 1 + r % n_x_active();
  }

  /// Stencil of unknown r as (full-grid node, coefficient) pairs.
  [[nodiscard]] std::span<const std::size_t> row_nodes(std::size_t r) const {
    return {cols_.data() + ptr_[r], ptr_[r + 1] - ptr_[r]};
  }
  [[nodiscard]] std::span<const double> row_coeffs(std::size_t r) const {
    return {vals_.data() + ptr_[r], ptr_[r + 1] - ptr_[r]};
  }

  /// Stencil applied at active nodes to u (boundary nodes read from u);
  /// inactive nodes of the result are zero.
  [[nodiscard]] Field apply(const Field& u) const {
    u.require_same_grid(bc_);
    Field out(grid_);
    const auto& v = u.values();
    for (std::size_t r = 0; r < n_unknowns(); ++r) {
      double s = 0.0;
      for (std::size_t k = ptr_[r]; k < ptr_[r + 1]; ++k) s += vals_[k] * v[cols_[k]];
      out.values()[node_of_unknown(r)] = s;
    }
    return out;
  }

  /// Dense unknown-to-unknown matrix (boundary columns dropped).
  [[nodiscard]] Eigen::MatrixXd to_dense() const {
    const std::size_t n = n_unknowns();
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for_each_interior_entry([&](std::size_t r, std::size_t c, double v) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) += v;
    });
    return m;
  }

  /// Constant forcing from the Dirichlet data: du/dt = M u + g.
  [[nodiscard]] std::vector<double> boundary_forcing() const {
    std::vector<double> g(n_unknowns(), 0.0);
    const std::size_t nx = grid_->n_x();
    for (std::size_t r = 0; r < n_unknowns(); ++r) {
      for (std::size_t k = ptr_[r]; k < ptr_[r + 1]; ++k) {
        const std::size_t node = cols_[k];
        if (!is_active(node / nx, node % nx)) g[r] += vals_[k] * bc_.values()[node];
      }
    }
    return g;
  }

  [[nodiscard]] bool zero_boundary() const {
    return std::all_of(bc_.values().begin(), bc_.values().end(), [](double v) { return v == 0.0; });
  }

  template <class F>
  void for_each_interior_entry(F&& f) const {
    const std::size_t nx = grid_->n_x();
    for (std::size_t r = 0; r < n_unknowns(); ++r) {
      for (std::size_t k = ptr_[r]; k < ptr_[r + 1]; ++k) {
        const std::size_t i = cols_[k] / nx, j = cols_[k] % nx;
        if (is_active(i, j)) f(r, unknown(i, j), vals_[k]);
      }
    }
  }

  /// max_r (|m_rr| + sum_{c != r} |m_rc|) over unknown-to-unknown entries.
  [[nodiscard]] double gershgorin_bound() const {
    std::vector<double> s(n_unknowns(), 0.0);
    for_each_interior_entry([&](std::size_t r, std::size_t, double v) { s[r] += std::abs(v); });
    return s.empty() ? 0.0 : *std::max_element(s.begin(), s.end());
  }

  /// Unknown vector <-> field (inactive nodes taken from the boundary data).
  [[nodiscard]] std::vector<double> gather(const Field& u) const {
    std::vector<double> v(n_unknowns());
    for (std::size_t r = 0; r < v.size(); ++r) v[r] = u.values()[node_of_unknown(r)];
    return v;
  }
  [[nodiscard]] Field scatter(std::span<const double> v) const {
    Field u = bc_;
    for (std::size_t r = 0; r < v.size(); ++r) u.values()[node_of_unknown(r)] = v[r];
    return u;
  }

 private:
  friend FDOperator assemble(const ModelParams&, const std::shared_ptr<const Grid2D>&, Generator, bool,
                             std::optional<Field>);
  FDOperator(ModelParams p, std::shared_ptr<const Grid2D> g, Generator w)
      : params_(p), which_(w), grid_(std::move(g)), bc_(grid_) {}

  ModelParams params_;
  Generator which_;
  std::shared_ptr<const Grid2D> grid_;
  Field bc_;
  std::size_t s0_ = 0, s1_ = 0;
  std::vector<std::size_t> ptr_{0};
  std::vector<std::size_t> cols_;
  std::vector<double> vals_;
};

namespace detail {

/// Three-point weights (w_minus, w_0, w_plus) on a non-uniform stencil.
struct ThreePoint {
  double m, c, p;
};

inline ThreePoint centered_first(double hm, double hp) {
  return {-hp / (hm * (hm + hp)), (hp - hm) / (hm * hp), hm / (hp * (hm + hp))};
}

inline ThreePoint centered_second(double hm, double hp) {
  return {2.0 / (hm * (hm + hp)), -2.0 / (hm * hp), 2.0 / (hp * (hm + hp))};
}

/// First-derivative stencil in sigma at row i as (row index, weight) triples;
/// edge rows get a two-point one-sided difference (third weight zero).
inline std::array<std::pair<std::size_t, double>, 3> sigma_first(std::span<const double> s, std::size_t i) {
  const std::size_t n = s.size();
  if (i == 0) {
    const double h = s[1] - s[0];
    return {{{0, -1.0 / h}, {1, 1.0 / h}, {1, 0.0}}};
  }
  if (i == n - 1) {
    const double h = s[n - 1] - s[n - 2];
    return {{{n - 1, 1.0 / h}, {n - 2, -1.0 / h}, {n - 2, 0.0}}};
  }
  const auto w = centered_first(s[i] - s[i - 1], s[i + 1] - s[i]);
  return {{{i - 1, w.m}, {i, w.c}, {i + 1, w.p}}};
}

}  // namespace detail

/// Builds the discrete generator. With `require_elliptic`, which = L demands
/// nu > 0 (the diffusion determinant nu^2 sigma^4 (1 - rho^2) / 4 must be
/// positive). `boundary` supplies Dirichlet data; default zero.
inline FDOperator assemble(const ModelParams& p, const std::shared_ptr<const Grid2D>& grid, Generator which,
                           bool require_elliptic = false, std::optional<Field> boundary = std::nullopt) {
  p.validate();
  grid->check_matches(p);
  if (require_elliptic && which == Generator::L && !(p.nu > 0.0)) {
    throw std::invalid_argument("assemble: L is degenerate at nu = 0; use L0");
  }
  const Grid2D& g = *grid;
  if (g.n_sigma() < 3 || g.n_x() < 3) throw std::invalid_argument("assemble: grid too small");

  FDOperator op(p, grid, which);
  if (boundary) {
    boundary->require_same_grid(op.bc_);
    op.bc_ = *boundary;
  }

  const bool sigma_diffusive =
      which == Generator::L1 || which == Generator::L2 || (which == Generator::L && p.nu > 0.0);
  op.s0_ = sigma_diffusive ? 1 : 0;
  op.s1_ = sigma_diffusive ? g.n_sigma() - 2 : g.n_sigma() - 1;

  const bool use_a = which == Generator::A || which == Generator::L0 || which == Generator::L;
  const bool use_b = which == Generator::B || which == Generator::L0 || which == Generator::L;
  const double b_scale_fixed = which == Generator::B ? 1.0 : -1.0;  // < 0: use sigma^2/2
  double l1 = 0.0, l2 = 0.0;
  if (which == Generator::L1) l1 = 1.0;
  if (which == Generator::L2) l2 = 1.0;
  if (which == Generator::L) {
    l1 = p.nu;
    l2 = p.nu * p.nu;
  }

  const auto sig = g.sigma();
  const std::size_t nx = g.n_x();
  const double hx = g.dx();
  const double cxx = 1.0 / (hx * hx);
  const double cx = 1.0 / (2.0 * hx);

  std::vector<std::pair<std::size_t, double>> entries;
  for (std::size_t i = op.s0_; i <= op.s1_; ++i) {
    const double s = sig[i];
    const double s2 = s * s;
    const auto ds = detail::sigma_first(sig, i);
    for (std::size_t j = 1; j + 1 < nx; ++j) {
      entries.clear();
      auto add = [&](std::size_t ii, std::size_t jj, double v) { entries.emplace_back(ii * nx + jj, v); };
      if (use_a) {
        const double a = p.kappa * (p.theta - s);
        for (const auto& [ii, w] : ds) add(ii, j, a * w);
      }
      if (use_b) {
        const double b = b_scale_fixed > 0.0 ? b_scale_fixed : 0.5 * s2;
        add(i, j - 1, b * (cxx + cx));
        add(i, j, -2.0 * b * cxx);
        add(i, j + 1, b * (cxx - cx));
      }
      if (l1 != 0.0) {
        const double c = l1 * p.rho * s2;
        for (const auto& [ii, w] : ds) {
          add(ii, j + 1, c * w * cx);
          add(ii, j - 1, -c * w * cx);
        }
      }
      if (l2 != 0.0) {
        const auto w = detail::centered_second(s - sig[i - 1], sig[i + 1] - s);
        const double c = l2 * 0.5 * s2;
        add(i - 1, j, c * w.m);
        add(i, j, c * w.c);
        add(i + 1, j, c * w.p);
      }
      std::sort(entries.begin(), entries.end());
      std::size_t start = op.cols_.size();
      for (const auto& [node, v] : entries) {
        if (op.cols_.size() > start && op.cols_.back() == node) {
          op.vals_.back() += v;
        } else {
          op.cols_.push_back(node);
          op.vals_.push_back(v);
        }
      }
      op.ptr_.push_back(op.cols_.size());
    }
  }
  return op;
}

inline FDOperator assemble(const ModelParams& p, const Grid2D& grid, Generator which) {
  return assemble(p, make_grid(grid), which);
}

// ---------------------------------------------------------------------------
// Time stepping

struct ThetaScheme {
  double theta_weight = 0.5;  // 0 explicit, 1/2 Crank-Nicolson, 1 implicit
  double dt = 1e-3;
  double solver_tolerance = 1e-12;

  void validate() const {
    if (!(theta_weight >= 0.0 && theta_weight <= 1.0)) throw std::invalid_argument("ThetaScheme: weight in [0,1]");
    if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("ThetaScheme: dt must be > 0");
  }
};

/// Number of steps of size close to `dt` that land exactly on `t`.
inline std::size_t steps_for(double t, double dt) {
  return static_cast<std::size_t>(std::max(1.0, std::ceil(t / dt - 1e-9)));
}

namespace detail {

inline double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace detail

namespace detail {

/// Unknown-to-unknown part of an FDOperator in CSR form.
struct UnknownMatrix {
  std::vector<std::size_t> ptr{0};
  std::vector<std::size_t> col;
  std::vector<double> val;

  explicit UnknownMatrix(const FDOperator& op) {
    std::size_t row = 0;
    op.for_each_interior_entry([&](std::size_t r, std::size_t c, double v) {
      while (row < r) {
        ptr.push_back(col.size());
        ++row;
      }
      col.push_back(c);
      val.push_back(v);
    });
    while (ptr.size() < op.n_unknowns() + 1) ptr.push_back(col.size());
  }

  void multiply(std::span<const double> x, std::span<double> y) const {
    for (std::size_t r = 0; r + 1 < ptr.size(); ++r) {
      double s = 0.0;
      for (std::size_t k = ptr[r]; k < ptr[r + 1]; ++k) s += val[k] * x[col[k]];
      y[r] = s;
    }
  }
};

}  // namespace detail

/// Reusable theta-scheme propagator: factorizes I - theta dt M once.
class ThetaStepper {
 public:
  ThetaStepper(const FDOperator& op, const ThetaScheme& scheme)
      : op_(op), scheme_(scheme), forcing_(op.boundary_forcing()), m_(op) {
    scheme.validate();
    const std::size_t n = op.n_unknowns();
    const std::size_t bw = std::max<std::size_t>(op.bandwidth(), 1);
    if (scheme.theta_weight < 0.5) {
      const double bound = op.gershgorin_bound();
      if (scheme.dt * (1.0 - 2.0 * scheme.theta_weight) * bound > 2.0) {
        throw std::invalid_argument("ThetaScheme: dt violates the explicit stability bound " +
                                    std::to_string(2.0 / ((1.0 - 2.0 * scheme.theta_weight) * bound)));
      }
    }
    if (scheme.theta_weight > 0.0) {
      BandedMatrix lhs(n, bw, bw);
      for (std::size_t r = 0; r < n; ++r) lhs.at(r, r) = 1.0;
      op.for_each_interior_entry(
          [&](std::size_t r, std::size_t c, double v) { lhs.at(r, c) -= scheme.theta_weight * scheme.dt * v; });
      lu_.emplace(std::move(lhs));
    }
  }

  /// Advances u by n_steps; u must carry the operator's boundary values.
  [[nodiscard]] Field advance(const Field& u, std::size_t n_steps) const {
    const Field& bc = op_.boundary_values();
    u.require_same_grid(bc);
    const double scale = std::max(1.0, u.max_abs());
    const std::size_t nx = u.n_x();
    for (std::size_t k = 0; k < u.values().size(); ++k) {
      if (!op_.is_active(k / nx, k % nx) && std::abs(u.values()[k] - bc.values()[k]) > 1e-12 * scale) {
        throw std::invalid_argument("step: initial field does not match the Dirichlet data");
      }
    }
    const double th = scheme_.theta_weight;
    const double dt = scheme_.dt;
    std::vector<double> x = op_.gather(u);
    std::vector<double> b(x.size()), r(x.size()), mx(x.size());
    // r = b - (I - theta dt M) x
    auto residual = [&] {
      m_.multiply(x, mx);
      for (std::size_t k = 0; k < r.size(); ++k) r[k] = b[k] - (x[k] - th * dt * mx[k]);
      return detail::max_abs(r);
    };
    for (std::size_t s = 0; s < n_steps; ++s) {
      m_.multiply(x, mx);
      for (std::size_t k = 0; k < b.size(); ++k) b[k] = x[k] + (1.0 - th) * dt * mx[k] + dt * forcing_[k];
      x = b;
      if (lu_) {
        lu_->solve(x);
        const double tol = scheme_.solver_tolerance * std::max(detail::max_abs(b), std::numeric_limits<double>::min());
        if (residual() > tol) {
          lu_->solve(r);
          for (std::size_t k = 0; k < r.size(); ++k) x[k] += r[k];
          if (residual() > tol) throw std::runtime_error("step: linear solve did not reach the residual tolerance");
        }
      }
      for (double v : x) {
        if (!std::isfinite(v)) throw std::runtime_error("step: non-finite value at step " + std::to_string(s + 1));
      }
    }
    return op_.scatter(x);
  }

 private:
  FDOperator op_;
  ThetaScheme scheme_;
  std::vector<double> forcing_;
  detail::UnknownMatrix m_;
  std::optional<BandedLU> lu_;
};

/// n_steps of the theta-scheme for du/dt = L_h u.
inline Field step(const FDOperator& op, const ThetaScheme& scheme, const Field& u, std::size_t n_steps) {
  return ThetaStepper(op, scheme).advance(u, n_steps);
}

/// Integrates to horizon t with steps of (at most) scheme.dt.
inline Field solve_to(const FDOperator& op, ThetaScheme scheme, const Field& u, double t) {
  const std::size_t n = steps_for(t, scheme.dt);
  scheme.dt = t / static_cast<double>(n);
  return step(op, scheme, u, n);
}

// ---------------------------------------------------------------------------
// Dense matrix-exponential oracle

inline constexpr std::size_t kExpmMaxUnknowns = 4000;

/// e^{t M} on the unknowns by scaling and squaring with a Pade approximant.
inline Eigen::MatrixXd expm_oracle(const FDOperator& op, double t) {
  if (op.n_unknowns() > kExpmMaxUnknowns) {
    throw std::invalid_argument("expm_oracle: " + std::to_string(op.n_unknowns()) + " unknowns exceeds the limit of " +
                                std::to_string(kExpmMaxUnknowns));
  }
  if (!(t >= 0.0)) throw std::invalid_argument("expm_oracle: t must be >= 0");
  const Eigen::MatrixXd m = op.to_dense();
  if (t == 0.0) return Eigen::MatrixXd::Identity(m.rows(), m.cols());
  return (t * m).exp();
}

/// Applies a propagator from expm_oracle to a field (zero Dirichlet data only).
inline Field expm_apply(const FDOperator& op, const Eigen::MatrixXd& e, const Field& u) {
  if (!op.zero_boundary()) throw std::invalid_argument("expm_apply: requires zero Dirichlet data");
  const std::vector<double> v = op.gather(u);
  const Eigen::Map<const Eigen::VectorXd> x(v.data(), static_cast<Eigen::Index>(v.size()));
  const Eigen::VectorXd y = e * x;
  return op.scatter(std::span<const double>(y.data(), static_cast<std::size_t>(y.size())));
}

// ---------------------------------------------------------------------------
// Discrete quasi-dissipativity / Garding check

struct GardingReport {
  std::size_t trials = 0;
  /// max over trials of (L u, u) / ||u||^2: the quasi-dissipativity constant.
  double mu = 0.0;
  /// Garding constants: (L u, u) <= -c1 |u|_{H1}^2 + c2 ||u||^2 on every trial.
  double c1 = 0.0;
  double c2 = 0.0;
  bool holds = false;
};

namespace detail {

/// Node weights of the weighted L2 inner product (trapezoid x e^{-2 lambda <x>}).
inline std::vector<double> node_weights(const Grid2D& g, double lambda) {
  const auto ws = g.sigma_weights();
  const auto wx = g.x_weights();
  std::vector<double> w(g.size());
  for (std::size_t i = 0; i < g.n_sigma(); ++i)
    for (std::size_t j = 0; j < g.n_x(); ++j) {
      const double e = std::exp(-lambda * japanese_bracket(g.x()[j]));
      w[i * g.n_x() + j] = ws[i] * wx[j] * e * e;
    }
  return w;
}

/// Squared weighted H1 seminorm from forward difference quotients.
inline double h1_seminorm_sq(const Field& u, double lambda) {
  const Grid2D& g = u.grid();
  const auto ws = g.sigma_weights();
  const auto wx = g.x_weights();
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < g.n_sigma(); ++i) {
    const double h = g.sigma()[i + 1] - g.sigma()[i];
    for (std::size_t j = 0; j < g.n_x(); ++j) {
      const double e = std::exp(-lambda * japanese_bracket(g.x()[j]));
      const double d = (u(i + 1, j) - u(i, j)) / h;
      s += h * wx[j] * e * e * d * d;
    }
  }
  const double hx = g.dx();
  for (std::size_t j = 0; j + 1 < g.n_x(); ++j) {
    const double e = std::exp(-lambda * japanese_bracket(0.5 * (g.x()[j] + g.x()[j + 1])));
    for (std::size_t i = 0; i < g.n_sigma(); ++i) {
      const double d = (u(i, j + 1) - u(i, j)) / hx;
      s += hx * ws[i] * e * e * d * d;
    }
  }
  return s;
}

}  // namespace detail

/// Samples `trials` seeded random fields (iid uniform on the unknowns, zero
/// on the boundary) and reports empirical Garding constants in the weighted
/// inner product with the operator's lambda. c1 is half the smallest observed
/// ratio -(L u, u) / |u|_{H1}^2 (zero when that ratio is not positive); c2 is
/// then the least constant making the inequality hold on every trial.
inline GardingReport garding_check(const FDOperator& op, std::size_t trials, std::uint64_t seed) {
  if (!op.zero_boundary()) throw std::invalid_argument("garding_check: requires zero Dirichlet data");
  const Grid2D& g = op.grid();
  const double lambda = op.params().lambda;
  const auto w = detail::node_weights(g, lambda);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);

  std::vector<double> a(trials), b(trials), c(trials);
  std::vector<double> v(op.n_unknowns());
  for (std::size_t k = 0; k < trials; ++k) {
    for (double& x : v) x = unif(rng);
    const Field u = op.scatter(v);
    const Field lu = op.apply(u);
    double ip = 0.0, nn = 0.0;
    for (std::size_t n = 0; n < g.size(); ++n) {
      ip += w[n] * lu.values()[n] * u.values()[n];
      nn += w[n] * u.values()[n] * u.values()[n];
    }
    a[k] = ip;
    b[k] = detail::h1_seminorm_sq(u, lambda);
    c[k] = nn;
  }
  GardingReport rep;
  rep.trials = trials;
  rep.mu = -std::numeric_limits<double>::infinity();
  double ratio = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < trials; ++k) {
    rep.mu = std::max(rep.mu, a[k] / c[k]);
    ratio = std::min(ratio, -a[k] / b[k]);
  }
  rep.c1 = trials > 0 ? std::max(0.0, 0.5 * ratio) : 0.0;
  rep.c2 = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < trials; ++k) rep.c2 = std::max(rep.c2, (a[k] + rep.c1 * b[k]) / c[k]);
  rep.holds = trials > 0 && std::isfinite(rep.c2) && std::isfinite(rep.mu);
  for (std::size_t k = 0; k < trials; ++k) {
    if (a[k] > -rep.c1 * b[k] + rep.c2 * c[k] + 1e-12 * (std::abs(a[k]) + rep.c1 * b[k] + std::abs(rep.c2) * c[k])) {
      rep.holds = false;
    }
  }
  return rep;
}

}  // namespace lsabr
