#pragma once

// Exact actions of the building-block semigroups on sampled fields:
//
//   heat       e^{tau B},  B = d_x^2 - d_x   (Gaussian convolution, drift -tau)
//   transport  e^{tA},     A = kappa (theta - sigma) d_sigma   (h o delta_t)
//   composite  S(t) = e^{D(t) B} e^{tA} = e^{tA} e^{C(t) B}
//
// The heat action on a field is a per-row Gaussian expectation evaluated by a
// QuadratureSpec rule, with h between nodes taken from its piecewise-linear
// interpolant and held flat beyond the x-range. Transport interpolates
// linearly between sigma rows; delta_t maps [alpha, beta] into itself so no
// extrapolation in sigma is ever needed.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "lsabr/coeffs.hpp"
#include "lsabr/model.hpp"
#include "lsabr/quadrature.hpp"

namespace lsabr {

struct QuadratureSpec {
  enum class Rule { gauss_hermite, trapezoid };

  Rule rule = Rule::trapezoid;
  int order = 64;      // Gauss-Hermite order
  int points = 801;    // trapezoid nodes (odd)
  double width = 8.0;  // trapezoid half-width in standard deviations

  static QuadratureSpec hermite(int n) { return {Rule::gauss_hermite, n, 801, 8.0}; }
  static QuadratureSpec trapezoid(int m = 801, double c = 8.0) { return {Rule::trapezoid, 64, m, c}; }

  void validate() const {
    if (rule == Rule::gauss_hermite && order < 8) throw std::invalid_argument("QuadratureSpec: order must be >= 8");
    if (rule == Rule::trapezoid) {
      if (points < 51 || points % 2 == 0) throw std::invalid_argument("QuadratureSpec: points must be odd and >= 51");
      if (width < 4.0) throw std::invalid_argument("QuadratureSpec: width must be >= 4");
    }
  }

  [[nodiscard]] GaussianRule make_rule() const {
    validate();
    return rule == Rule::gauss_hermite ? gauss_hermite(order) : gaussian_trapezoid(points, width);
  }

  /// Gaussian probability mass the rule cannot see.
  [[nodiscard]] double tail_mass() const {
    return rule == Rule::trapezoid ? std::erfc(width / std::numbers::sqrt2) : 0.0;
  }
};

/// A field produced by a heat action, with the quadrature truncation
/// estimate. `flagged` is set when the estimate exceeds 1e-10 * max|h|.
struct SemigroupResult {
  Field field;
  double truncation_estimate = 0.0;
  bool flagged = false;
};

namespace detail {

inline void convolve_row(std::span<const double> in, std::span<double> out, double tau, double dx,
                         const GaussianRule& rule) {
  const auto n = static_cast<std::int64_t>(in.size());
  std::fill(out.begin(), out.end(), 0.0);
  const double s = std::sqrt(2.0 * tau);
  for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
    const double w = rule.weights[k];
    const double off = (-tau + s * rule.nodes[k]) / dx;
    const double fl = std::floor(off);
    const auto base = static_cast<std::int64_t>(fl);
    const double fr = off - fl;
    const double a = w * (1.0 - fr);
    const double b = w * fr;
    // Nodes j with 0 <= j + base and j + base + 1 <= n - 1 need no clamping.
    const std::int64_t lo = std::clamp<std::int64_t>(-base, 0, n);
    const std::int64_t hi = std::clamp<std::int64_t>(n - 1 - base, lo, n);
    auto at = [&](std::int64_t m) { return in[static_cast<std::size_t>(std::clamp<std::int64_t>(m, 0, n - 1))]; };
    for (std::int64_t j = 0; j < lo; ++j) out[static_cast<std::size_t>(j)] += a * at(j + base) + b * at(j + base + 1);
    const double* src = in.data();
    for (std::int64_t j = lo; j < hi; ++j) {
      out[static_cast<std::size_t>(j)] += a * src[j + base] + b * src[j + base + 1];
    }
    for (std::int64_t j = hi; j < n; ++j) out[static_cast<std::size_t>(j)] += a * at(j + base) + b * at(j + base + 1);
  }
}

/// Index i with nodes[i] <= s <= nodes[i+1] (nodes increasing, s in range).
inline std::size_t bracket(std::span<const double> nodes, double s) {
  const auto it = std::upper_bound(nodes.begin(), nodes.end(), s);
  std::size_t i = it == nodes.begin() ? 0 : static_cast<std::size_t>(it - nodes.begin()) - 1;
  return std::min(i, nodes.size() - 2);
}

}  // namespace detail

/// Row i of the result is e^{tau_i B} applied to row i of h.
inline SemigroupResult heat_apply(std::span<const double> tau, const Field& h, const QuadratureSpec& q) {
  const Grid2D& g = h.grid();
  if (tau.size() != g.n_sigma()) throw std::invalid_argument("heat_apply: one tau per sigma node required");
  for (double t : tau) {
    if (!(t >= 0.0) || !std::isfinite(t)) throw std::invalid_argument("heat_apply: tau must be finite and >= 0");
  }
  const GaussianRule rule = q.make_rule();
  SemigroupResult r{Field(h.grid_ptr()), 0.0, false};
  for (std::size_t i = 0; i < g.n_sigma(); ++i) {
    if (tau[i] == 0.0) {
      std::copy(h.row(i).begin(), h.row(i).end(), r.field.row(i).begin());
    } else {
      detail::convolve_row(h.row(i), r.field.row(i), tau[i], g.dx(), rule);
    }
  }
  const bool any_positive = std::any_of(tau.begin(), tau.end(), [](double t) { return t > 0.0; });
  const double hmax = h.max_abs();
  r.truncation_estimate = any_positive ? q.tail_mass() * hmax : 0.0;
  r.flagged = r.truncation_estimate > 1e-10 * hmax;
  return r;
}

/// Uniform tau on every row.
inline SemigroupResult heat_apply(double tau, const Field& h, const QuadratureSpec& q) {
  const std::vector<double> taus(h.n_sigma(), tau);
  return heat_apply(taus, h, q);
}

/// e^{tA} h: row sigma of the result is h(delta_t(sigma), .).
inline Field transport_apply(const ModelParams& p, double t, const Field& h) {
  detail::require_time(t, "transport_apply");
  const Grid2D& g = h.grid();
  if (t == 0.0) return h;
  Field out(h.grid_ptr());
  const auto sig = g.sigma();
  for (std::size_t i = 0; i < g.n_sigma(); ++i) {
    const double s = std::clamp(flow(p, t, sig[i]), sig.front(), sig.back());
    const std::size_t k = detail::bracket(sig, s);
    const double f = (s - sig[k]) / (sig[k + 1] - sig[k]);
    const auto lo = h.row(k);
    const auto hi = h.row(k + 1);
    auto dst = out.row(i);
    for (std::size_t j = 0; j < g.n_x(); ++j) dst[j] = (1.0 - f) * lo[j] + f * hi[j];
  }
  return out;
}

enum class Ordering { heat_after_transport, transport_after_heat };

/// S(t) h in either of its two factorizations.
inline SemigroupResult composite_apply(const ModelParams& p, double t, const Field& h, const QuadratureSpec& q,
                                       Ordering ordering = Ordering::heat_after_transport) {
  detail::require_time(t, "composite_apply");
  const Grid2D& g = h.grid();
  if (t == 0.0) return {h, 0.0, false};
  std::vector<double> tau(g.n_sigma());
  if (ordering == Ordering::heat_after_transport) {
    for (std::size_t i = 0; i < tau.size(); ++i) tau[i] = variance(p, t, g.sigma()[i]);
    return heat_apply(tau, transport_apply(p, t, h), q);
  }
  for (std::size_t i = 0; i < tau.size(); ++i) tau[i] = variance_dual(p, t, g.sigma()[i]);
  SemigroupResult r = heat_apply(tau, h, q);
  r.field = transport_apply(p, t, r.field);
  return r;
}

/// Green's-kernel evaluation of S(t) h for an h given pointwise:
///   u(sigma, x) = E[ h(delta_t(sigma), x - D + sqrt(2 D) Z) ],  D = D(t, sigma).
/// No interpolation is involved, only the quadrature rule.
inline Field green_apply(const ModelParams& p, double t, const std::function<double(double, double)>& h,
                         const std::shared_ptr<const Grid2D>& grid, const QuadratureSpec& q) {
  detail::require_time(t, "green_apply");
  const Grid2D& g = *grid;
  if (t == 0.0) return sample(grid, h);
  const GaussianRule rule = q.make_rule();
  Field out(grid);
  for (std::size_t i = 0; i < g.n_sigma(); ++i) {
    const double s = flow(p, t, g.sigma()[i]);
    const double d = variance(p, t, g.sigma()[i]);
    const double sd = std::sqrt(2.0 * d);
    for (std::size_t j = 0; j < g.n_x(); ++j) {
      const double x = g.x()[j];
      double acc = 0.0;
      for (std::size_t k = 0; k < rule.nodes.size(); ++k) acc += rule.weights[k] * h(s, x - d + sd * rule.nodes[k]);
      out(i, j) = acc;
    }
  }
  return out;
}

/// (4 pi D)^{-1/2} exp(-(x - y - D)^2 / (4 D)), D = D(t, sigma).
inline double kernel_density(const ModelParams& p, double t, double sigma, double x, double y) {
  if (!(t > 0.0)) throw std::invalid_argument("kernel_density: t must be > 0");
  const double d = variance(p, t, sigma);
  const double r = x - y - d;
  return std::exp(-r * r / (4.0 * d)) / std::sqrt(4.0 * std::numbers::pi * d);
}

/// e^{tau B} applied to (e^x - K)_+ at x: e^x Phi(d+) - K Phi(d-),
/// d+- = (x - ln K +- tau) / sqrt(2 tau). tau <= 0 gives the payoff.
inline double heat_call_closed_form(double tau, double x, double strike) {
  if (!(tau > 0.0)) return std::max(std::exp(x) - strike, 0.0);
  const double s = std::sqrt(2.0 * tau);
  const double m = x - std::log(strike);
  const double dp = (m + tau) / s;
  const double dm = (m - tau) / s;
  return std::exp(x) * normal_cdf(dp) - strike * normal_cdf(dm);
}

/// Zero-volvol call value S(t) h at (sigma, x) for h = (e^x - K)_+.
inline double price_zero_volvol(const ModelParams& p, double t, double strike, double sigma, double x) {
  detail::require_time(t, "price_zero_volvol");
  if (!(strike > 0.0)) throw std::invalid_argument("price_zero_volvol: strike must be > 0");
  if (t == 0.0) return std::max(std::exp(x) - strike, 0.0);
  return heat_call_closed_form(variance(p, t, sigma), x, strike);
}

}  // namespace lsabr
