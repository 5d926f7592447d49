#pragma once

// Closed-form coefficients of the zero-volvol semigroup: the mean-reversion
// flow, the accumulated variance D(t, sigma), its dual C(t, sigma) and the
// discriminant of D viewed as a quadratic in sigma.

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "lsabr/model.hpp"

namespace lsabr {

namespace detail {

inline void require_time(double t, const char* who) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw std::invalid_argument(std::string(who) + ": t must be finite and >= 0");
}

/// (e^s - 1) / s, with a fourth-order Taylor expansion near s = 0.
inline double expm1_over(double s) {
  if (std::abs(s) < 1e-4) return 1.0 + s * (1.0 / 2.0 + s * (1.0 / 6.0 + s * (1.0 / 24.0 + s / 120.0)));
  return std::expm1(s) / s;
}

/// D for an arbitrary (possibly negative) kappa; negative kappa gives the dual.
///   D = t * ( theta^2/2 + theta d E(-kt) + d^2/2 E(-2kt) ),  d = sigma - theta
inline double variance_signed(double kappa, double theta, double t, double sigma) {
  const double z = kappa * t;
  const double d = sigma - theta;
  return t * (0.5 * theta * theta + theta * d * expm1_over(-z) + 0.5 * d * d * expm1_over(-2.0 * z));
}

inline double variance_dsigma_signed(double kappa, double theta, double t, double sigma) {
  const double z = kappa * t;
  const double d = sigma - theta;
  return t * (theta * expm1_over(-z) + d * expm1_over(-2.0 * z));
}

}  // namespace detail

/// delta_t(sigma) = theta (1 - e^{-kappa t}) + sigma e^{-kappa t}, for any
/// scalar type in sigma (complex step, dual numbers).
template <class T>
T flow_generic(const ModelParams& p, double t, T sigma) {
  detail::require_time(t, "flow");
  return p.theta + (sigma - p.theta) * std::exp(-p.kappa * t);
}

inline double flow(const ModelParams& p, double t, double sigma) { return flow_generic(p, t, sigma); }

/// D(t, sigma); equals (1/2) * integral_0^t delta_s(sigma)^2 ds.
inline double variance(const ModelParams& p, double t, double sigma) {
  detail::require_time(t, "variance");
  return detail::variance_signed(p.kappa, p.theta, t, sigma);
}

/// C(t, sigma): D with kappa replaced by -kappa.
inline double variance_dual(const ModelParams& p, double t, double sigma) {
  detail::require_time(t, "variance_dual");
  return detail::variance_signed(-p.kappa, p.theta, t, sigma);
}

/// Analytic d/dsigma of D(t, sigma).
inline double variance_dsigma(const ModelParams& p, double t, double sigma) {
  detail::require_time(t, "variance_dsigma");
  return detail::variance_dsigma_signed(p.kappa, p.theta, t, sigma);
}

/// f(t) = theta^2 / (2 kappa^2) [ (2 + kt) e^{-2kt} - 4 e^{-kt} + 2 - kt ].
/// Strictly negative for t > 0. Evaluated as theta^2 t^2 / 2 * g(z)/z^2 with
/// a Taylor series for small z = kappa t, where the bracket cancels to O(z^3).
inline double discriminant(const ModelParams& p, double t) {
  detail::require_time(t, "discriminant");
  const double z = p.kappa * t;
  double g_over_z2 = 0.0;
  if (std::abs(z) < 0.1) {
    // Coefficients of z^2 .. z^11.
    static constexpr double c[] = {-1.0 / 6.0,           1.0 / 6.0,           -17.0 / 180.0,
                                   7.0 / 180.0,          -43.0 / 3360.0,      107.0 / 30240.0,
                                   -769.0 / 907200.0,    163.0 / 907200.0,    -4097.0 / 119750400.0,
                                   709.0 / 119750400.0};
    double acc = 0.0;
    for (int k = 9; k >= 0; --k) acc = acc * z + c[k];
    g_over_z2 = acc * z * z;
  } else {
    const double g = (2.0 + z) * std::exp(-2.0 * z) - 4.0 * std::exp(-z) + 2.0 - z;
    g_over_z2 = g / (z * z);
  }
  return 0.5 * p.theta * p.theta * t * t * g_over_z2;
}

/// lim_{t -> 0+} D(t, sigma) / t.
inline double variance_rate_limit(const ModelParams& /*p*/, double sigma) { return 0.5 * sigma * sigma; }

namespace detail {

template <class F>
double golden_min(F&& f, double a, double b, double tol = 1e-12) {
  constexpr double r = 0.6180339887498949;
  double c = b - r * (b - a);
  double d = a + r * (b - a);
  double fc = f(c);
  double fd = f(d);
  for (int it = 0; it < 200 && (b - a) > tol * std::max(1.0, std::abs(a) + std::abs(b)); ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - r * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + r * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace detail

/// epsilon = inf of D(t, sigma)/t over [alpha, beta] x (0, horizon], from a
/// samples x samples lattice plus golden-section refinement of every local
/// minimum (alternating sigma and t sweeps).
inline double variance_floor(const ModelParams& p, double horizon, int samples = 64) {
  if (!(horizon > 0.0)) throw std::invalid_argument("variance_floor: horizon must be > 0");
  if (samples < 3) throw std::invalid_argument("variance_floor: need at least 3 samples per axis");
  const int n = samples;
  const double t_lo = horizon * 1e-9;
  auto ratio = [&](double t, double s) { return detail::variance_signed(p.kappa, p.theta, t, s) / t; };
  auto sig = [&](int i) { return p.alpha + (p.beta - p.alpha) * i / (n - 1); };
  auto tim = [&](int k) { return horizon * (k + 1) / n; };

  std::vector<double> v(static_cast<std::size_t>(n * n));
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k) v[static_cast<std::size_t>(i * n + k)] = ratio(tim(k), sig(i));

  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < n; ++k) {
      const double here = v[static_cast<std::size_t>(i * n + k)];
      bool local_min = true;
      for (int di = -1; di <= 1 && local_min; ++di)
        for (int dk = -1; dk <= 1; ++dk) {
          const int ii = i + di, kk = k + dk;
          if ((di == 0 && dk == 0) || ii < 0 || ii >= n || kk < 0 || kk >= n) continue;
          if (v[static_cast<std::size_t>(ii * n + kk)] < here) {
            local_min = false;
            break;
          }
        }
      best = std::min(best, here);
      if (!local_min) continue;

      const double s_a = sig(std::max(i - 1, 0)), s_b = sig(std::min(i + 1, n - 1));
      const double t_a = k == 0 ? t_lo : tim(k - 1), t_b = tim(std::min(k + 1, n - 1));
      double s = sig(i), t = tim(k);
      for (int sweep = 0; sweep < 3; ++sweep) {
        s = detail::golden_min([&](double ss) { return ratio(t, ss); }, s_a, s_b);
        t = detail::golden_min([&](double tt) { return ratio(tt, s); }, t_a, t_b);
      }
      best = std::min(best, ratio(t, s));
    }
  }
  return best;
}

}  // namespace lsabr
