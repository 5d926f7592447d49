#pragma once

// Gaussian-expectation quadrature rules and the standard normal CDF.

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace lsabr {

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

inline double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

/// Nodes z_k and weights w_k with sum_k w_k f(z_k) ~ E[f(Z)], Z ~ N(0, 1).
struct GaussianRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Gauss-Hermite rule of order n (physicists' nodes by Newton iteration on the
/// orthonormal recurrence), rescaled to the standard normal measure.
inline GaussianRule gauss_hermite(int n) {
  if (n < 1 || n > 512) throw std::invalid_argument("gauss_hermite: order out of range");
  const double pim4 = std::pow(std::numbers::pi, -0.25);
  std::vector<double> x(static_cast<std::size_t>(n)), w(static_cast<std::size_t>(n));
  const int m = (n + 1) / 2;
  double z = 0.0;
  for (int i = 0; i < m; ++i) {
    if (i == 0) {
      z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -0.16667);
    } else if (i == 1) {
      z -= 1.14 * std::pow(static_cast<double>(n), 0.426) / z;
    } else if (i == 2) {
      z = 1.86 * z - 0.86 * x[0];
    } else if (i == 3) {
      z = 1.91 * z - 0.91 * x[1];
    } else {
      z = 2.0 * z - x[static_cast<std::size_t>(i - 2)];
    }
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p1 = pim4, p2 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = z * std::sqrt(2.0 / (j + 1)) * p2 - std::sqrt(static_cast<double>(j) / (j + 1)) * p3;
      }
      pp = std::sqrt(2.0 * n) * p2;
      const double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) <= 1e-15 * std::max(1.0, std::abs(z))) break;
    }
    x[static_cast<std::size_t>(i)] = z;
    x[static_cast<std::size_t>(n - 1 - i)] = -z;
    w[static_cast<std::size_t>(i)] = 2.0 / (pp * pp);
    w[static_cast<std::size_t>(n - 1 - i)] = w[static_cast<std::size_t>(i)];
  }
  GaussianRule r;
  r.nodes.resize(static_cast<std::size_t>(n));
  r.weights.resize(static_cast<std::size_t>(n));
  // Ascending order; int e^{-u^2} f(u) du = E[f(sqrt2 Z)] sqrt(pi).
  for (int i = 0; i < n; ++i) {
    r.nodes[static_cast<std::size_t>(i)] = std::numbers::sqrt2 * x[static_cast<std::size_t>(n - 1 - i)];
    r.weights[static_cast<std::size_t>(i)] = w[static_cast<std::size_t>(n - 1 - i)] / std::sqrt(std::numbers::pi);
  }
  return r;
}

/// Composite trapezoid rule for E[f(Z)] on [-width, width] with `points`
/// nodes; weights are normalized to sum to one so constants are exact.
inline GaussianRule gaussian_trapezoid(int points, double width) {
  if (points < 3) throw std::invalid_argument("gaussian_trapezoid: need >= 3 points");
  GaussianRule r;
  r.nodes.resize(static_cast<std::size_t>(points));
  r.weights.resize(static_cast<std::size_t>(points));
  const double h = 2.0 * width / (points - 1);
  double total = 0.0;
  for (int k = 0; k < points; ++k) {
    const double z = -width + h * k;
    const double end = (k == 0 || k == points - 1) ? 0.5 : 1.0;
    r.nodes[static_cast<std::size_t>(k)] = z;
    r.weights[static_cast<std::size_t>(k)] = end * h * normal_pdf(z);
    total += r.weights[static_cast<std::size_t>(k)];
  }
  for (double& w : r.weights) w /= total;
  return r;
}

}  // namespace lsabr
