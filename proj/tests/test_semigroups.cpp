#include <catch_amalgamated.hpp>

#include <cmath>
#include <numeric>

#include "lsabr/semigroups.hpp"

using namespace lsabr;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

ModelParams base() {
  ModelParams p;
  p.kappa = 1.0;
  p.theta = 0.2;
  p.alpha = 0.05;
  p.beta = 0.6;
  return p;
}

double expect(const GaussianRule& r, const std::function<double(double)>& f) {
  double s = 0.0;
  for (std::size_t k = 0; k < r.nodes.size(); ++k) s += r.weights[k] * f(r.nodes[k]);
  return s;
}

}  // namespace

TEST_CASE("normal cdf against high-precision values") {
  const std::pair<double, double> ref[] = {
      {-8, 6.2209605742717841e-16}, {-5, 2.8665157187919391e-7}, {-3.5, 0.00023262907903552504},
      {-2, 0.022750131948179207},   {-1.5, 0.066807201268858066}, {-1, 0.15865525393145705},
      {-0.5, 0.3085375387259869},   {-0.25, 0.40129367431707628}, {-0.1, 0.46017216272297102},
      {0, 0.5},                     {0.1, 0.53982783727702898},   {0.25, 0.59870632568292372},
      {0.5, 0.6914624612740131},    {1, 0.84134474606854295},     {1.5, 0.93319279873114193},
      {2, 0.97724986805182079},     {3, 0.99865010196836991},     {3.5, 0.99976737092096447},
      {5, 0.99999971334842812},     {8, 0.99999999999999938}};
  for (auto [z, v] : ref) CHECK_THAT(normal_cdf(z), WithinRel(v, 1e-14));
}

TEST_CASE("gaussian rules reproduce normal moments") {
  for (const GaussianRule& r : {gauss_hermite(16), gauss_hermite(64), gauss_hermite(128), gaussian_trapezoid(801, 8.0)}) {
    CHECK_THAT(std::accumulate(r.weights.begin(), r.weights.end(), 0.0), WithinAbs(1.0, 1e-13));
    CHECK_THAT(expect(r, [](double z) { return z; }), WithinAbs(0.0, 1e-13));
    CHECK_THAT(expect(r, [](double z) { return z * z; }), WithinAbs(1.0, 1e-12));
    CHECK_THAT(expect(r, [](double z) { return z * z * z * z; }), WithinAbs(3.0, 1e-11));
    CHECK_THAT(expect(r, [](double z) { return std::exp(0.5 * z); }), WithinRel(std::exp(0.125), 1e-12));
    for (std::size_t k = 1; k < r.nodes.size(); ++k) REQUIRE(r.nodes[k] > r.nodes[k - 1]);
  }
  CHECK_THROWS_AS(gauss_hermite(0), std::invalid_argument);
  CHECK_THROWS_AS(QuadratureSpec::trapezoid(800).make_rule(), std::invalid_argument);
  CHECK_THROWS_AS(QuadratureSpec::hermite(4).make_rule(), std::invalid_argument);
}

TEST_CASE("heat call closed form") {
  CHECK_THAT(heat_call_closed_form(0.02, 0.0, 1.0), WithinAbs(0.07965567455405796, 1e-15));
  CHECK_THAT(heat_call_closed_form(0.02, 0.0, 1.0), WithinAbs(normal_cdf(0.1) - normal_cdf(-0.1), 1e-15));
  CHECK(heat_call_closed_form(0.0, 0.3, 1.0) == std::exp(0.3) - 1.0);
  CHECK(heat_call_closed_form(1e-300, -0.3, 1.0) == 0.0);
  CHECK(heat_call_closed_form(0.1, -40.0, 1.0) < 1e-300);
  // put-call parity: C - P = e^x - K, P from the same kernel
  for (double x : {-0.5, 0.0, 0.7})
    for (double tau : {0.01, 0.3, 2.0}) {
      const double c = heat_call_closed_form(tau, x, 1.3);
      REQUIRE(c >= std::max(std::exp(x) - 1.3, 0.0));
      REQUIRE(heat_call_closed_form(tau * 1.5, x, 1.3) > c);
    }
  // against a trapezoid expectation fine enough to resolve the kink
  const GaussianRule r = gaussian_trapezoid(200001, 12.0);
  const double tau = 0.02;
  const double q = expect(r, [&](double z) { return std::max(std::exp(-tau + std::sqrt(2 * tau) * z) - 1.0, 0.0); });
  CHECK_THAT(q, WithinAbs(heat_call_closed_form(tau, 0.0, 1.0), 1e-9));
}

TEST_CASE("heat action on 1, e^x and mass") {
  const auto g = make_grid(Grid2D::uniform(0.05, 0.6, 3, -6.0, 6.0, 12001));
  const Field one = sample(g, [](double, double) { return 1.0; });
  const Field ex = sample(g, [](double, double x) { return std::exp(x); });
  const std::vector<double> taus = {0.02, 0.1, 0.5};
  for (const QuadratureSpec& q : {QuadratureSpec::hermite(64), QuadratureSpec::trapezoid()}) {
    const Field u1 = heat_apply(taus, one, q).field;
    const Field ue = heat_apply(taus, ex, q).field;
    for (std::size_t i = 0; i < 3; ++i) {
      const double reach = taus[i] + 8.5 * std::sqrt(2 * taus[i]);
      for (std::size_t j = 0; j < g->n_x(); ++j) {
        REQUIRE_THAT(u1(i, j), WithinAbs(1.0, 1e-13));
        const double x = g->x()[j];
        if (std::abs(x) > 6.0 - reach) continue;
        REQUIRE_THAT(ue(i, j), WithinRel(std::exp(x), 2e-7));
      }
    }
  }
  // mass is conserved while the spread stays inside the domain; values stay nonnegative
  const Field bump = sample(g, [](double, double x) { return std::exp(-4 * x * x); });
  const Field u = heat_apply(taus, bump, QuadratureSpec::hermite(64)).field;
  const auto wx = g->x_weights();
  for (std::size_t i = 0; i < 3; ++i) {
    double m0 = 0.0, m1 = 0.0;
    for (std::size_t j = 0; j < g->n_x(); ++j) {
      m0 += wx[j] * bump(i, j);
      m1 += wx[j] * u(i, j);
      REQUIRE(u(i, j) >= 0.0);
    }
    if (taus[i] <= 0.1) CHECK_THAT(m1, WithinRel(m0, 1e-9));
  }
}

TEST_CASE("heat action edge cases") {
  const auto g = make_grid(Grid2D::uniform(0.05, 0.6, 3, -2.0, 2.0, 41));
  const Field h = sample(g, [](double s, double x) { return s + x * x; });
  CHECK(heat_apply(0.0, h, QuadratureSpec::hermite(64)).field.values() == h.values());
  CHECK_THROWS_AS(heat_apply(-0.1, h, QuadratureSpec::hermite(64)), std::invalid_argument);
  CHECK_THROWS_AS(heat_apply(std::vector<double>{0.1, 0.1}, h, QuadratureSpec::hermite(64)), std::invalid_argument);
  CHECK_FALSE(heat_apply(0.1, h, QuadratureSpec::trapezoid(801, 8.0)).flagged);
  const SemigroupResult r = heat_apply(0.1, h, QuadratureSpec::trapezoid(801, 4.0));
  CHECK(r.flagged);
  CHECK(r.truncation_estimate > 0.0);
}

TEST_CASE("transport action") {
  const ModelParams p = base();
  const auto g = make_grid(Grid2D::uniform(0.05, 0.6, 56, -1.0, 1.0, 5));
  const Field lin = sample(g, [](double s, double x) { return 2.0 * s - x; });
  const Field u = transport_apply(p, 0.7, lin);
  for (std::size_t i = 0; i < g->n_sigma(); ++i)
    for (std::size_t j = 0; j < g->n_x(); ++j)
      REQUIRE_THAT(u(i, j), WithinAbs(2.0 * flow(p, 0.7, g->sigma()[i]) - g->x()[j], 1e-14));
  CHECK(transport_apply(p, 0.0, lin).values() == lin.values());
}

TEST_CASE("composite action: zero time, constants, orderings") {
  const ModelParams p = base();
  const auto g = make_grid(Grid2D::uniform(0.05, 0.6, 23, -4.0, 4.0, 161));
  const Field one = sample(g, [](double, double) { return 1.0; });
  const QuadratureSpec q = QuadratureSpec::hermite(64);
  const Field u = composite_apply(p, 0.8, one, q).field;
  for (double v : u.values()) REQUIRE_THAT(v, WithinAbs(1.0, 1e-13));
  const Field h = sample(g, [](double s, double x) { return s * std::exp(-x * x); });
  CHECK(composite_apply(p, 0.0, h, q).field.values() == h.values());
  CHECK_THROWS_AS(composite_apply(p, -1.0, h, q), std::invalid_argument);
  const Field a = composite_apply(p, 0.5, h, q, Ordering::heat_after_transport).field;
  const Field b = composite_apply(p, 0.5, h, q, Ordering::transport_after_heat).field;
  CHECK(weighted_l2_distance(a, b, {0.0}) / weighted_l2_norm(h, {0.0}) < 1e-3);
}

TEST_CASE("green evaluation agrees with the closed-form call price") {
  const ModelParams p = base();
  const auto g = make_grid(Grid2D::uniform(0.05, 0.6, 12, -1.0, 1.0, 21));
  const auto call = [](double, double x) { return std::max(std::exp(x) - 1.0, 0.0); };
  const Field u = green_apply(p, 1.0, call, g, QuadratureSpec::trapezoid(200001, 12.0));
  for (std::size_t i = 0; i < g->n_sigma(); ++i)
    for (std::size_t j = 0; j < g->n_x(); ++j)
      REQUIRE_THAT(u(i, j), WithinAbs(price_zero_volvol(p, 1.0, 1.0, g->sigma()[i], g->x()[j]), 1e-8));
}

TEST_CASE("zero-volvol price") {
  const ModelParams p = base();
  CHECK_THAT(price_zero_volvol(p, 1.0, 1.0, 0.4, 0.0), WithinAbs(0.1304361139725338, 1e-15));
  CHECK_THAT(price_zero_volvol(p, 1.0, 1.0, 0.4, 0.0), WithinAbs(heat_call_closed_form(variance(p, 1.0, 0.4), 0.0, 1.0), 0));
  CHECK(price_zero_volvol(p, 0.0, 1.0, 0.4, 0.2) == std::exp(0.2) - 1.0);
  CHECK_THROWS_AS(price_zero_volvol(p, 1.0, 0.0, 0.4, 0.0), std::invalid_argument);
  for (double x : {-0.4, 0.0, 0.4})
    for (double s : {0.05, 0.2, 0.6}) {
      double prev = std::max(std::exp(x) - 1.0, 0.0);
      for (double t = 0.1; t <= 3.0; t += 0.1) {
        const double v = price_zero_volvol(p, t, 1.0, s, x);
        REQUIRE(v >= prev - 1e-15);
        prev = v;
      }
    }
}

TEST_CASE("kernel density") {
  const ModelParams p = base();
  CHECK_THAT(kernel_density(p, 1.0, 0.4, 0.0, 0.0), WithinRel(1.1984458229241239, 1e-14));
  CHECK_THROWS_AS(kernel_density(p, 0.0, 0.4, 0.0, 0.0), std::invalid_argument);
  const double d = variance(p, 1.0, 0.4);
  double mass = 0.0, best = -1.0, arg = 0.0;
  const double h = 1e-3;
  for (double y = -5.0; y <= 5.0; y += h) {
    const double k = kernel_density(p, 1.0, 0.4, 0.3, y);
    mass += k * h;
    if (k > best) {
      best = k;
      arg = y;
    }
  }
  CHECK_THAT(mass, WithinRel(1.0, 1e-10));
  CHECK_THAT(arg, WithinAbs(0.3 - d, 1e-3));
}
