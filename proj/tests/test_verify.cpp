#include <catch_amalgamated.hpp>

#include <cmath>

#include "lsabr/verify.hpp"

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

}  // namespace

TEST_CASE("suite report bookkeeping") {
  SuiteReport r;
  r.suite = "demo";
  CHECK_FALSE(r.passed());  // empty suites do not pass
  r.add("b.upper", 0.5, 1.0);
  r.add("a.lower", 4.0, 3.5, true);
  CHECK(r.passed());
  r.add("c.nan", std::nan(""), 1.0);
  CHECK_FALSE(r.passed());
  CHECK_FALSE(r.find("c.nan")->pass);
  CHECK(r.find("missing") == nullptr);
  const json j = r.to_json();
  CHECK(j["verdict"] == "fail");
  REQUIRE(j["checks"].size() == 3);
  CHECK(j["checks"][0]["id"] == "a.lower");  // sorted by id
  CHECK(j["checks"][0]["bound"] == "lower");
  CHECK(r.to_text().find("FAIL") != std::string::npos);
  SuiteReport other;
  other.add("d", 0.0, 0.0);
  r.merge(other);
  CHECK(r.checks.size() == 4);
}

TEST_CASE("scalar identities hold") {
  const SuiteReport r = run_scalar_identities(base());
  INFO(r.to_text());
  CHECK(r.passed());
  CHECK(r.checks.size() == 7);
}

TEST_CASE("Hadamard commutation via complex step") {
  const ModelParams p = base();
  std::vector<double> sig;
  for (int k = 0; k <= 50; ++k) sig.push_back(0.05 + 0.011 * k);
  for (double t : {0.1, 1.0, 3.0}) {
    CHECK(check_hadamard(p, t, SigmaProfile::polynomial({0, 1}), sig) < 1e-12);
    CHECK(check_hadamard(p, t, SigmaProfile::polynomial({0.3, -1, 2, 5}), sig) < 1e-12);
    CHECK(check_hadamard(p, t, SigmaProfile::gaussian(0.3, 0.1), sig) < 1e-10);
  }
  // a wrong derivative is caught
  SigmaProfile broken = SigmaProfile::polynomial({0, 0, 1});
  broken.derivative = [](double s) { return s; };
  CHECK(check_hadamard(p, 1.0, broken, sig) > 1e-3);
}

TEST_CASE("transport bound on smooth fields") {
  const ModelParams p = base();
  const auto g = make_grid(Grid2D::uniform(0.05, 0.6, 111, -2, 2, 21));
  std::vector<std::pair<std::string, Field>> fields;
  fields.emplace_back("bump", sample(g, [](double s, double x) { return smooth_bump(s, 0.1, 0.3) * std::exp(-x * x); }));
  fields.emplace_back("edge", sample(g, [](double s, double) { return std::exp(-(s - 0.05) / 0.02); }));
  const SuiteReport r = check_transport_bound(p, {0.1, 1.0}, fields);
  INFO(r.to_text());
  CHECK(r.passed());
  CHECK(r.checks.size() == 4);
  CHECK(r.find("transport.bump.t0.1") != nullptr);
}

TEST_CASE("corrected derivative converges at second order") {
  const CorrectedDerivativeReport r =
      check_corrected_derivative(base(), 0.5, TensorGaussian{}, 23, 41, -4, 4, QuadratureSpec::hermite(64), 2);
  REQUIRE(r.orders.size() == 1);
  CHECK(r.orders[0] >= 1.8);
  CHECK(r.min_order() == r.orders[0]);
  CHECK(r.residuals[1] < r.residuals[0]);
}

TEST_CASE("least squares slope and difference quotients") {
  const std::vector<double> x = {0, 1, 2, 3}, y = {1, -1, -3, -5};
  CHECK_THAT(ols_slope(x, y), WithinAbs(-2.0, 1e-14));
  const auto g = make_grid(Grid2D::uniform(0.05, 0.6, 3, -1, 1, 21));
  const Field u = sample(g, [](double, double x) { return x * x; });
  const Field d1 = x_derivative(u, 1), d2 = x_derivative(u, 2);
  for (std::size_t j = 1; j + 1 < 21; ++j) {
    CHECK_THAT(d1(1, j), WithinAbs(2 * g->x()[j], 1e-12));
    CHECK_THAT(d2(1, j), WithinAbs(2.0, 1e-10));
  }
  CHECK(x_derivative(u, 0).values() == u.values());
}

TEST_CASE("smoothing decay bound on a call payoff") {
  const auto g = make_grid(Grid2D::uniform(0.05, 0.6, 6, -8, 8, 1601));
  const Field h = payoff_sample(Payoff{payoff::Call{1.0}, {}}, g);
  const SmoothingReport r = check_smoothing_decay(base(), h, QuadratureSpec{});
  REQUIRE(r.fits.size() == 3);
  for (const auto& f : r.fits) {
    INFO("k=" << f.k << " exponent=" << f.exponent);
    CHECK(f.bound_ok);
    CHECK(f.times.size() == 8);
  }
  CHECK_THROWS_AS(check_smoothing_decay(base(), h, QuadratureSpec{}, {3}), std::invalid_argument);
}

TEST_CASE("oracle chain on a small grid") {
  ModelParams p = base();
  const auto g = make_grid(Grid2D::uniform(0.05, 0.6, 12, -6, 6, 30));
  const OracleDistances d = oracle_distances(p, g, 0.5, ThetaScheme{0.5, 1e-3}, QuadratureSpec::hermite(64));
  CHECK(d.expm_vs_cn < 1e-6);
  CHECK(d.closed_vs_expm < 0.05);
  CHECK_THAT(d.closed_vs_cn, WithinAbs(d.closed_vs_expm, 1e-6));
}

TEST_CASE("Garding suite ids") {
  ModelParams p = base();
  p.nu = 0.2;
  p.rho = 0.3;
  const auto g = make_grid(Grid2D::uniform(0.05, 0.6, 15, -4, 4, 31));
  const SuiteReport r = run_garding_suite(p, g, 50, 3);
  INFO(r.to_text());
  for (const char* id : {"garding.L.c1", "garding.L.c2", "garding.L.holds", "garding.L.reproducible", "garding.B.c2",
                         "garding.A.mu_over_half_kappa"})
    CHECK(r.find(id) != nullptr);
  CHECK(r.find("garding.L.holds")->pass);
  CHECK(r.find("garding.L.reproducible")->pass);
  p.nu = 0.0;
  CHECK_THROWS_AS(run_garding_suite(p, g, 10, 3), std::invalid_argument);
}

TEST_CASE("error study bookkeeping") {
  ModelParams p = base();
  p.rho = 0.3;
  const auto g = make_grid(Grid2D::uniform(0.05, 0.6, 23, -4, 4, 41));
  const Field h = study_datum(g, 0.5, 0.15, 0.45);
  const ThetaScheme cn{0.5, 0.05};
  const ErrorStudyReport one = run_error_study(p, {0.2}, 1.0, g, cn, h);
  CHECK_FALSE(one.fitted_slope.has_value());
  CHECK(one.errors.size() == 1);
  CHECK(one.fd_floor > 0.0);
  CHECK(one.to_json()["fitted_slope"].is_null());
  CHECK_THROWS_AS(run_error_study(p, {}, 1.0, g, cn, h), std::invalid_argument);
  CHECK_THROWS_AS(run_error_study(p, {0.2, 0.1}, 1.0, g, cn, h), std::invalid_argument);
  CHECK_THROWS_AS(run_error_study(p, {0.0, 0.1}, 1.0, g, cn, h), std::invalid_argument);

  const ErrorStudyReport two = run_error_study(p, {0.2, 0.4}, 1.0, g, cn, h);
  REQUIRE(two.errors.size() == 2);
  CHECK(two.errors[1] > two.errors[0]);
  const json j = two.to_json();
  CHECK(j["points"].size() == 2);
  CHECK(j.contains("status"));
}

TEST_CASE("default study setup") {
  const StudySetup s = default_study();
  CHECK(s.nu_list == std::vector<double>{0.05, 0.1, 0.2, 0.4});
  CHECK(s.grid->beta() == 0.6);
  CHECK(s.scheme.dt == 0.01);
  for (std::size_t i = 0; i < s.grid->n_sigma(); ++i) {
    CHECK(s.h(i, 0) == 0.0);
    if (s.grid->sigma()[i] >= 0.45) CHECK(s.h(i, 40) == 0.0);
  }
}
