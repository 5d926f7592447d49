#include <catch_amalgamated.hpp>

#include <random>
#include <sstream>

#include "lsabr/io.hpp"

using namespace lsabr;

TEST_CASE("number formatting round-trips") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int k = 0; k < 1000; ++k) {
    const double v = u(rng) * std::pow(10.0, (k % 40) - 20);
    REQUIRE(parse_double(format_double(v)) == v);
  }
  CHECK(parse_double(" +1.5 ") == 1.5);
  CHECK(parse_double("-2e-3") == -2e-3);
  CHECK_THROWS_AS(parse_double(""), std::invalid_argument);
  CHECK_THROWS_AS(parse_double("1.5x"), std::invalid_argument);
  CHECK_THROWS_AS(parse_double("abc"), std::invalid_argument);
}

TEST_CASE("field csv round-trip on a graded grid") {
  const auto g = make_grid(Grid2D(Grid2D::graded_toward_end(0.05, 0.6, 12, 1e-3, 1.5), Grid2D::linspace(-2, 2, 9)));
  const Field f = sample(g, [](double s, double x) { return std::sin(7 * s) / (1 + x * x); });
  std::stringstream ss;
  write_field_csv(ss, f);
  const Field back = read_field_csv(ss);
  CHECK(back.grid() == *g);
  CHECK(back.values() == f.values());
}

TEST_CASE("field csv rejects malformed input") {
  std::istringstream no_header("1,2,3\n");
  CHECK_THROWS_AS(read_field_csv(no_header), std::invalid_argument);
  std::istringstream short_row("sigma,x,value\n0.1,0,1\n0.1,1\n");
  CHECK_THROWS_AS(read_field_csv(short_row), std::invalid_argument);
  std::istringstream ragged("sigma,x,value\n0.1,0,1\n0.1,1,1\n0.1,2,1\n0.2,0,1\n0.2,1,1\n0.3,0,1\n0.3,1,1\n0.3,2,1\n0.2,2,1\n");
  CHECK_THROWS_AS(read_field_csv(ragged), std::invalid_argument);
}

TEST_CASE("checkpoint round-trip") {
  const auto g = make_grid(Grid2D::uniform(0.05, 0.6, 4, -1, 1, 5));
  const Field f = sample(g, [](double s, double x) { return s * x; });
  ModelParams p;
  p.nu = 0.1;
  const CheckpointMeta m{0.75, 0.01, "L", params_hash(p)};
  std::stringstream ss;
  write_checkpoint(ss, m, f);
  const auto [m2, f2] = read_checkpoint(ss);
  CHECK(m2.t == 0.75);
  CHECK(m2.dt == 0.01);
  CHECK(m2.generator == "L");
  CHECK(m2.params_hash == m.params_hash);
  CHECK(f2.values() == f.values());
  std::istringstream bad("# t=1,dt=0.1,generator=L\nsigma,x,value\n");
  CHECK_THROWS_AS(read_checkpoint(bad), std::invalid_argument);
}

TEST_CASE("params hash is a fingerprint") {
  ModelParams a, b;
  CHECK(params_hash(a) == params_hash(b));
  CHECK(params_hash(a).size() == 16);
  b.rho = 0.1;
  CHECK(params_hash(a) != params_hash(b));
}

TEST_CASE("config parsing") {
  std::istringstream is(
      "# comment\n"
      "kappa = 2   # trailing\n"
      "nu=0.3\n"
      "\n"
      "n_sigma = 21\n"
      "x_min = -3\n"
      "quad_rule = gauss_hermite\n"
      "nu_list = 0.1, 0.2,0.4\n"
      "payoff = call\n");
  const RunConfig c = parse_config(is);
  CHECK(c.params.kappa == 2.0);
  CHECK(c.params.nu == 0.3);
  CHECK(c.n_sigma == 21);
  CHECK(c.x_min == -3.0);
  CHECK_FALSE(c.x_max.has_value());
  CHECK(c.quadrature.rule == QuadratureSpec::Rule::gauss_hermite);
  CHECK(c.nu_list == std::vector<double>{0.1, 0.2, 0.4});
  CHECK(c.payoff == "call");
  CHECK_NOTHROW(c.validate());

  // the canonical listing reads back to the same configuration
  std::istringstream again(config_text(c));
  const RunConfig c2 = parse_config(again);
  CHECK(config_text(c2) == config_text(c));
  CHECK(config_hash(c2) == config_hash(c));
  RunConfig c3 = c2;
  c3.scheme.dt = 0.002;
  CHECK(config_hash(c3) != config_hash(c));
}

TEST_CASE("config errors") {
  std::istringstream unknown("kapa = 1\n");
  CHECK_THROWS_WITH(parse_config(unknown), Catch::Matchers::ContainsSubstring("unknown key 'kapa'"));
  std::istringstream no_eq("kappa 1\n");
  CHECK_THROWS_AS(parse_config(no_eq), std::invalid_argument);
  std::istringstream bad_count("n_x = 2.5\n");
  CHECK_THROWS_AS(parse_config(bad_count), std::invalid_argument);
  std::istringstream bad_rule("quad_rule = simpson\n");
  CHECK_THROWS_AS(parse_config(bad_rule), std::invalid_argument);

  RunConfig c;
  c.params.alpha = 0.3;  // above theta
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = RunConfig{};
  c.nu_list = {0.2, 0.1};
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = RunConfig{};
  c.payoff = "put";
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("config grid honours grading and x defaults") {
  RunConfig c;
  c.n_sigma = 21;
  c.n_x = 11;
  auto g = c.grid(-4, 4);
  CHECK(g->n_sigma() == 21);
  CHECK(g->x().front() == -4.0);
  c.x_max = 2.0;
  c.sigma_h_min = 1e-3;
  g = c.grid(-4, 4);
  CHECK(g->x().back() == 2.0);
  CHECK(g->n_sigma() > 21);
  CHECK(g->beta() == c.params.beta);
}
