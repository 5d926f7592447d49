// lsabr: command-line front end.
//
// Settings are layered: per-command defaults, then --config, then flags.
// Exit codes: 0 success, 1 a verification check failed, 2 bad configuration
// or arguments, 3 an error study invalidated itself, 4 runtime failure.

#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>

#include "CLI11.hpp"
#include "lsabr.hpp"

namespace {

using namespace lsabr;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Flags {
  std::string config_path;
  std::optional<double> t, strike, nu, sigma, x, y;
  std::optional<std::string> generator, suite, out, report, grid, payoff, nu_list;
  std::optional<std::uint64_t> seed;
  bool richardson = false;
};

std::pair<std::size_t, std::size_t> parse_grid(const std::string& s) {
  const auto k = s.find_first_of("xX");
  if (k == std::string::npos) throw ConfigError("--grid expects NSIGMAxNX, got '" + s + "'");
  try {
    const double a = parse_double(std::string_view(s).substr(0, k));
    const double b = parse_double(std::string_view(s).substr(k + 1));
    if (a < 3 || b < 3 || a != std::floor(a) || b != std::floor(b)) throw std::invalid_argument("");
    return {static_cast<std::size_t>(a), static_cast<std::size_t>(b)};
  } catch (const std::invalid_argument&) {
    throw ConfigError("--grid expects NSIGMAxNX with integers >= 3, got '" + s + "'");
  }
}

/// defaults -> config file -> flags, then validation.
RunConfig layer(RunConfig c, const Flags& f) {
  try {
    if (!f.config_path.empty()) {
      std::ifstream in(f.config_path);
      if (!in) throw ConfigError("cannot open config file '" + f.config_path + "'");
      parse_config(in, c);
    }
    if (f.t) c.t = *f.t;
    if (f.strike) c.strike = *f.strike;
    if (f.nu) c.params.nu = *f.nu;
    if (f.seed) c.seed = *f.seed;
    if (f.payoff) c.payoff = *f.payoff;
    if (f.nu_list) c.nu_list = parse_number_list(*f.nu_list);
    if (f.grid) std::tie(c.n_sigma, c.n_x) = parse_grid(*f.grid);
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return c;
}

/// Writes to the named file, or to stdout when no path is given.
void emit(const std::optional<std::string>& path, const std::string& text) {
  if (!path) {
    std::cout << text;
    return;
  }
  std::ofstream out(*path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + *path + "'");
  out << text;
}

Field initial_field(const RunConfig& c, const std::shared_ptr<const Grid2D>& g) {
  if (c.payoff == "call") return payoff_sample(Payoff{payoff::Call{c.strike}, {}}, g);
  return study_datum(g, c.bump_width, c.bump_sigma_lo, c.bump_sigma_hi);
}

// ---------------------------------------------------------------------------

int cmd_price(const Flags& f) {
  RunConfig d;
  d.n_sigma = 12;
  d.n_x = 33;
  const RunConfig c = layer(d, f);
  if (f.sigma.has_value() != f.x.has_value()) throw ConfigError("price: give both --sigma and --x, or neither");
  std::ostringstream os;
  os << "# config_hash=" << config_hash(c) << '\n' << "sigma,x,t,price\n";
  auto row = [&](double s, double x) {
    os << format_double(s) << ',' << format_double(x) << ',' << format_double(c.t) << ','
       << format_double(price_zero_volvol(c.params, c.t, c.strike, s, x)) << '\n';
  };
  if (f.sigma) {
    if (*f.sigma < c.params.alpha || *f.sigma > c.params.beta) throw ConfigError("price: --sigma outside [alpha, beta]");
    row(*f.sigma, *f.x);
  } else {
    const double lk = std::log(c.strike);
    const auto g = c.grid(lk - 8.0, lk + 8.0);
    for (double s : g->sigma())
      for (double x : g->x()) row(s, x);
  }
  emit(f.out, os.str());
  return 0;
}

int cmd_kernel(const Flags& f) {
  const RunConfig c = layer(RunConfig{}, f);
  if (!f.sigma || !f.x || !f.y) throw ConfigError("kernel: --sigma, --x and --y are required");
  if (!(c.t > 0.0)) throw ConfigError("kernel: --t must be > 0");
  std::ostringstream os;
  os << "# config_hash=" << config_hash(c) << '\n' << "sigma,x,y,t,density\n";
  os << format_double(*f.sigma) << ',' << format_double(*f.x) << ',' << format_double(*f.y) << ','
     << format_double(c.t) << ',' << format_double(kernel_density(c.params, c.t, *f.sigma, *f.x, *f.y)) << '\n';
  emit(f.out, os.str());
  return 0;
}

int cmd_fd_solve(const Flags& f) {
  RunConfig d;
  d.n_sigma = 56;
  d.n_x = 81;
  const RunConfig c = layer(d, f);
  Generator which = Generator::L0;
  try {
    if (f.generator) which = parse_generator(*f.generator);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  const double lk = std::log(c.strike);
  const auto g = c.payoff == "call" ? c.grid(lk - 8.0, lk + 8.0) : c.grid(-4.0, 4.0);
  const Field h = initial_field(c, g);
  // Dirichlet nodes keep their initial values (zero for the bump datum).
  const FDOperator op = assemble(c.params, g, which, false, h);
  const std::size_t n = steps_for(c.t, c.scheme.dt);
  ThetaScheme scheme = c.scheme;
  scheme.dt = c.t / static_cast<double>(n);
  const Field u = step(op, scheme, h, n);

  std::ostringstream os;
  write_checkpoint(os, CheckpointMeta{c.t, scheme.dt, to_string(which), params_hash(c.params)}, u);
  emit(f.out, os.str());

  if (f.report || f.richardson) {
    json r{{"command", "fd-solve"},
           {"config_hash", config_hash(c)},
           {"generator", to_string(which)},
           {"params", params_json(c.params)},
           {"grid", grid_json(*g)},
           {"t", c.t},
           {"dt", scheme.dt},
           {"steps", n}};
    if (f.richardson) {
      ThetaScheme half = scheme;
      half.dt = 0.5 * scheme.dt;
      const Field v = step(op, half, h, 2 * n);
      r["self_difference"] = weighted_l2_distance(u, v, WeightSpec{c.params.lambda});
    }
    if (f.report) {
      emit(f.report, r.dump(2) + "\n");
    } else {
      std::cerr << r.dump(2) << '\n';
    }
  }
  return 0;
}

int cmd_verify(const Flags& f) {
  const std::string suite = f.suite.value_or("identities");
  RunConfig d;
  if (suite == "identities") {
    d.n_sigma = 221;
    d.n_x = 4097;
    d.x_min = -12.0;
    d.x_max = 12.0;
    d.quadrature = QuadratureSpec::trapezoid(201, 8.0);
    d.tol = 1e-5;
  } else if (suite == "oracle") {
    d.n_sigma = 30;
    d.n_x = 60;
    d.x_min = -6.0;
    d.x_max = 6.0;
    d.t = 0.5;
    d.quadrature = QuadratureSpec::hermite(64);
    d.tol = 5e-4;
  } else if (suite == "garding") {
    d.n_sigma = 41;
    d.n_x = 81;
    d.x_min = -4.0;
    d.x_max = 4.0;
    d.params.nu = 0.2;
    d.params.rho = 0.3;
  } else if (suite == "smoothing") {
    d.n_sigma = 12;
    d.n_x = 4001;
  } else {
    throw ConfigError("verify: unknown suite '" + suite + "' (identities, oracle, garding, smoothing)");
  }
  const RunConfig c = layer(d, f);

  SuiteReport r;
  if (suite == "identities") {
    r = run_identity_suite(c.params, c.grid(-12.0, 12.0), c.quadrature, c.tol);
  } else if (suite == "oracle") {
    r = run_oracle_suite(c.params, c.grid(-6.0, 6.0), c.t, c.scheme, c.quadrature, c.tol);
  } else if (suite == "garding") {
    if (!(c.params.nu > 0.0)) throw ConfigError("verify garding: nu must be > 0 (L is degenerate at nu = 0)");
    r = run_garding_suite(c.params, c.grid(-4.0, 4.0), c.trials, c.seed);
  } else {
    const double lk = std::log(c.strike);
    const auto g = c.grid(lk - 8.0, lk + 8.0);
    const Field h = payoff_sample(Payoff{payoff::Call{c.strike}, {}}, g);
    const SmoothingReport s = check_smoothing_decay(c.params, h, c.quadrature);
    r.suite = "smoothing";
    r.params = params_json(c.params);
    r.grid = grid_json(*g);
    for (const auto& fit : s.fits) {
      r.add("smoothing.k" + std::to_string(fit.k) + ".exponent", fit.exponent, -0.5 * fit.k - 0.15, true);
    }
  }
  r.environment["config_hash"] = config_hash(c);
  r.environment["seed"] = c.seed;
  emit(f.out, r.to_json().dump(2) + "\n");
  std::cerr << r.to_text();
  return r.passed() ? 0 : 1;
}

int cmd_error_study(const Flags& f) {
  const StudySetup s = default_study();
  RunConfig d;
  d.params = s.params;
  d.n_sigma = 111;
  d.n_x = 81;
  d.x_min = -4.0;
  d.x_max = 4.0;
  d.sigma_h_min = 1e-4;
  d.sigma_ratio = 1.1;
  d.scheme = s.scheme;
  d.t = s.t;
  d.nu_list = s.nu_list;
  const RunConfig c = layer(d, f);
  if (c.payoff != "bump") throw ConfigError("error-study: the datum must be the compactly supported bump");
  if (c.nu_list.empty()) throw ConfigError("error-study: nu_list is empty");
  const auto g = c.grid(-4.0, 4.0);
  const Field h = initial_field(c, g);
  const ErrorStudyReport r = run_error_study(c.params, c.nu_list, c.t, g, c.scheme, h, c.quadrature);

  std::ostringstream os;
  os << "# config_hash=" << config_hash(c) << '\n' << "nu,error\n";
  for (std::size_t k = 0; k < r.nu_values.size(); ++k) {
    os << format_double(r.nu_values[k]) << ',' << format_double(r.errors[k]) << '\n';
  }
  emit(f.out, os.str());
  json j = r.to_json();
  j["config_hash"] = config_hash(c);
  if (f.report) {
    emit(f.report, j.dump(2) + "\n");
  } else {
    std::cerr << j.dump(2) << '\n';
  }
  return r.status == ErrorStudyReport::Status::invalid ? 3 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Zero-volvol semigroup, finite-difference solver and verification harness for the lambda-SABR PDE"};
  app.require_subcommand(1);
  app.fallthrough();
  Flags f;
  app.add_option("--config", f.config_path, "Flat key = value config file ('#' comments); flags override it")
      ->check(CLI::ExistingFile);

  auto common = [&](CLI::App* s) {
    s->add_option("--t", f.t, "Horizon t >= 0");
    s->add_option("--nu", f.nu, "Volvol nu >= 0");
    s->add_option("--strike", f.strike, "Call strike K > 0");
    s->add_option("--grid", f.grid, "Grid size NSIGMAxNX, e.g. 56x81");
    s->add_option("--seed", f.seed, "Seed for randomized checks");
    s->add_option("--out", f.out, "Output file (default stdout)");
  };

  auto* price = app.add_subcommand("price", "Zero-volvol call prices on the grid or at one point (CSV)");
  common(price);
  price->add_option("--sigma", f.sigma, "Volatility of a single point");
  price->add_option("--x", f.x, "Log-price of a single point");

  auto* kernel = app.add_subcommand("kernel", "Pricing-kernel density at (sigma, x, y) (CSV)");
  common(kernel);
  kernel->add_option("--sigma", f.sigma, "Volatility")->required();
  kernel->add_option("--x", f.x, "Log-price x")->required();
  kernel->add_option("--y", f.y, "Integration variable y")->required();

  auto* fd = app.add_subcommand("fd-solve", "Theta-scheme solve of du/dt = G u; writes a checkpoint CSV");
  common(fd);
  fd->add_option("--generator", f.generator, "Generator: L, L0, A, B, L1 or L2 (default L0)");
  fd->add_option("--payoff", f.payoff, "Initial datum: bump (default) or call");
  fd->add_option("--report", f.report, "Write a JSON run summary here");
  fd->add_flag("--richardson", f.richardson, "Also solve with dt/2 and report the self-difference");

  auto* verify = app.add_subcommand("verify", "Run a verification suite; JSON report, exit 1 on failure");
  common(verify);
  verify->add_option("--suite", f.suite, "identities (default), oracle, garding or smoothing");

  auto* study = app.add_subcommand("error-study", "Error of the zero-volvol semigroup against the nu > 0 solve");
  common(study);
  study->add_option("--nu-list", f.nu_list, "Comma-separated increasing nu values (default 0.05,0.1,0.2,0.4)");
  study->add_option("--report", f.report, "Write the JSON report here (default stderr)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*price) return cmd_price(f);
    if (*kernel) return cmd_kernel(f);
    if (*fd) return cmd_fd_solve(f);
    if (*verify) return cmd_verify(f);
    if (*study) return cmd_error_study(f);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  }
  return 2;
}
