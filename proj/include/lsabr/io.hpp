#pragma once

// Text formats: Field CSV ("sigma,x,value", sigma-major), solver checkpoints
// (the same CSV behind a "# key=value,..." header line) and the flat
// key = value run configuration.

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "lsabr/fdsolver.hpp"
#include "lsabr/model.hpp"
#include "lsabr/semigroups.hpp"

namespace lsabr {

/// Shortest representation that reads back to the same double.
inline std::string format_double(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  if (r.ec != std::errc()) throw std::runtime_error("format_double: conversion failed");
  return {buf, r.ptr};
}

inline double parse_double(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size() || s.empty()) {
    throw std::invalid_argument("not a number: '" + std::string(s) + "'");
  }
  return v;
}

// ---------------------------------------------------------------------------
// Field CSV

inline void write_field_csv(std::ostream& os, const Field& f) {
  const Grid2D& g = f.grid();
  os << "sigma,x,value\n";
  for (std::size_t i = 0; i < g.n_sigma(); ++i) {
    const std::string s = format_double(g.sigma()[i]);
    for (std::size_t j = 0; j < g.n_x(); ++j) {
      os << s << ',' << format_double(g.x()[j]) << ',' << format_double(f(i, j)) << '\n';
    }
  }
}

namespace detail {

inline std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t k = line.find(sep, start);
    out.push_back(line.substr(start, k == std::string_view::npos ? std::string_view::npos : k - start));
    if (k == std::string_view::npos) break;
    start = k + 1;
  }
  return out;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace detail

/// Reads the body of a field CSV (header line first). The grid is rebuilt
/// from the coordinates, which must form a complete sigma-major tensor.
inline Field read_field_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || detail::trim(line) != "sigma,x,value") {
    throw std::invalid_argument("field csv: expected header 'sigma,x,value'");
  }
  std::vector<double> s, x, v;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    const auto parts = detail::split(line, ',');
    if (parts.size() != 3) throw std::invalid_argument("field csv: line " + std::to_string(lineno) + " needs 3 columns");
    s.push_back(parse_double(parts[0]));
    x.push_back(parse_double(parts[1]));
    v.push_back(parse_double(parts[2]));
  }
  std::vector<double> sig, xs;
  for (std::size_t k = 0; k < s.size(); ++k) {
    if (sig.empty() || s[k] != sig.back()) sig.push_back(s[k]);
  }
  for (std::size_t k = 0; k < x.size() && (k == 0 || s[k] == s[0]); ++k) xs.push_back(x[k]);
  if (xs.empty() || sig.size() * xs.size() != v.size()) throw std::invalid_argument("field csv: not a tensor grid");
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (s[k] != sig[k / xs.size()] || x[k] != xs[k % xs.size()]) {
      throw std::invalid_argument("field csv: rows are not sigma-major over a tensor grid");
    }
  }
  return Field(make_grid(Grid2D(sig, xs)), v);
}

// ---------------------------------------------------------------------------
// Parameter fingerprint and checkpoints

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string params_text(const ModelParams& p) {
  return "kappa=" + format_double(p.kappa) + ",theta=" + format_double(p.theta) + ",nu=" + format_double(p.nu) +
         ",rho=" + format_double(p.rho) + ",alpha=" + format_double(p.alpha) + ",beta=" + format_double(p.beta) +
         ",lambda=" + format_double(p.lambda);
}

inline std::string params_hash(const ModelParams& p) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(params_text(p))));
  return buf;
}

struct CheckpointMeta {
  double t = 0.0;
  double dt = 0.0;
  std::string generator;
  std::string params_hash;
};

inline void write_checkpoint(std::ostream& os, const CheckpointMeta& m, const Field& f) {
  os << "# t=" << format_double(m.t) << ",dt=" << format_double(m.dt) << ",generator=" << m.generator
     << ",params_hash=" << m.params_hash << '\n';
  write_field_csv(os, f);
}

inline std::pair<CheckpointMeta, Field> read_checkpoint(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line.rfind("# ", 0) != 0) throw std::invalid_argument("checkpoint: missing header");
  CheckpointMeta m;
  bool have_t = false, have_dt = false;
  for (auto kv : detail::split(std::string_view(line).substr(2), ',')) {
    const auto eq = kv.find('=');
    if (eq == std::string_view::npos) throw std::invalid_argument("checkpoint: malformed header");
    const auto key = detail::trim(kv.substr(0, eq));
    const auto val = detail::trim(kv.substr(eq + 1));
    if (key == "t") {
      m.t = parse_double(val);
      have_t = true;
    } else if (key == "dt") {
      m.dt = parse_double(val);
      have_dt = true;
    } else if (key == "generator") {
      m.generator = std::string(val);
    } else if (key == "params_hash") {
      m.params_hash = std::string(val);
    } else {
      throw std::invalid_argument("checkpoint: unknown header key '" + std::string(key) + "'");
    }
  }
  if (!have_t || !have_dt || m.generator.empty() || m.params_hash.empty()) {
    throw std::invalid_argument("checkpoint: header needs t, dt, generator and params_hash");
  }
  return {m, read_field_csv(is)};
}

// ---------------------------------------------------------------------------
// Run configuration

struct RunConfig {
  ModelParams params;

  // Grid. Unset x bounds default per command (ln K -+ 8 for calls).
  std::size_t n_sigma = 111;
  std::size_t n_x = 161;
  std::optional<double> x_min, x_max;
  double sigma_h_min = 0.0;  // > 0 grades the sigma grid toward beta
  double sigma_ratio = 1.1;

  QuadratureSpec quadrature;
  ThetaScheme scheme;

  double t = 1.0;
  double strike = 1.0;
  std::uint64_t seed = 12345;
  std::size_t trials = 200;
  double tol = 1e-4;
  std::vector<double> nu_list{0.05, 0.1, 0.2, 0.4};

  // Payoff for fd-solve / studies: "bump" (x-Gaussian times a sigma bump) or "call".
  std::string payoff = "bump";
  double bump_width = 0.5;
  double bump_sigma_lo = 0.15;
  double bump_sigma_hi = 0.45;

  void validate() const {
    params.validate();
    if (n_sigma < 3 || n_x < 3) throw std::invalid_argument("config: n_sigma and n_x must be >= 3");
    if (x_min && x_max && !(*x_min < *x_max)) throw std::invalid_argument("config: x_min must be < x_max");
    quadrature.validate();
    scheme.validate();
    if (!(t >= 0.0) || !std::isfinite(t)) throw std::invalid_argument("config: t must be >= 0");
    if (!(strike > 0.0)) throw std::invalid_argument("config: strike must be > 0");
    if (payoff != "bump" && payoff != "call") throw std::invalid_argument("config: payoff must be bump or call");
    if (!(bump_width > 0.0)) throw std::invalid_argument("config: bump_width must be > 0");
    if (!(params.alpha < bump_sigma_lo && bump_sigma_lo < bump_sigma_hi && bump_sigma_hi < params.beta)) {
      throw std::invalid_argument("config: need alpha < bump_sigma_lo < bump_sigma_hi < beta");
    }
    if (!(tol > 0.0)) throw std::invalid_argument("config: tol must be > 0");
    for (std::size_t k = 0; k < nu_list.size(); ++k) {
      if (!(nu_list[k] > 0.0) || (k > 0 && !(nu_list[k] > nu_list[k - 1]))) {
        throw std::invalid_argument("config: nu_list must be positive and strictly increasing");
      }
    }
  }

  [[nodiscard]] double x_lo(double fallback) const { return x_min.value_or(fallback); }
  [[nodiscard]] double x_hi(double fallback) const { return x_max.value_or(fallback); }

  /// Grid over [alpha, beta] x [x_lo, x_hi].
  [[nodiscard]] std::shared_ptr<const Grid2D> grid(double x_lo_default, double x_hi_default) const {
    auto s = Grid2D::graded_toward_end(params.alpha, params.beta, n_sigma, sigma_h_min, sigma_ratio);
    return make_grid(Grid2D(std::move(s), Grid2D::linspace(x_lo(x_lo_default), x_hi(x_hi_default), n_x)));
  }
};

/// Canonical key = value listing of every setting (one per line).
inline std::string config_text(const RunConfig& c) {
  std::ostringstream os;
  auto kv = [&](const char* k, const std::string& v) { os << k << " = " << v << '\n'; };
  auto num = [&](const char* k, double v) { kv(k, format_double(v)); };
  num("kappa", c.params.kappa);
  num("theta", c.params.theta);
  num("nu", c.params.nu);
  num("rho", c.params.rho);
  num("alpha", c.params.alpha);
  num("beta", c.params.beta);
  num("lambda", c.params.lambda);
  kv("n_sigma", std::to_string(c.n_sigma));
  kv("n_x", std::to_string(c.n_x));
  if (c.x_min) num("x_min", *c.x_min);
  if (c.x_max) num("x_max", *c.x_max);
  num("sigma_h_min", c.sigma_h_min);
  num("sigma_ratio", c.sigma_ratio);
  kv("quad_rule", c.quadrature.rule == QuadratureSpec::Rule::trapezoid ? "trapezoid" : "gauss_hermite");
  kv("quad_order", std::to_string(c.quadrature.order));
  kv("quad_points", std::to_string(c.quadrature.points));
  num("quad_width", c.quadrature.width);
  num("theta_weight", c.scheme.theta_weight);
  num("dt", c.scheme.dt);
  num("t", c.t);
  num("strike", c.strike);
  kv("seed", std::to_string(c.seed));
  kv("trials", std::to_string(c.trials));
  num("tol", c.tol);
  std::string nl;
  for (double v : c.nu_list) nl += (nl.empty() ? "" : ",") + format_double(v);
  kv("nu_list", nl);
  kv("payoff", c.payoff);
  num("bump_width", c.bump_width);
  num("bump_sigma_lo", c.bump_sigma_lo);
  num("bump_sigma_hi", c.bump_sigma_hi);
  return os.str();
}

inline std::string config_hash(const RunConfig& c) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(config_text(c))));
  return buf;
}

inline std::vector<double> parse_number_list(std::string_view s) {
  std::vector<double> v;
  for (auto part : detail::split(s, ',')) {
    if (!detail::trim(part).empty()) v.push_back(parse_double(part));
  }
  return v;
}

/// Applies one key = value assignment. Unknown keys throw.
inline void set_config_value(RunConfig& c, std::string_view key, std::string_view value) {
  auto num = [&] { return parse_double(value); };
  auto count = [&] {
    const double v = num();
    if (!(v >= 0.0) || v != std::floor(v) || v > 1e15) {
      throw std::invalid_argument("config: " + std::string(key) + " must be a non-negative integer");
    }
    return static_cast<std::size_t>(v);
  };
  const std::string k(key);
  if (k == "kappa") c.params.kappa = num();
  else if (k == "theta") c.params.theta = num();
  else if (k == "nu") c.params.nu = num();
  else if (k == "rho") c.params.rho = num();
  else if (k == "alpha") c.params.alpha = num();
  else if (k == "beta") c.params.beta = num();
  else if (k == "lambda") c.params.lambda = num();
  else if (k == "n_sigma") c.n_sigma = count();
  else if (k == "n_x") c.n_x = count();
  else if (k == "x_min") c.x_min = num();
  else if (k == "x_max") c.x_max = num();
  else if (k == "sigma_h_min") c.sigma_h_min = num();
  else if (k == "sigma_ratio") c.sigma_ratio = num();
  else if (k == "quad_rule") {
    if (value == "trapezoid") c.quadrature.rule = QuadratureSpec::Rule::trapezoid;
    else if (value == "gauss_hermite") c.quadrature.rule = QuadratureSpec::Rule::gauss_hermite;
    else throw std::invalid_argument("config: quad_rule must be trapezoid or gauss_hermite");
  }
  else if (k == "quad_order") c.quadrature.order = static_cast<int>(count());
  else if (k == "quad_points") c.quadrature.points = static_cast<int>(count());
  else if (k == "quad_width") c.quadrature.width = num();
  else if (k == "theta_weight") c.scheme.theta_weight = num();
  else if (k == "dt") c.scheme.dt = num();
  else if (k == "t") c.t = num();
  else if (k == "strike") c.strike = num();
  else if (k == "seed") c.seed = count();
  else if (k == "trials") c.trials = count();
  else if (k == "tol") c.tol = num();
  else if (k == "nu_list") c.nu_list = parse_number_list(value);
  else if (k == "payoff") c.payoff = std::string(value);
  else if (k == "bump_width") c.bump_width = num();
  else if (k == "bump_sigma_lo") c.bump_sigma_lo = num();
  else if (k == "bump_sigma_hi") c.bump_sigma_hi = num();
  else throw std::invalid_argument("config: unknown key '" + k + "'");
}

/// Flat "key = value" lines; '#' starts a comment. Later lines win.
inline void parse_config(std::istream& is, RunConfig& c) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    std::string_view v(line);
    if (const auto h = v.find('#'); h != std::string_view::npos) v = v.substr(0, h);
    v = detail::trim(v);
    if (v.empty()) continue;
    const auto eq = v.find('=');
    if (eq == std::string_view::npos) {
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
    }
    try {
      set_config_value(c, detail::trim(v.substr(0, eq)), detail::trim(v.substr(eq + 1)));
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": " + e.what());
    }
  }
}

inline RunConfig parse_config(std::istream& is) {
  RunConfig c;
  parse_config(is, c);
  return c;
}

}  // namespace lsabr
