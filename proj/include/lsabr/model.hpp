#pragma once

// Domain types shared by every module: model parameters, the (sigma, x)
// tensor grid, sampled fields, payoffs and exponentially weighted norms.
//
// Weight convention: a function f belongs to the weighted space with
// exponent lambda when exp(-lambda * <x>) f is square integrable, where
// <x> = sqrt(1 + x^2). Norms therefore multiply by exp(-lambda * <x>).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace lsabr {

/// Full parameter set of the lambda-SABR generator.
struct ModelParams {
  double kappa = 1.0;   // mean-reversion speed
  double theta = 0.2;   // long-run volatility level
  double nu = 0.0;      // volvol
  double rho = 0.0;     // correlation
  double alpha = 0.05;  // lower volatility bound
  double beta = 0.6;    // upper volatility bound
  double lambda = 0.0;  // weight exponent

  /// Throws std::invalid_argument naming the first violated invariant.
  void validate() const {
    auto bad = [](const std::string& what) { throw std::invalid_argument("ModelParams: " + what); };
    for (double v : {kappa, theta, nu, rho, alpha, beta, lambda}) {
      if (!std::isfinite(v)) bad("all parameters must be finite");
    }
    if (!(kappa > 0.0)) bad("kappa must be > 0");
    if (!(nu >= 0.0)) bad("nu must be >= 0");
    if (!(std::abs(rho) < 1.0)) bad("|rho| must be < 1");
    if (!(lambda >= 0.0)) bad("lambda must be >= 0");
    if (!(0.0 < alpha && alpha < theta && theta < beta)) bad("require 0 < alpha < theta < beta");
  }

  [[nodiscard]] ModelParams with_nu(double v) const {
    ModelParams p = *this;
    p.nu = v;
    return p;
  }
};

/// Japanese bracket <x> = sqrt(1 + x^2).
inline double japanese_bracket(double x) { return std::hypot(1.0, x); }

struct WeightSpec {
  double lambda = 0.0;

  /// exp(lambda * <x>); functions are divided by this inside norms.
  [[nodiscard]] double value(double x) const { return std::exp(lambda * japanese_bracket(x)); }
};

/// Tensor-product grid over [alpha, beta] x [x_min, x_max]. sigma nodes may
/// be non-uniform, x nodes are uniform.
class Grid2D {
 public:
  Grid2D(std::vector<double> sigma_nodes, std::vector<double> x_nodes)
      : sigma_(std::move(sigma_nodes)), x_(std::move(x_nodes)) {
    if (sigma_.size() < 3 || x_.size() < 3) {
      throw std::invalid_argument("Grid2D: need at least 3 nodes per axis");
    }
    for (std::size_t i = 1; i < sigma_.size(); ++i) {
      if (!(sigma_[i] > sigma_[i - 1])) throw std::invalid_argument("Grid2D: sigma nodes must increase");
    }
    for (std::size_t j = 1; j < x_.size(); ++j) {
      if (!(x_[j] > x_[j - 1])) throw std::invalid_argument("Grid2D: x nodes must increase");
    }
    dx_ = (x_.back() - x_.front()) / static_cast<double>(x_.size() - 1);
    for (std::size_t j = 1; j < x_.size(); ++j) {
      if (std::abs((x_[j] - x_[j - 1]) / dx_ - 1.0) > 1e-9) {
        throw std::invalid_argument("Grid2D: x nodes must be uniformly spaced");
      }
    }
  }

  static Grid2D uniform(double alpha, double beta, std::size_t n_sigma, double x_min, double x_max,
                        std::size_t n_x) {
    return Grid2D(linspace(alpha, beta, n_sigma), linspace(x_min, x_max, n_x));
  }

  static std::vector<double> linspace(double a, double b, std::size_t n) {
    if (n < 2) throw std::invalid_argument("linspace: need n >= 2");
    std::vector<double> v(n);
    const double h = (b - a) / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) v[i] = a + h * static_cast<double>(i);
    v.back() = b;
    return v;
  }

  /// Nodes on [a, b]: uniform spacing h_core = (b - a) / (n_core - 1) away from
  /// b, geometrically refined toward b (spacings h_min, h_min r, h_min r^2, ...
  /// until they reach h_core). h_min <= 0 gives the plain uniform grid.
  static std::vector<double> graded_toward_end(double a, double b, std::size_t n_core, double h_min, double ratio) {
    if (n_core < 3) throw std::invalid_argument("graded_toward_end: need n_core >= 3");
    const double h_core = (b - a) / static_cast<double>(n_core - 1);
    if (!(h_min > 0.0) || h_min >= h_core) return linspace(a, b, n_core);
    if (!(ratio > 1.0)) throw std::invalid_argument("graded_toward_end: ratio must be > 1");
    std::vector<double> tail;
    double pos = b;
    for (double h = h_min; h < h_core; h *= ratio) {
      tail.push_back(pos);
      pos -= h;
    }
    if (!(pos > a + h_core)) throw std::invalid_argument("graded_toward_end: refinement zone covers the interval");
    const auto n = static_cast<std::size_t>(std::ceil((pos - a) / h_core - 1e-9));
    std::vector<double> v = linspace(a, pos, n + 1);
    v.insert(v.end(), tail.rbegin(), tail.rend());
    v.back() = b;
    return v;
  }

  [[nodiscard]] std::span<const double> sigma() const { return sigma_; }
  [[nodiscard]] std::span<const double> x() const { return x_; }
  [[nodiscard]] std::size_t n_sigma() const { return sigma_.size(); }
  [[nodiscard]] std::size_t n_x() const { return x_.size(); }
  [[nodiscard]] std::size_t size() const { return sigma_.size() * x_.size(); }
  [[nodiscard]] double dx() const { return dx_; }
  [[nodiscard]] double alpha() const { return sigma_.front(); }
  [[nodiscard]] double beta() const { return sigma_.back(); }

  /// Checks that the sigma axis spans exactly [alpha, beta] of the model.
  void check_matches(const ModelParams& p) const {
    if (std::abs(alpha() - p.alpha) > 1e-12 || std::abs(beta() - p.beta) > 1e-12) {
      throw std::invalid_argument("Grid2D: sigma axis must span [alpha, beta]");
    }
  }

  /// Trapezoid weights along sigma.
  [[nodiscard]] std::vector<double> sigma_weights() const { return trapezoid(sigma_); }
  [[nodiscard]] std::vector<double> x_weights() const { return trapezoid(x_); }

  friend bool operator==(const Grid2D& a, const Grid2D& b) { return a.sigma_ == b.sigma_ && a.x_ == b.x_; }

 private:
  static std::vector<double> trapezoid(const std::vector<double>& nodes) {
    std::vector<double> w(nodes.size(), 0.0);
    for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
      const double h = nodes[i + 1] - nodes[i];
      w[i] += 0.5 * h;
      w[i + 1] += 0.5 * h;
    }
    return w;
  }

  std::vector<double> sigma_;
  std::vector<double> x_;
  double dx_ = 0.0;
};

/// Values u(sigma_i, x_j) stored row-major (sigma index outer).
class Field {
 public:
  explicit Field(std::shared_ptr<const Grid2D> grid, double fill = 0.0)
      : grid_(std::move(grid)), values_(grid_->size(), fill) {}

  Field(std::shared_ptr<const Grid2D> grid, std::vector<double> values)
      : grid_(std::move(grid)), values_(std::move(values)) {
    if (values_.size() != grid_->size()) throw std::invalid_argument("Field: value count does not match grid");
  }

  [[nodiscard]] const Grid2D& grid() const { return *grid_; }
  [[nodiscard]] const std::shared_ptr<const Grid2D>& grid_ptr() const { return grid_; }
  [[nodiscard]] std::size_t n_sigma() const { return grid_->n_sigma(); }
  [[nodiscard]] std::size_t n_x() const { return grid_->n_x(); }

  double& operator()(std::size_t i, std::size_t j) { return values_[i * grid_->n_x() + j]; }
  double operator()(std::size_t i, std::size_t j) const { return values_[i * grid_->n_x() + j]; }

  [[nodiscard]] std::span<double> row(std::size_t i) { return {values_.data() + i * n_x(), n_x()}; }
  [[nodiscard]] std::span<const double> row(std::size_t i) const { return {values_.data() + i * n_x(), n_x()}; }

  [[nodiscard]] std::vector<double>& values() { return values_; }
  [[nodiscard]] const std::vector<double>& values() const { return values_; }

  [[nodiscard]] bool all_finite() const {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
  }

  [[nodiscard]] double max_abs() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
  }

  void require_same_grid(const Field& other) const {
    if (grid_ != other.grid_ && !(*grid_ == *other.grid_)) {
      throw std::invalid_argument("Field: grids do not match");
    }
  }

  Field& operator+=(const Field& o) {
    require_same_grid(o);
    for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += o.values_[k];
    return *this;
  }
  Field& operator-=(const Field& o) {
    require_same_grid(o);
    for (std::size_t k = 0; k < values_.size(); ++k) values_[k] -= o.values_[k];
    return *this;
  }
  Field& operator*=(double s) {
    for (double& v : values_) v *= s;
    return *this;
  }
  friend Field operator+(Field a, const Field& b) { return a += b; }
  friend Field operator-(Field a, const Field& b) { return a -= b; }
  friend Field operator*(double s, Field a) { return a *= s; }

 private:
  std::shared_ptr<const Grid2D> grid_;
  std::vector<double> values_;
};

inline std::shared_ptr<const Grid2D> make_grid(Grid2D g) { return std::make_shared<const Grid2D>(std::move(g)); }

/// Trapezoid approximation of || exp(-lambda <x>) f ||_{L^2(I x R)}.
inline double weighted_l2_norm(const Field& f, const WeightSpec& w) {
  const Grid2D& g = f.grid();
  const auto ws = g.sigma_weights();
  const auto wx = g.x_weights();
  std::vector<double> wlam(g.n_x());
  for (std::size_t j = 0; j < g.n_x(); ++j) {
    const double e = std::exp(-w.lambda * japanese_bracket(g.x()[j]));
    wlam[j] = wx[j] * e * e;
  }
  double s = 0.0;
  for (std::size_t i = 0; i < g.n_sigma(); ++i) {
    double r = 0.0;
    for (std::size_t j = 0; j < g.n_x(); ++j) r += wlam[j] * f(i, j) * f(i, j);
    s += ws[i] * r;
  }
  return std::sqrt(s);
}

/// Norm of the difference of two fields on the same grid.
inline double weighted_l2_distance(const Field& a, const Field& b, const WeightSpec& w) {
  a.require_same_grid(b);
  return weighted_l2_norm(a - b, w);
}

// ---------------------------------------------------------------------------
// Payoffs

namespace payoff {
struct Call {
  double strike = 1.0;
};
struct GaussianBump {
  double center = 0.0;
  double width = 0.5;  // standard deviation in x
};
struct ExpX {};
struct Constant {
  double c = 1.0;
};
struct Tabulated {
  std::shared_ptr<const Field> field;
};
}  // namespace payoff

/// Payoff h(sigma, x) = profile(sigma) * kind(x). Tabulated payoffs carry their
/// own sigma dependence and are returned as-is (interpolation is the caller's
/// business).
struct Payoff {
  using Kind = std::variant<payoff::Call, payoff::GaussianBump, payoff::ExpX, payoff::Constant, payoff::Tabulated>;

  Kind kind = payoff::Constant{};
  /// Per-sigma-node samples of a smooth factor; empty means constant in sigma.
  std::vector<double> sigma_profile;

  void validate() const {
    if (const auto* c = std::get_if<payoff::Call>(&kind); c && !(c->strike > 0.0)) {
      throw std::invalid_argument("Payoff: call strike must be > 0");
    }
    if (const auto* g = std::get_if<payoff::GaussianBump>(&kind); g && !(g->width > 0.0)) {
      throw std::invalid_argument("Payoff: gaussian width must be > 0");
    }
    if (const auto* t = std::get_if<payoff::Tabulated>(&kind); t && !t->field) {
      throw std::invalid_argument("Payoff: tabulated payoff needs a field");
    }
  }

  /// The x-part evaluated at a point; not defined for tabulated payoffs.
  [[nodiscard]] double x_part(double x) const {
    struct Visitor {
      double x;
      double operator()(const payoff::Call& c) const { return std::max(std::exp(x) - c.strike, 0.0); }
      double operator()(const payoff::GaussianBump& g) const {
        const double z = (x - g.center) / g.width;
        return std::exp(-0.5 * z * z);
      }
      double operator()(const payoff::ExpX&) const { return std::exp(x); }
      double operator()(const payoff::Constant& c) const { return c.c; }
      double operator()(const payoff::Tabulated&) const {
        throw std::logic_error("Payoff: tabulated payoff has no analytic x-part");
      }
    };
    return std::visit(Visitor{x}, kind);
  }
};

/// C-infinity bump supported on (lo, hi), equal to 1 at the midpoint.
inline double smooth_bump(double s, double lo, double hi) {
  const double mid = 0.5 * (lo + hi);
  const double half = 0.5 * (hi - lo);
  const double r = (s - mid) / half;
  if (std::abs(r) >= 1.0) return 0.0;
  return std::exp(1.0 - 1.0 / (1.0 - r * r));
}

inline std::vector<double> sample_sigma_profile(const Grid2D& g, const std::function<double(double)>& f) {
  std::vector<double> v(g.n_sigma());
  for (std::size_t i = 0; i < g.n_sigma(); ++i) v[i] = f(g.sigma()[i]);
  return v;
}

inline Field payoff_sample(const Payoff& p, const std::shared_ptr<const Grid2D>& grid) {
  p.validate();
  const Grid2D& g = *grid;
  if (const auto* t = std::get_if<payoff::Tabulated>(&p.kind)) {
    t->field->require_same_grid(Field(grid));
    return *t->field;
  }
  if (!p.sigma_profile.empty() && p.sigma_profile.size() != g.n_sigma()) {
    throw std::invalid_argument("Payoff: sigma profile length does not match grid");
  }
  Field f(grid);
  std::vector<double> xs(g.n_x());
  for (std::size_t j = 0; j < g.n_x(); ++j) xs[j] = p.x_part(g.x()[j]);
  for (std::size_t i = 0; i < g.n_sigma(); ++i) {
    const double s = p.sigma_profile.empty() ? 1.0 : p.sigma_profile[i];
    for (std::size_t j = 0; j < g.n_x(); ++j) f(i, j) = s * xs[j];
  }
  return f;
}

/// Samples an arbitrary function of (sigma, x) on the grid.
inline Field sample(const std::shared_ptr<const Grid2D>& grid, const std::function<double(double, double)>& f) {
  Field out(grid);
  const Grid2D& g = *grid;
  for (std::size_t i = 0; i < g.n_sigma(); ++i) {
    for (std::size_t j = 0; j < g.n_x(); ++j) out(i, j) = f(g.sigma()[i], g.x()[j]);
  }
  return out;
}

}  // namespace lsabr
