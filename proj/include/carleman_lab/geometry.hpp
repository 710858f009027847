#ifndef CARLEMAN_LAB_GEOMETRY_HPP
#define CARLEMAN_LAB_GEOMETRY_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "carleman_lab/error.hpp"

namespace carleman_lab {

/// A point of R^n, n in {1, 2}. The second coordinate is ignored in 1D.
using Point = std::array<double, 2>;

inline double dot(const Point& a, const Point& b, int n) {
  double acc = 0.0;
  for (int i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

inline double norm2(const Point& a, int n) { return dot(a, a, n); }

/// Box domain (interval or rectangle), exterior observation point and final time.
struct DomainSpec {
  int dimension = 1;
  Point lower{0.0, 0.0};
  Point upper{1.0, 0.0};
  Point x0{-0.1, 0.0};
  double T = 1.5;

  bool operator==(const DomainSpec&) const = default;

  static DomainSpec interval(double a, double b, double x0, double T) {
    DomainSpec d;
    d.dimension = 1;
    d.lower = {a, 0.0};
    d.upper = {b, 0.0};
    d.x0 = {x0, 0.0};
    d.T = T;
    d.check();
    return d;
  }

  static DomainSpec rectangle(Point lower, Point upper, Point x0, double T) {
    DomainSpec d;
    d.dimension = 2;
    d.lower = lower;
    d.upper = upper;
    d.x0 = x0;
    d.T = T;
    d.check();
    return d;
  }

  double length(int axis) const { return upper[axis] - lower[axis]; }

  /// Nearest point of the closed box to x0.
  Point closest_to_x0() const {
    Point p{0.0, 0.0};
    for (int i = 0; i < dimension; ++i) p[i] = std::clamp(x0[i], lower[i], upper[i]);
    return p;
  }

  /// Corner of the closed box farthest from x0.
  Point farthest_from_x0() const {
    Point p{0.0, 0.0};
    for (int i = 0; i < dimension; ++i) {
      p[i] = std::abs(lower[i] - x0[i]) >= std::abs(upper[i] - x0[i]) ? lower[i] : upper[i];
    }
    return p;
  }

  double min_dist2_to_x0() const {
    Point c = closest_to_x0();
    Point d{c[0] - x0[0], c[1] - x0[1]};
    return norm2(d, dimension);
  }

  double max_dist2_to_x0() const {
    Point c = farthest_from_x0();
    Point d{c[0] - x0[0], c[1] - x0[1]};
    return norm2(d, dimension);
  }

  bool x0_exterior() const { return min_dist2_to_x0() > 0.0; }

  /// Throws on a degenerate box, non-positive T or x0 in the closed domain.
  void check() const {
    if (dimension != 1 && dimension != 2) {
      throw Error(ErrorKind::invalid_argument, "domain.dimension", "must be 1 or 2");
    }
    for (int i = 0; i < dimension; ++i) {
      if (!(upper[i] > lower[i])) {
        throw Error(ErrorKind::invalid_argument, "domain.bounds", "upper bound must exceed lower bound");
      }
    }
    if (!(T > 0.0) || !std::isfinite(T)) {
      throw Error(ErrorKind::invalid_argument, "domain.T", "final time must be positive");
    }
    if (!x0_exterior()) {
      throw Error(ErrorKind::invalid_argument, "domain.x0", "observation point must lie outside the closed domain");
    }
  }
};

/// sup over the closed domain of |x - x0|; attained at a corner for boxes.
inline double compute_t0(const DomainSpec& domain) { return std::sqrt(domain.max_dist2_to_x0()); }

/// Smallest beta0 with psi >= 1 on the closed space-time cylinder.
inline double min_beta0(const DomainSpec& domain, double beta) {
  return 1.0 - domain.min_dist2_to_x0() + beta * domain.T * domain.T;
}

/// Margin added to min_beta0 when beta0 is chosen automatically.
inline constexpr double kBeta0Margin = 0.1;

inline double auto_beta0(const DomainSpec& domain, double beta) { return min_beta0(domain, beta) + kBeta0Margin; }

struct AlphaWindow {
  double lower;
  double upper;
  bool contains(double a) const { return a > lower && a < upper; }
};

/// Open window (2 beta / (beta + n), 2 / (beta + n)) for the splitting parameter.
inline AlphaWindow alpha_window(double beta, int n) {
  return {2.0 * beta / (beta + n), 2.0 / (beta + n)};
}

/// Default splitting parameter: a quarter into the window. The midpoint is
/// exactly 1 in 1D, which would switch off the (alpha - 1) terms.
inline double auto_alpha(double beta, int n) {
  const AlphaWindow w = alpha_window(beta, n);
  return w.lower + 0.25 * (w.upper - w.lower);
}

/// Carleman parameters. gamma is the exponent of the auxiliary s^gamma d_t w term.
struct WeightParams {
  double beta = 0.5;
  double beta0 = 2.215;
  double lambda = 0.5;
  double s = 1.0;
  double alpha = 0.8;
  double gamma = 0.5;
};

inline double psi(const Point& x, double t, const WeightParams& p, const DomainSpec& d) {
  Point r{x[0] - d.x0[0], x[1] - d.x0[1]};
  return norm2(r, d.dimension) - p.beta * t * t + p.beta0;
}

inline double phi(const Point& x, double t, const WeightParams& p, const DomainSpec& d) {
  return std::exp(p.lambda * psi(x, t, p, d));
}

struct ValidationCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct ValidationReport {
  std::vector<ValidationCheck> checks;

  bool ok() const {
    return std::all_of(checks.begin(), checks.end(), [](const ValidationCheck& c) { return c.passed; });
  }

  const ValidationCheck* find(const std::string& name) const {
    for (const auto& c : checks) {
      if (c.name == name) return &c;
    }
    return nullptr;
  }
};

/// Checks every admissibility constraint and collects the outcomes; never throws.
inline ValidationReport validate(const WeightParams& p, const DomainSpec& d) {
  ValidationReport r;
  auto add = [&](std::string name, bool ok, std::string detail) {
    r.checks.push_back({std::move(name), ok, std::move(detail)});
  };

  add("beta_window", p.beta > 0.0 && p.beta < 1.0, "beta=" + std::to_string(p.beta) + " must lie in (0,1)");

  const double b0min = min_beta0(d, p.beta);
  add("beta0_sufficient", p.beta0 >= b0min,
      "beta0=" + std::to_string(p.beta0) + " needs >= " + std::to_string(b0min) + " so that psi >= 1");

  const AlphaWindow w = alpha_window(p.beta, d.dimension);
  add("alpha_window", w.contains(p.alpha),
      "alpha=" + std::to_string(p.alpha) + " must lie in (" + std::to_string(w.lower) + ", " +
          std::to_string(w.upper) + ")");

  const double t0 = compute_t0(d);
  add("T_exceeds_T0", d.T > t0, "T=" + std::to_string(d.T) + " must exceed T0=" + std::to_string(t0));

  add("x0_exterior", d.x0_exterior(), "x0 must lie outside the closed domain");

  add("lambda_positive", p.lambda > 0.0, "lambda=" + std::to_string(p.lambda) + " must be positive");
  add("gamma_nonnegative", p.gamma >= 0.0, "gamma=" + std::to_string(p.gamma) + " must be >= 0");
  return r;
}

/// Outward unit normal membership test for the observation subboundary.
inline bool in_gamma0(const Point& x, const Point& normal, const DomainSpec& d) {
  Point r{x[0] - d.x0[0], x[1] - d.x0[1]};
  return dot(r, normal, d.dimension) >= 0.0;
}

}  // namespace carleman_lab

#endif  // CARLEMAN_LAB_GEOMETRY_HPP
