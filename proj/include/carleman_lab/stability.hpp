#ifndef CARLEMAN_LAB_STABILITY_HPP
#define CARLEMAN_LAB_STABILITY_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <utility>
#include <vector>

#include "carleman_lab/error.hpp"
#include "carleman_lab/grid.hpp"
#include "carleman_lab/parallel.hpp"
#include "carleman_lab/wave_solver.hpp"
#include "carleman_lab/weights.hpp"

namespace carleman_lab {

// ---------------------------------------------------------------------------
// Absorption kernel
//
//   k(s, x) = int_0^T exp(-2 s e^{lam (|x - x0|^2 + beta0)} (1 - e^{-lam beta t^2})) dt
//           = int_0^T e^{2 s (phi(x, t) - phi(x, 0))} dt

/// Romberg integration: trapezoid halving with Richardson extrapolation until two
/// successive diagonal entries agree to `rel_tol`.
template <class F>
double romberg(F&& f, double a, double b, double rel_tol, int min_levels = 4, int max_levels = 30) {
  std::vector<double> prev{0.5 * (b - a) * (f(a) + f(b))};
  std::size_t panels = 1;
  for (int level = 1; level <= max_levels; ++level) {
    const double h = (b - a) / static_cast<double>(2 * panels);
    double mid = 0.0;
    for (std::size_t i = 0; i < panels; ++i) mid += f(a + static_cast<double>(2 * i + 1) * h);
    std::vector<double> cur(static_cast<std::size_t>(level) + 1);
    cur[0] = 0.5 * prev[0] + h * mid;
    double factor = 1.0;
    for (int j = 1; j <= level; ++j) {
      factor *= 4.0;
      cur[j] = cur[j - 1] + (cur[j - 1] - prev[j - 1]) / (factor - 1.0);
    }
    panels *= 2;
    if (level >= min_levels && std::abs(cur[level] - prev[level - 1]) <= rel_tol * std::abs(cur[level])) {
      return cur[level];
    }
    prev = std::move(cur);
  }
  return prev.back();
}

inline constexpr double kKernelTolerance = 1e-8;

inline double k_kernel(double s, const Point& x, const WeightParams& p, const DomainSpec& d) {
  if (!(s > 0.0)) throw Error(ErrorKind::invalid_argument, "k_kernel", "s must be positive");
  Point r{x[0] - d.x0[0], x[1] - d.x0[1]};
  const double prefactor = std::exp(p.lambda * (norm2(r, d.dimension) + p.beta0));
  auto integrand = [&](double t) {
    return std::exp(2.0 * s * prefactor * std::expm1(-p.lambda * p.beta * t * t));
  };
  return romberg(integrand, 0.0, d.T, kKernelTolerance);
}

struct KMax {
  double value = 0.0;
  Point argmax{0.0, 0.0};
  /// k is non-increasing in |x - x0| over the grid nodes.
  bool monotone_in_distance = true;
};

inline KMax k_max(double s, const Grid& g, const WeightParams& p) {
  const std::size_t n = g.nspace();
  std::vector<double> dist(n);
  std::vector<double> k(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Point x = g.node(i);
    Point r{x[0] - g.domain.x0[0], x[1] - g.domain.x0[1]};
    dist[i] = norm2(r, g.dim());
    k[i] = k_kernel(s, x, p, g.domain);
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return dist[a] < dist[b]; });
  KMax out;
  out.value = k[order.front()];
  out.argmax = g.node(order.front());
  for (std::size_t i = 1; i < n; ++i) {
    if (k[order[i]] > k[order[i - 1]] * (1.0 + 1e-10)) out.monotone_in_distance = false;
    if (k[order[i]] > out.value) {
      out.value = k[order[i]];
      out.argmax = g.node(order[i]);
    }
  }
  return out;
}

struct AbsorptionReport {
  double lhs = 0.0;   ///< int int e^{2 s phi(x,t)} |dq|^2 (normalized weights)
  double base = 0.0;  ///< int e^{2 s phi(x,0)} |dq|^2 (same normalization)
  double k_max = 0.0;
  double bound = 0.0; ///< k_max * base
  bool holds = true;
};

/// Relative slack allowed between the grid trapezoid in time and the adaptive kernel.
inline constexpr double kAbsorptionSlack = 1e-3;

inline AbsorptionReport absorption_check(const SpatialField& dq, const WeightParams& p, const Grid& g) {
  const Field w = weight_field(g, p, true);
  Field dens(g);
  for (std::size_t k = 0; k < g.nt; ++k) {
    for (std::size_t i = 0; i < g.nspace(); ++i) dens(i, k) = w(i, k) * dq[i] * dq[i];
  }
  AbsorptionReport r;
  r.lhs = integrate_spacetime(dens);
  r.base = integrate_space_at(dens, 0);
  r.k_max = k_max(p.s, g, p).value;
  r.bound = r.k_max * r.base;
  r.holds = r.lhs <= r.bound * (1.0 + kAbsorptionSlack);
  return r;
}

/// Smallest s in `s_values` (ascending) with k_max(s) * M < s^{1/2} / 2.
inline std::optional<double> absorption_threshold(const std::vector<double>& s_values, double m_const, const Grid& g,
                                                  const WeightParams& p) {
  std::vector<double> sorted = s_values;
  std::sort(sorted.begin(), sorted.end());
  for (double s : sorted) {
    if (k_max(s, g, p).value * m_const < 0.5 * std::sqrt(s)) return s;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Twin experiments

struct TwinConfig {
  Grid grid;
  WeightParams params;
  SpatialField u0;
  SpatialField u1;
  SpatialField q1;
  SpatialField q2;
  /// Lateral Dirichlet data shared by both solves. Empty: u0 held constant in time.
  std::optional<Field> dirichlet;
  double m0 = 0.0;
  double big_m0 = std::numeric_limits<double>::infinity();
  double m = std::numeric_limits<double>::infinity();
  std::vector<double> k_s_values;
  bool solve_v_directly = true;
  unsigned jobs = 1;
};

/// Holds u0's boundary values constant in time.
inline Field hold_initial_on_boundary(const Grid& g, const SpatialField& u0) {
  Field f(g);
  for (std::size_t k = 0; k < g.nt; ++k) {
    for (std::size_t i = 0; i < g.nspace(); ++i) {
      if (g.is_boundary(i)) f(i, k) = u0[i];
    }
  }
  return f;
}

struct StabilityReport {
  double dq_norm = 0.0;               ///< ||q1 - q2||_{L2(Omega)}
  double trace_norm = 0.0;            ///< ||d_nu d_t (u_q1 - u_q2)||_{L2(Gamma0 x (0,T))}
  double trace_norm_weighted = 0.0;   ///< same with e^{2 s (phi - phi*)} inside
  double log_offset = 0.0;            ///< phi* of the weighted trace
  /// dq_norm / trace_norm: a witness (lower bound) for the stability constant.
  std::optional<double> c_emp;
  std::optional<double> c_emp_weighted;
  double residual_z = 0.0;            ///< max interior residual of the z system
  double residual_v = 0.0;            ///< same for the v system on d_t z, levels 2..nt-3 (centered stencils only)
  double dt_z0 = 0.0;                 ///< max |d_t z(., 0)|
  double initial_velocity_gap = 0.0;  ///< max |d_t^2 z(., 0) - (q2 - q1) u0|
  std::optional<double> v_direct_gap; ///< relative L2 gap between d_t z and the direct v solve
  SupNormReport hypotheses;           ///< proxies on u_q2
  bool m0_ok = false;
  bool big_m0_ok = false;
  std::vector<std::pair<double, double>> k_table;  ///< (s, k_max(s))
};

inline double l2_spacetime(const Field& f) { return std::sqrt(integrate_spacetime(f * f)); }

inline StabilityReport run_twin(const TwinConfig& cfg) {
  const Grid& g = cfg.grid;
  const ValidationReport vr = validate(cfg.params, g.domain);
  for (const auto& c : vr.checks) {
    if (!c.passed) throw Error(ErrorKind::precondition, "stability.run_twin", c.name + ": " + c.detail);
  }
  for (const SpatialField* f : {&cfg.u0, &cfg.u1, &cfg.q1, &cfg.q2}) {
    if (f->size() != g.nspace()) {
      throw Error(ErrorKind::invalid_argument, "stability.run_twin", "spatial field size does not match the grid");
    }
  }
  double min_u0 = std::numeric_limits<double>::infinity();
  for (double v : cfg.u0) min_u0 = std::min(min_u0, std::abs(v));
  if (!(cfg.m0 > 0.0) || min_u0 < cfg.m0) {
    throw Error(ErrorKind::precondition, "stability.run_twin",
                "|u0| >= m0 > 0 fails (min |u0| = " + std::to_string(min_u0) + ")");
  }

  StabilityReport rep;
  const Field bc = cfg.dirichlet ? *cfg.dirichlet : hold_initial_on_boundary(g, cfg.u0);
  auto forward = [&](const SpatialField& q) {
    IBVPData d;
    d.q = q;
    d.m = cfg.m;
    d.u0 = cfg.u0;
    d.u1 = cfg.u1;
    d.dirichlet = bc;
    return solve(d, g).u;
  };
  const auto solutions = parallel_map(2, cfg.jobs, [&](std::size_t i) { return forward(i == 0 ? cfg.q1 : cfg.q2); });
  const Field& u1 = solutions[0];
  const Field& u2 = solutions[1];

  SpatialField dq(g.nspace());
  for (std::size_t i = 0; i < dq.size(); ++i) dq[i] = cfg.q2[i] - cfg.q1[i];

  const Field z = u1 - u2;
  const Field v = dt(z);

  Field source(g);
  for (std::size_t k = 0; k < g.nt; ++k) {
    for (std::size_t i = 0; i < g.nspace(); ++i) source(i, k) = dq[i] * u2(i, k);
  }
  rep.residual_z = residual(z, cfg.q1, &source).max_abs();

  const Field u2t = dt(u2);
  Field source_v(g);
  for (std::size_t k = 0; k < g.nt; ++k) {
    for (std::size_t i = 0; i < g.nspace(); ++i) source_v(i, k) = dq[i] * u2t(i, k);
  }
  const Field res_v = residual(v, cfg.q1, &source_v);
  for (std::size_t k = 2; k + 2 < g.nt; ++k) {
    for (std::size_t i = 0; i < g.nspace(); ++i) rep.residual_v = std::max(rep.residual_v, std::abs(res_v(i, k)));
  }

  const Field ztt = dtt(z);
  for (std::size_t i = 0; i < g.nspace(); ++i) {
    rep.dt_z0 = std::max(rep.dt_z0, std::abs(v(i, 0)));
    if (!g.is_boundary(i)) {
      rep.initial_velocity_gap = std::max(rep.initial_velocity_gap, std::abs(ztt(i, 0) - dq[i] * cfg.u0[i]));
    }
  }

  std::vector<double> dq2(dq.size());
  for (std::size_t i = 0; i < dq.size(); ++i) dq2[i] = dq[i] * dq[i];
  rep.dq_norm = std::sqrt(integrate_space(g, dq2));

  const BoundaryPartition part = gamma0(g);
  const BoundaryTrace tr = normal_derivative(v, part);
  rep.trace_norm = std::sqrt(integrate_boundary_time_with(
      tr, g.tau, BoundaryMask::gamma0, [](double val, std::size_t, std::size_t) { return val * val; }));
  const Field w = weight_field(g, cfg.params, true);
  rep.log_offset = w.log_offset();
  rep.trace_norm_weighted = std::sqrt(integrate_boundary_time_with(
      tr, g.tau, BoundaryMask::gamma0,
      [&](double val, std::size_t b, std::size_t k) { return w(part.nodes[b].index, k) * val * val; }));
  if (rep.trace_norm > 0.0) rep.c_emp = rep.dq_norm / rep.trace_norm;
  if (rep.trace_norm_weighted > 0.0) rep.c_emp_weighted = rep.dq_norm / rep.trace_norm_weighted;

  if (cfg.solve_v_directly) {
    IBVPData d;
    d.q = cfg.q1;
    d.m = cfg.m;
    d.u0 = SpatialField(g.nspace(), 0.0);
    d.u1 = SpatialField(g.nspace(), 0.0);
    for (std::size_t i = 0; i < g.nspace(); ++i) {
      if (!g.is_boundary(i)) d.u1[i] = dq[i] * cfg.u0[i];
    }
    d.source = source_v;
    const Field v_direct = solve(d, g).u;
    const double denom = l2_spacetime(v_direct);
    rep.v_direct_gap = denom > 0.0 ? l2_spacetime(v - v_direct) / denom : l2_spacetime(v - v_direct);
  }

  rep.hypotheses = sup_norm_checks(u2);
  rep.m0_ok = rep.hypotheses.m0_holds(cfg.m0);
  rep.big_m0_ok = rep.hypotheses.big_m0_holds(cfg.big_m0);

  for (double s : cfg.k_s_values) rep.k_table.emplace_back(s, k_max(s, g, cfg.params).value);
  return rep;
}

struct ScalingRow {
  double epsilon = 0.0;
  double dq_norm = 0.0;
  double trace_norm = 0.0;
  std::optional<double> c_emp;
  std::optional<double> c_emp_weighted;
};

struct ScalingTable {
  std::vector<ScalingRow> rows;  ///< ascending epsilon
  /// max / min of c_emp over rows where it is defined (1 when fewer than two).
  double spread = 1.0;
};

/// Runs twin experiments with q2 = q1 + epsilon * shape.
inline ScalingTable scaling_study(const TwinConfig& base, std::vector<double> epsilons, const SpatialField& shape) {
  std::sort(epsilons.begin(), epsilons.end());
  for (double e : epsilons) {
    for (std::size_t i = 0; i < shape.size(); ++i) {
      if (std::abs(base.q1[i] + e * shape[i]) > base.m) {
        throw Error(ErrorKind::precondition, "stability.scaling_study", "q2 leaves the admissible set for epsilon=" +
                                                                            std::to_string(e));
      }
    }
  }
  ScalingTable table;
  table.rows = parallel_map(epsilons.size(), base.jobs, [&](std::size_t n) {
    TwinConfig cfg = base;
    cfg.jobs = 1;
    cfg.solve_v_directly = false;
    cfg.k_s_values.clear();
    for (std::size_t i = 0; i < shape.size(); ++i) cfg.q2[i] = base.q1[i] + epsilons[n] * shape[i];
    const StabilityReport r = run_twin(cfg);
    return ScalingRow{epsilons[n], r.dq_norm, r.trace_norm, r.c_emp, r.c_emp_weighted};
  });
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (const auto& r : table.rows) {
    if (!r.c_emp) continue;
    lo = std::min(lo, *r.c_emp);
    hi = std::max(hi, *r.c_emp);
  }
  if (hi > 0.0 && std::isfinite(lo)) table.spread = hi / lo;
  return table;
}

}  // namespace carleman_lab

#endif  // CARLEMAN_LAB_STABILITY_HPP
