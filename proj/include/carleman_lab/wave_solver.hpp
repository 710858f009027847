#ifndef CARLEMAN_LAB_WAVE_SOLVER_HPP
#define CARLEMAN_LAB_WAVE_SOLVER_HPP

#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "carleman_lab/error.hpp"
#include "carleman_lab/grid.hpp"

namespace carleman_lab {

/// Data of  d_t^2 u - Laplacian u + q u = f,  u(0) = u0, d_t u(0) = u1,  u = dirichlet on the boundary.
struct IBVPData {
  SpatialField q;
  /// Declared bound m on |q|.
  double m = std::numeric_limits<double>::infinity();
  SpatialField u0;
  SpatialField u1;
  /// Only boundary-node values are read. Empty means homogeneous data.
  std::optional<Field> dirichlet;
  std::optional<Field> source;
};

struct SolveDiagnostics {
  double max_interior_residual = 0.0;
  std::vector<double> energy;
  double cfl = 0.0;
};

struct SolveResult {
  Field u;
  SolveDiagnostics diagnostics;
};

namespace detail {

/// Standard 3-point / 5-point Laplacian at interior nodes; boundary entries are left at 0.
inline void interior_laplacian(const Grid& g, std::span<const double> u, std::vector<double>& out) {
  out.assign(g.nspace(), 0.0);
  const double cx = 1.0 / (g.hx * g.hx);
  if (g.dim() == 1) {
    for (std::size_t i = 1; i + 1 < g.nx; ++i) out[i] = cx * (u[i - 1] - 2.0 * u[i] + u[i + 1]);
    return;
  }
  const double cy = 1.0 / (g.hy * g.hy);
  for (std::size_t j = 1; j + 1 < g.ny; ++j) {
    for (std::size_t i = 1; i + 1 < g.nx; ++i) {
      const std::size_t c = g.index(i, j);
      out[c] = cx * (u[c - 1] - 2.0 * u[c] + u[c + 1]) + cy * (u[c - g.nx] - 2.0 * u[c] + u[c + g.nx]);
    }
  }
}

inline void check_spatial_size(const Grid& g, const SpatialField& f, const char* name) {
  if (f.size() != g.nspace()) {
    throw Error(ErrorKind::invalid_argument, std::string("ibvp.") + name, "size does not match the grid");
  }
}

}  // namespace detail

/// Checks sizes, the bound |q| <= m and discrete compatibility of the boundary data with u0.
inline void validate_ibvp(const IBVPData& data, const Grid& g) {
  detail::check_spatial_size(g, data.q, "q");
  detail::check_spatial_size(g, data.u0, "u0");
  detail::check_spatial_size(g, data.u1, "u1");
  for (double v : data.q) {
    if (std::abs(v) > data.m) {
      throw Error(ErrorKind::precondition, "ibvp.q", "potential exceeds the declared bound m");
    }
  }
  if (data.source && !(data.source->grid() == g)) {
    throw Error(ErrorKind::invalid_argument, "ibvp.source", "grid mismatch");
  }
  double scale = 1.0;
  for (double v : data.u0) scale = std::max(scale, std::abs(v));
  for (std::size_t i = 0; i < g.nspace(); ++i) {
    if (!g.is_boundary(i)) continue;
    const double bc = data.dirichlet ? (*data.dirichlet)(i, 0) : 0.0;
    if (std::abs(bc - data.u0[i]) > 1e-12 * scale) {
      throw Error(ErrorKind::precondition, "ibvp.dirichlet", "boundary data at t=0 does not match u0");
    }
  }
  if (data.dirichlet && !(data.dirichlet->grid() == g)) {
    throw Error(ErrorKind::invalid_argument, "ibvp.dirichlet", "grid mismatch");
  }
}

/// d_t^2 u - Laplacian u + q u - f on interior spatial nodes (all time levels), 0 on the boundary.
inline Field residual(const Field& u, const SpatialField& q, const Field* f) {
  const Grid& g = u.grid();
  Field r = dtt(u) - laplacian(u);
  for (std::size_t k = 0; k < g.nt; ++k) {
    for (std::size_t i = 0; i < g.nspace(); ++i) {
      if (g.is_boundary(i)) {
        r(i, k) = 0.0;
        continue;
      }
      r(i, k) += q[i] * u(i, k) - (f ? (*f)(i, k) : 0.0);
    }
  }
  return r;
}

/// E(t) = 1/2 int (|d_t u|^2 + |grad u|^2 + q |u|^2) dx at every level.
inline std::vector<double> energy(const Field& u, const SpatialField& q) {
  const Grid& g = u.grid();
  const Field ut = dt(u);
  const auto gu = grad(u);
  std::vector<double> e(g.nt);
  std::vector<double> dens(g.nspace());
  for (std::size_t k = 0; k < g.nt; ++k) {
    for (std::size_t i = 0; i < g.nspace(); ++i) {
      double d = ut(i, k) * ut(i, k) + q[i] * u(i, k) * u(i, k);
      for (const auto& c : gu) d += c(i, k) * c(i, k);
      dens[i] = 0.5 * d;
    }
    e[k] = integrate_space(g, dens);
  }
  return e;
}

/// Explicit leapfrog with Dirichlet injection and a Taylor first step.
inline SolveResult solve(const IBVPData& data, const Grid& g) {
  if (g.cfl() > cfl_bound(g.dim()) * (1.0 + 1e-12)) {
    throw Error(ErrorKind::precondition, "wave_solver.solve", "CFL condition violated");
  }
  validate_ibvp(data, g);

  SolveResult res;
  Field& u = res.u;
  u = Field(g);
  const double tau2 = g.tau * g.tau;
  const std::size_t ns = g.nspace();
  auto src = [&](std::size_t i, std::size_t k) { return data.source ? (*data.source)(i, k) : 0.0; };
  auto bc = [&](std::size_t i, std::size_t k) { return data.dirichlet ? (*data.dirichlet)(i, k) : 0.0; };

  std::vector<double> lap;
  auto level_finite = [&](std::size_t k) {
    for (double v : u.level(k)) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  };

  std::copy(data.u0.begin(), data.u0.end(), u.level(0).begin());

  detail::interior_laplacian(g, u.level(0), lap);
  for (std::size_t i = 0; i < ns; ++i) {
    if (g.is_boundary(i)) {
      u(i, 1) = bc(i, 1);
    } else {
      u(i, 1) = u(i, 0) + g.tau * data.u1[i] + 0.5 * tau2 * (lap[i] - data.q[i] * u(i, 0) + src(i, 0));
    }
  }
  if (!level_finite(1)) throw InstabilityError(1, "non-finite value at time level 1");

  for (std::size_t k = 1; k + 1 < g.nt; ++k) {
    detail::interior_laplacian(g, u.level(k), lap);
    for (std::size_t i = 0; i < ns; ++i) {
      if (g.is_boundary(i)) {
        u(i, k + 1) = bc(i, k + 1);
      } else {
        u(i, k + 1) = 2.0 * u(i, k) - u(i, k - 1) + tau2 * (lap[i] - data.q[i] * u(i, k) + src(i, k));
      }
    }
    if (!level_finite(k + 1)) {
      throw InstabilityError(k + 1, "non-finite value at time level " + std::to_string(k + 1));
    }
  }

  const Field r = residual(u, data.q, data.source ? &*data.source : nullptr);
  res.diagnostics.max_interior_residual = r.max_abs();
  res.diagnostics.energy = energy(u, data.q);
  res.diagnostics.cfl = g.cfl();
  return res;
}

/// Discrete proxies for the a-priori hypotheses on a solution.
struct SupNormReport {
  double linf_l2 = 0.0;       ///< (int_0^T max_x |u|^2 dt)^{1/2}
  double dt_linf_l2 = 0.0;    ///< same for d_t u
  double h1_linf_proxy = 0.0; ///< sqrt of the sum of squares of the two above
  double min_abs_u0 = 0.0;    ///< min_x |u(x, 0)|

  bool m0_holds(double m0) const { return m0 > 0.0 && min_abs_u0 >= m0; }
  bool big_m0_holds(double bound) const { return h1_linf_proxy <= bound; }
};

inline SupNormReport sup_norm_checks(const Field& u) {
  const Grid& g = u.grid();
  const Field ut = dt(u);
  const auto wt = time_weights(g);
  SupNormReport rep;
  double a = 0.0;
  double b = 0.0;
  for (std::size_t k = 0; k < g.nt; ++k) {
    double mu = 0.0;
    double mut = 0.0;
    for (std::size_t i = 0; i < g.nspace(); ++i) {
      mu = std::max(mu, std::abs(u(i, k)));
      mut = std::max(mut, std::abs(ut(i, k)));
    }
    a += wt[k] * mu * mu;
    b += wt[k] * mut * mut;
  }
  rep.linf_l2 = std::sqrt(a);
  rep.dt_linf_l2 = std::sqrt(b);
  rep.h1_linf_proxy = std::sqrt(a + b);
  rep.min_abs_u0 = std::numeric_limits<double>::infinity();
  for (double v : u.level(0)) rep.min_abs_u0 = std::min(rep.min_abs_u0, std::abs(v));
  return rep;
}

}  // namespace carleman_lab

#endif  // CARLEMAN_LAB_WAVE_SOLVER_HPP
