#ifndef CARLEMAN_LAB_WEIGHTS_HPP
#define CARLEMAN_LAB_WEIGHTS_HPP

#include <cmath>
#include <limits>

#include "carleman_lab/geometry.hpp"
#include "carleman_lab/grid.hpp"

namespace carleman_lab {

/// Observation subboundary: the minimal admissible set {(x - x0) . nu >= 0}.
inline BoundaryPartition gamma0(const Grid& g) { return boundary_partition(g); }

/// psi, phi and every derivative the conjugated operator and its cross terms need,
/// in closed form at one point (x, t). psi is quadratic, so d_ij psi = 2 delta_ij.
struct WeightJet {
  int n = 1;
  Point r{0.0, 0.0};  ///< x - x0
  double rho2 = 0.0;  ///< |x - x0|^2
  double psi = 0.0;
  double psi_t = 0.0;
  double psi_tt = 0.0;
  Point grad_psi{0.0, 0.0};
  double lap_psi = 0.0;
  double grad_psi2 = 0.0;  ///< |grad psi|^2

  double phi = 0.0;
  double phi_t = 0.0;
  double phi_tt = 0.0;
  Point grad_phi{0.0, 0.0};
  double lap_phi = 0.0;

  /// G = |d_t psi|^2 - |grad psi|^2 and its derivatives.
  double G = 0.0;
  double G_t = 0.0;
  double G_tt = 0.0;
  Point grad_G{0.0, 0.0};
  double lap_G = 0.0;

  /// d_t^2 psi - Laplacian psi (constant for box weights).
  double A = 0.0;
};

inline WeightJet weight_jet(const Point& x, double t, const WeightParams& p, const DomainSpec& d) {
  WeightJet j;
  const int n = d.dimension;
  const double lam = p.lambda;
  j.n = n;
  j.r = {x[0] - d.x0[0], n == 2 ? x[1] - d.x0[1] : 0.0};
  j.rho2 = norm2(j.r, n);
  j.psi = j.rho2 - p.beta * t * t + p.beta0;
  j.psi_t = -2.0 * p.beta * t;
  j.psi_tt = -2.0 * p.beta;
  j.grad_psi = {2.0 * j.r[0], 2.0 * j.r[1]};
  j.lap_psi = 2.0 * n;
  j.grad_psi2 = 4.0 * j.rho2;

  j.phi = std::exp(lam * j.psi);
  j.phi_t = lam * j.psi_t * j.phi;
  j.phi_tt = lam * (j.psi_tt + lam * j.psi_t * j.psi_t) * j.phi;
  j.grad_phi = {lam * j.phi * j.grad_psi[0], lam * j.phi * j.grad_psi[1]};
  j.lap_phi = lam * j.phi * (j.lap_psi + lam * j.grad_psi2);

  j.G = j.psi_t * j.psi_t - j.grad_psi2;
  j.G_t = 2.0 * j.psi_t * j.psi_tt;
  j.G_tt = 2.0 * j.psi_tt * j.psi_tt;
  j.grad_G = {-8.0 * j.r[0], -8.0 * j.r[1]};
  j.lap_G = -8.0 * n;

  j.A = j.psi_tt - j.lap_psi;
  return j;
}

/// phi sampled on every grid node.
inline Field phi_field(const Grid& g, const WeightParams& p) {
  return Field::sample(g, [&](const Point& x, double t) { return phi(x, t, p, g.domain); });
}

inline Field psi_field(const Grid& g, const WeightParams& p) {
  return Field::sample(g, [&](const Point& x, double t) { return psi(x, t, p, g.domain); });
}

/// e^{2 s (phi - phi*)} on the grid. phi* = max phi when `normalize`, else 0.
/// The chosen phi* is stored as the field's log offset. Unnormalized overflow throws.
inline Field weight_field(const Grid& g, const WeightParams& p, bool normalize) {
  Field ph = phi_field(g, p);
  double offset = 0.0;
  if (normalize) {
    offset = -std::numeric_limits<double>::infinity();
    for (double v : ph.values()) offset = std::max(offset, v);
  }
  Field w(g);
  auto& out = w.values();
  const auto& in = ph.values();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double expo = 2.0 * p.s * (in[i] - offset);
    if (expo > std::log(std::numeric_limits<double>::max())) {
      throw Error(ErrorKind::overflow, "weight_field",
                  "e^{2 s phi} overflows at s=" + std::to_string(p.s) + "; use the normalized form");
    }
    out[i] = std::exp(expo);
  }
  w.set_log_offset(offset);
  return w;
}

}  // namespace carleman_lab

#endif  // CARLEMAN_LAB_WEIGHTS_HPP
