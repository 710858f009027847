#ifndef CARLEMAN_LAB_CONJUGATION_HPP
#define CARLEMAN_LAB_CONJUGATION_HPP

#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "carleman_lab/error.hpp"
#include "carleman_lab/grid.hpp"
#include "carleman_lab/weights.hpp"

namespace carleman_lab {

// ---------------------------------------------------------------------------
// Conjugation w = e^{s phi} v and the conjugated operator
//
//   P w = e^{s phi} (d_t^2 - Laplacian)(e^{-s phi} w)
//       = w_tt - Lap w - 2 s lam phi (w_t psi_t - grad w . grad psi)
//         + s^2 lam^2 phi^2 G w - s lam phi A w - s lam^2 phi G w,
//
// with G = psi_t^2 - |grad psi|^2 and A = psi_tt - Lap psi. It is split as
//
//   P1 = w_tt - Lap w + s^2 lam^2 phi^2 G w
//   P2 = (alpha - 1) s lam phi A w - s lam^2 phi G w
//        - 2 s lam phi (w_t psi_t - grad w . grad psi) - s^gamma w_t
//   R1 = -alpha s lam phi A w
//   R2 = +s^gamma w_t
//
// so that P = P1 + P2 + R1 + R2 holds pointwise and P - R1 - R2 = P1 + P2.

/// w = e^{s (phi - phi*)} v with phi* = max phi over the grid, recorded as the log offset.
inline Field conjugate(const Field& v, const WeightParams& p) {
  const Grid& g = v.grid();
  Field ph = phi_field(g, p);
  double offset = -std::numeric_limits<double>::infinity();
  for (double x : ph.values()) offset = std::max(offset, x);
  Field w(g);
  for (std::size_t i = 0; i < w.values().size(); ++i) {
    w.values()[i] = std::exp(p.s * (ph.values()[i] - offset)) * v.values()[i];
  }
  w.set_log_offset(offset);
  return w;
}

/// First and second derivatives of w used by every operator below.
struct WDerivatives {
  Field w;
  Field wt;
  Field wtt;
  Field lap;
  std::vector<Field> gw;

  explicit WDerivatives(const Field& f) : w(f), wt(dt(f)), wtt(dtt(f)), lap(laplacian(f)), gw(grad(f)) {}

  double grad_dot(const Point& v, std::size_t i, std::size_t k) const {
    double acc = 0.0;
    for (std::size_t a = 0; a < gw.size(); ++a) acc += gw[a](i, k) * v[a];
    return acc;
  }
};

/// e^{s phi} (d_t^2 - Laplacian)(e^{-s phi} w), evaluated stencil by stencil as
/// sum_j c_j e^{s (phi_node - phi_j)} w_j so no global exponential is ever formed.
inline Field apply_P_direct(const Field& w, const WeightParams& p) {
  const Grid& g = w.grid();
  const Field ph = phi_field(g, p);
  Field out(g);
  out.set_log_offset(w.log_offset());
  const double limit = std::log(std::numeric_limits<double>::max());
  auto accumulate = [&](std::size_t flat, int axis, std::size_t pos, double sign) {
    const Stencil st = second_difference(pos, g.extent(axis), g.step(axis));
    const long stride = static_cast<long>(g.stride(axis));
    double acc = 0.0;
    for (int j = 0; j < st.size; ++j) {
      const auto nb = static_cast<std::size_t>(static_cast<long>(flat) + st.offset[j] * stride);
      const double expo = p.s * (ph.values()[flat] - ph.values()[nb]);
      if (expo > limit) {
        throw Error(ErrorKind::overflow, "apply_P_direct", "local weight ratio overflows");
      }
      acc += st.weight[j] * std::exp(expo) * w.values()[nb];
    }
    return sign * acc;
  };
  for (std::size_t k = 0; k < g.nt; ++k) {
    for (std::size_t i = 0; i < g.nspace(); ++i) {
      const std::size_t flat = k * g.nspace() + i;
      double v = accumulate(flat, kTimeAxis, k, 1.0);
      v += accumulate(flat, 0, g.ix(i), -1.0);
      if (g.dim() == 2) v += accumulate(flat, 1, g.iy(i), -1.0);
      out.values()[flat] = v;
    }
  }
  return out;
}

struct DecompositionTerms {
  Field P_direct;
  Field P_expanded;
  Field P1;
  Field P2;
  Field R1;
  Field R2;
};

namespace detail {

template <class F>
Field map_nodes(const WDerivatives& d, const WeightParams& p, F&& f) {
  const Grid& g = d.w.grid();
  Field out(g);
  out.set_log_offset(d.w.log_offset());
  for (std::size_t k = 0; k < g.nt; ++k) {
    const double t = g.time(k);
    for (std::size_t i = 0; i < g.nspace(); ++i) {
      out(i, k) = f(weight_jet(g.node(i), t, p, g.domain), i, k);
    }
  }
  return out;
}

}  // namespace detail

inline Field apply_P_expanded(const WDerivatives& d, const WeightParams& p) {
  const double s = p.s;
  const double lam = p.lambda;
  return detail::map_nodes(d, p, [&](const WeightJet& j, std::size_t i, std::size_t k) {
    const double w = d.w(i, k);
    const double first = d.wt(i, k) * j.psi_t - d.grad_dot(j.grad_psi, i, k);
    return d.wtt(i, k) - d.lap(i, k) - 2.0 * s * lam * j.phi * first + s * s * lam * lam * j.phi * j.phi * j.G * w -
           s * lam * j.phi * j.A * w - s * lam * lam * j.phi * j.G * w;
  });
}

inline Field p1(const WDerivatives& d, const WeightParams& p) {
  const double sl = p.s * p.lambda;
  return detail::map_nodes(d, p, [&](const WeightJet& j, std::size_t i, std::size_t k) {
    return d.wtt(i, k) - d.lap(i, k) + sl * sl * j.phi * j.phi * j.G * d.w(i, k);
  });
}

inline Field p2(const WDerivatives& d, const WeightParams& p) {
  const double s = p.s;
  const double lam = p.lambda;
  const double sg = std::pow(s, p.gamma);
  return detail::map_nodes(d, p, [&](const WeightJet& j, std::size_t i, std::size_t k) {
    const double w = d.w(i, k);
    const double first = d.wt(i, k) * j.psi_t - d.grad_dot(j.grad_psi, i, k);
    return (p.alpha - 1.0) * s * lam * j.phi * j.A * w - s * lam * lam * j.phi * j.G * w -
           2.0 * s * lam * j.phi * first - sg * d.wt(i, k);
  });
}

inline Field r1(const WDerivatives& d, const WeightParams& p) {
  return detail::map_nodes(d, p, [&](const WeightJet& j, std::size_t i, std::size_t k) {
    return -p.alpha * p.s * p.lambda * j.phi * j.A * d.w(i, k);
  });
}

inline Field r2(const WDerivatives& d, const WeightParams& p) {
  const double sg = std::pow(p.s, p.gamma);
  return sg * d.wt;
}

inline Field apply_P_expanded(const Field& w, const WeightParams& p) { return apply_P_expanded(WDerivatives(w), p); }
inline Field p1(const Field& w, const WeightParams& p) { return p1(WDerivatives(w), p); }
inline Field p2(const Field& w, const WeightParams& p) { return p2(WDerivatives(w), p); }
inline Field r1(const Field& w, const WeightParams& p) { return r1(WDerivatives(w), p); }
inline Field r2(const Field& w, const WeightParams& p) { return r2(WDerivatives(w), p); }

inline DecompositionTerms decompose(const Field& w, const WeightParams& p) {
  const WDerivatives d(w);
  return {apply_P_direct(w, p), apply_P_expanded(d, p), p1(d, p), p2(d, p), r1(d, p), r2(d, p)};
}

/// max |P_expanded - (P1 + P2 + R1 + R2)| over interior nodes, relative to the
/// largest magnitude among the five fields. Zero for w = 0.
inline double check_decomposition(const Field& w, const WeightParams& p) {
  const DecompositionTerms t = decompose(w, p);
  const Grid& g = w.grid();
  double diff = 0.0;
  double scale = 0.0;
  for (std::size_t k = 1; k + 1 < g.nt; ++k) {
    for (std::size_t i = 0; i < g.nspace(); ++i) {
      if (g.is_boundary(i)) continue;
      const double sum = t.P1(i, k) + t.P2(i, k) + t.R1(i, k) + t.R2(i, k);
      diff = std::max(diff, std::abs(t.P_expanded(i, k) - sum));
      for (const Field* f : {&t.P_expanded, &t.P1, &t.P2, &t.R1, &t.R2}) scale = std::max(scale, std::abs((*f)(i, k)));
    }
  }
  return scale > 0.0 ? diff / scale : 0.0;
}

/// | int(|P1|^2 + |P2|^2) + 2 int P1 P2 - int |P - R1 - R2|^2 |, relative to
/// int |P1|^2 + int |P2|^2 + int |P - R1 - R2|^2. Zero for w = 0.
inline double sos_identity(const Field& w, const WeightParams& p) {
  const WDerivatives d(w);
  const Field a = p1(d, p);
  const Field b = p2(d, p);
  const Field rest = apply_P_expanded(d, p) - r1(d, p) - r2(d, p);
  const double aa = integrate_spacetime(a * a);
  const double bb = integrate_spacetime(b * b);
  const double rhs = integrate_spacetime(rest * rest);
  const double lhs = aa + bb + 2.0 * integrate_spacetime(a * b);
  const double scale = aa + bb + rhs;
  return scale > 0.0 ? std::abs(lhs - rhs) / scale : 0.0;
}

// ---------------------------------------------------------------------------
// Cross terms  int_0^T int_Omega P1 w P2 w = I_1 + ... + I_10
//
// P1 = A1 + A2 + A3 with A1 = w_tt, A2 = -Lap w, A3 = s^2 lam^2 phi^2 G w.
// P2 = B1 + B2 + B3 + B4 with B1 = (alpha-1) s lam phi A w, B2 = -s lam^2 phi G w,
//      B3 = -2 s lam phi (w_t psi_t - grad w . grad psi), B4 = -s^gamma w_t.
// I_k = int A_{(k-1)/3+1} B_{(k-1)%3+1} for k <= 9 and I_10 = int P1 B4.
//
// The integrated-by-parts form of each I_k is
//   int_0^T int_Omega interior + int_Omega flux(T) - int_Omega flux(0) + int_0^T int_dOmega lateral,
// valid for w = 0 on the lateral boundary (so d_t w = 0 and grad w = (d_nu w) nu there).

inline constexpr int kCrossTermCount = 10;

/// Values of w and its first derivatives at one node.
struct Jet1 {
  double w = 0.0;
  double wt = 0.0;
  Point gw{0.0, 0.0};
};

/// Jet1 plus the second derivatives entering the definitional products.
struct Jet2 {
  Jet1 first;
  double wtt = 0.0;
  double lap = 0.0;
};

/// Coefficients of the cross-term expansions at one node, built by product rules
/// from the closed-form weight jet.
struct CrossCoefficients {
  int n = 1;
  double s = 0.0;
  double sigma = 0.0;  // s^gamma
  // a = c phi (c = (alpha-1) s lam A) and a2 = -s lam^2 phi G, with derivatives
  double a1 = 0.0, a1_t = 0.0, a1_tt = 0.0, a1_lap = 0.0;
  double a2 = 0.0, a2_t = 0.0, a2_tt = 0.0, a2_lap = 0.0;
  // B3 = b_t w_t + b . grad w
  double bt = 0.0, bt_t = 0.0;
  Point bt_grad{0.0, 0.0};
  Point b{0.0, 0.0}, b_t{0.0, 0.0};
  double b_div = 0.0;
  // sum_ij d_i b_j xi_i xi_j = db_iso |xi|^2 + db_dir (grad psi . xi)^2
  double db_iso = 0.0, db_dir = 0.0;
  Point grad_psi{0.0, 0.0};
  // e = s^2 lam^2 phi^2 G
  double e = 0.0, e_t = 0.0;
  double ebt = 0.0, ebt_t = 0.0, eb_div = 0.0;
  // A3 B1 and A3 B2 as multiples of w^2
  double i7 = 0.0, i8 = 0.0;
  // factors of the definitional pieces
  double A3 = 0.0, B1 = 0.0, B2 = 0.0;
};

inline CrossCoefficients cross_coefficients(const WeightJet& j, const WeightParams& p) {
  CrossCoefficients c;
  const int n = j.n;
  const double s = p.s;
  const double lam = p.lambda;
  c.n = n;
  c.s = s;
  c.sigma = std::pow(s, p.gamma);
  c.grad_psi = j.grad_psi;

  const double cc = (p.alpha - 1.0) * s * lam * j.A;
  c.a1 = cc * j.phi;
  c.a1_t = cc * j.phi_t;
  c.a1_tt = cc * j.phi_tt;
  c.a1_lap = cc * j.lap_phi;

  const double k2 = -s * lam * lam;
  c.a2 = k2 * j.phi * j.G;
  c.a2_t = k2 * (j.phi_t * j.G + j.phi * j.G_t);
  c.a2_tt = k2 * (j.phi_tt * j.G + 2.0 * j.phi_t * j.G_t + j.phi * j.G_tt);
  c.a2_lap = k2 * (j.lap_phi * j.G + 2.0 * dot(j.grad_phi, j.grad_G, n) + j.phi * j.lap_G);

  const double sl2 = 2.0 * s * lam;
  c.bt = -sl2 * j.phi * j.psi_t;
  c.bt_t = -sl2 * (j.phi_t * j.psi_t + j.phi * j.psi_tt);
  c.bt_grad = {-sl2 * j.psi_t * j.grad_phi[0], -sl2 * j.psi_t * j.grad_phi[1]};
  c.b = {sl2 * j.phi * j.grad_psi[0], sl2 * j.phi * j.grad_psi[1]};
  c.b_t = {sl2 * j.phi_t * j.grad_psi[0], sl2 * j.phi_t * j.grad_psi[1]};
  c.b_div = sl2 * (dot(j.grad_phi, j.grad_psi, n) + j.phi * j.lap_psi);
  // d_i b_j = 2 s lam (lam phi d_i psi d_j psi + phi d_ij psi), d_ij psi = 2 delta_ij
  c.db_iso = sl2 * 2.0 * j.phi;
  c.db_dir = sl2 * lam * j.phi;

  const double sl = s * lam;
  c.e = sl * sl * j.phi * j.phi * j.G;
  c.e_t = sl * sl * (2.0 * j.phi * j.phi_t * j.G + j.phi * j.phi * j.G_t);
  const Point e_grad{sl * sl * (2.0 * j.phi * j.grad_phi[0] * j.G + j.phi * j.phi * j.grad_G[0]),
                     sl * sl * (2.0 * j.phi * j.grad_phi[1] * j.G + j.phi * j.phi * j.grad_G[1])};
  c.ebt = c.e * c.bt;
  c.ebt_t = c.e_t * c.bt + c.e * c.bt_t;
  c.eb_div = dot(e_grad, c.b, n) + c.e * c.b_div;

  const double phi3 = j.phi * j.phi * j.phi;
  c.i7 = (p.alpha - 1.0) * s * s * s * lam * lam * lam * j.A * phi3 * j.G;
  c.i8 = -s * s * s * lam * lam * lam * lam * phi3 * j.G * j.G;

  c.A3 = c.e;
  c.B1 = c.a1;
  c.B2 = c.a2;
  return c;
}

namespace detail {

inline double gw2(const Jet1& j, int n) { return dot(j.gw, j.gw, n); }

}  // namespace detail

/// Pointwise product A_i B_j (or P1 B4 for k = 10) from second-order data.
inline double cross_definition_integrand(int k, const Jet2& j, const CrossCoefficients& c) {
  const Jet1& f = j.first;
  const double a[3] = {j.wtt, -j.lap, c.A3 * f.w};
  const double b3 = c.bt * f.wt + dot(c.b, f.gw, c.n);
  const double b[3] = {c.B1 * f.w, c.B2 * f.w, b3};
  if (k == 10) return (a[0] + a[1] + a[2]) * (-c.sigma * f.wt);
  return a[(k - 1) / 3] * b[(k - 1) % 3];
}

/// Integrand over Omega x (0, T) of the integrated-by-parts form.
inline double cross_interior_integrand(int k, const Jet1& j, const CrossCoefficients& c) {
  const int n = c.n;
  const double w2 = j.w * j.w;
  const double wt2 = j.wt * j.wt;
  const double g2 = detail::gw2(j, n);
  switch (k) {
    case 1: return -c.a1 * wt2 + 0.5 * c.a1_tt * w2;
    case 2: return -c.a2 * wt2 + 0.5 * c.a2_tt * w2;
    case 3: return (-0.5 * c.bt_t + 0.5 * c.b_div) * wt2 - j.wt * dot(c.b_t, j.gw, n);
    case 4: return c.a1 * g2 - 0.5 * c.a1_lap * w2;
    case 5: return c.a2 * g2 - 0.5 * c.a2_lap * w2;
    case 6: {
      const double gp = dot(c.grad_psi, j.gw, n);
      return j.wt * dot(c.bt_grad, j.gw, n) - 0.5 * c.bt_t * g2 + c.db_iso * g2 + c.db_dir * gp * gp -
             0.5 * c.b_div * g2;
    }
    case 7: return c.i7 * w2;
    case 8: return c.i8 * w2;
    case 9: return (-0.5 * c.ebt_t - 0.5 * c.eb_div) * w2;
    case 10: return 0.5 * c.sigma * c.e_t * w2;
    default: break;
  }
  throw Error(ErrorKind::invalid_argument, "cross_term", "k must lie in 1..10");
}

/// Time flux F_k; the expansion contains int F_k(T) - int F_k(0).
inline double cross_time_flux(int k, const Jet1& j, const CrossCoefficients& c) {
  const int n = c.n;
  const double w2 = j.w * j.w;
  const double wt2 = j.wt * j.wt;
  switch (k) {
    case 1: return c.a1 * j.w * j.wt - 0.5 * c.a1_t * w2;
    case 2: return c.a2 * j.w * j.wt - 0.5 * c.a2_t * w2;
    case 3: return 0.5 * c.bt * wt2 + j.wt * dot(c.b, j.gw, n);
    case 6: return 0.5 * c.bt * detail::gw2(j, n);
    case 9: return 0.5 * c.ebt * w2;
    case 10: return -0.5 * c.sigma * (wt2 + detail::gw2(j, n) + c.e * w2);
    default: return 0.0;
  }
}

/// Integrand on the lateral boundary, given d_nu w and the outward normal.
inline double cross_lateral_integrand(int k, double dnu_w, const Point& normal, const CrossCoefficients& c) {
  if (k != 6) return 0.0;
  return -0.5 * dot(c.b, normal, c.n) * dnu_w * dnu_w;
}

struct CrossTermPair {
  int k = 0;  ///< 1..10; 0 marks the total
  double definition_value = 0.0;
  double expanded_value = 0.0;
  double discrepancy = 0.0;
};

inline double relative_discrepancy(double definition, double expanded) {
  return std::abs(definition - expanded) / (1.0 + std::abs(definition));
}

struct CrossTermTable {
  std::array<CrossTermPair, kCrossTermCount> terms;
  CrossTermPair total;            ///< int P1 P2 (from the P1, P2 fields) vs sum of expansions
  double definition_sum = 0.0;    ///< sum of the ten definitional integrals
  double distributivity_gap = 0.0;///< |int P1 P2 - definition_sum| / (1 + |int P1 P2|)
};

/// Tolerance (relative to max |w|) for the hypotheses w(., 0) = 0 and w = 0 on the boundary.
inline constexpr double kHypothesisTolerance = 1e-8;

inline void check_cross_term_hypotheses(const Field& w) {
  const Grid& g = w.grid();
  const double scale = w.max_abs();
  if (scale == 0.0) return;
  for (double v : w.level(0)) {
    if (std::abs(v) > kHypothesisTolerance * scale) {
      throw Error(ErrorKind::precondition, "cross_term", "w(., 0) must vanish");
    }
  }
  for (std::size_t k = 0; k < g.nt; ++k) {
    for (std::size_t i = 0; i < g.nspace(); ++i) {
      if (g.is_boundary(i) && std::abs(w(i, k)) > kHypothesisTolerance * scale) {
        throw Error(ErrorKind::precondition, "cross_term", "w must vanish on the lateral boundary");
      }
    }
  }
}

/// All ten cross terms in definitional and integrated-by-parts form on the grid.
inline CrossTermTable cross_terms(const Field& w, const WeightParams& p) {
  check_cross_term_hypotheses(w);
  const Grid& g = w.grid();
  const int n = g.dim();
  const WDerivatives d(w);
  const auto ws = space_weights(g);
  const auto wt = time_weights(g);

  std::array<double, kCrossTermCount> def{};
  std::array<double, kCrossTermCount> exp{};
  double p1p2 = 0.0;

  const Field P1 = p1(d, p);
  const Field P2 = p2(d, p);

  for (std::size_t k = 0; k < g.nt; ++k) {
    const double t = g.time(k);
    const double flux_sign = k == 0 ? -1.0 : (k + 1 == g.nt ? 1.0 : 0.0);
    for (std::size_t i = 0; i < g.nspace(); ++i) {
      const CrossCoefficients c = cross_coefficients(weight_jet(g.node(i), t, p, g.domain), p);
      Jet2 j;
      j.first.w = d.w(i, k);
      j.first.wt = d.wt(i, k);
      for (int a = 0; a < n; ++a) j.first.gw[a] = d.gw[a](i, k);
      j.wtt = d.wtt(i, k);
      j.lap = d.lap(i, k);
      const double q = wt[k] * ws[i];
      for (int m = 1; m <= kCrossTermCount; ++m) {
        def[m - 1] += q * cross_definition_integrand(m, j, c);
        exp[m - 1] += q * cross_interior_integrand(m, j.first, c);
        if (flux_sign != 0.0) exp[m - 1] += flux_sign * ws[i] * cross_time_flux(m, j.first, c);
      }
      p1p2 += q * P1(i, k) * P2(i, k);
    }
  }

  const BoundaryPartition part = boundary_partition(g);
  const BoundaryTrace dn = normal_derivative(w, part);
  for (std::size_t k = 0; k < g.nt; ++k) {
    const double t = g.time(k);
    for (std::size_t b = 0; b < part.nodes.size(); ++b) {
      const BoundaryNode& node = part.nodes[b];
      const CrossCoefficients c = cross_coefficients(weight_jet(g.node(node.index), t, p, g.domain), p);
      for (int m = 1; m <= kCrossTermCount; ++m) {
        exp[m - 1] += wt[k] * node.weight * cross_lateral_integrand(m, dn.at(b, k), node.normal, c);
      }
    }
  }

  CrossTermTable table;
  double exp_sum = 0.0;
  for (int m = 0; m < kCrossTermCount; ++m) {
    table.terms[m] = {m + 1, def[m], exp[m], relative_discrepancy(def[m], exp[m])};
    table.definition_sum += def[m];
    exp_sum += exp[m];
  }
  table.total = {0, p1p2, exp_sum, relative_discrepancy(p1p2, exp_sum)};
  table.distributivity_gap = relative_discrepancy(p1p2, table.definition_sum);
  return table;
}

inline CrossTermPair cross_term(int k, const Field& w, const WeightParams& p) {
  if (k < 1 || k > kCrossTermCount) {
    throw Error(ErrorKind::invalid_argument, "cross_term", "k must lie in 1..10");
  }
  return cross_terms(w, p).terms[k - 1];
}

struct CrossTermSumReport {
  double p1p2 = 0.0;
  double expanded_sum = 0.0;
  double discrepancy = 0.0;
  double distributivity_gap = 0.0;
};

inline CrossTermSumReport cross_term_sum_check(const Field& w, const WeightParams& p) {
  const CrossTermTable t = cross_terms(w, p);
  return {t.total.definition_value, t.total.expanded_value, t.total.discrepancy, t.distributivity_gap};
}

}  // namespace carleman_lab

#endif  // CARLEMAN_LAB_CONJUGATION_HPP
