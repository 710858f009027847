#ifndef CARLEMAN_LAB_CARLEMAN_HPP
#define CARLEMAN_LAB_CARLEMAN_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "carleman_lab/error.hpp"
#include "carleman_lab/grid.hpp"
#include "carleman_lab/parallel.hpp"
#include "carleman_lab/presets.hpp"
#include "carleman_lab/wave_solver.hpp"
#include "carleman_lab/weights.hpp"

namespace carleman_lab {

/// Which terms enter the two sides of the estimate.
///   full:           all LHS terms  <=  residual + Gamma0 + t=T energy + t=T zero-order
///   remark:         all LHS terms  <=  residual + Gamma0            (requires T > T0)
///   remark_t0_only: t=0 LHS term   <=  residual + Gamma0            (requires T > T0)
enum class Variant { full, remark, remark_t0_only };

inline const char* to_string(Variant v) {
  switch (v) {
    case Variant::full: return "full";
    case Variant::remark: return "remark";
    case Variant::remark_t0_only: return "remark_t0_only";
  }
  return "full";
}

inline std::optional<Variant> parse_variant(const std::string& s) {
  if (s == "full") return Variant::full;
  if (s == "remark") return Variant::remark;
  if (s == "remark_t0_only") return Variant::remark_t0_only;
  return std::nullopt;
}

/// Every term of the estimate, all weighted by e^{2 s (phi - phi*) - shift}.
struct CarlemanSides {
  double lhs_t0 = 0.0;        ///< s^{1/2} int e^{2 s phi(0)} |d_t v(0)|^2
  double lhs_grad = 0.0;      ///< s int int e^{2 s phi} (|d_t v|^2 + |grad v|^2)
  double lhs_zero = 0.0;      ///< s^3 int int e^{2 s phi} |v|^2
  double rhs_residual = 0.0;  ///< int int e^{2 s phi} |d_t^2 v - Lap v + q v|^2
  double rhs_boundary = 0.0;  ///< s int int_{Gamma0} e^{2 s phi} |d_nu v|^2
  double rhs_T_energy = 0.0;  ///< s int e^{2 s phi(T)} (|d_t v(T)|^2 + |grad v(T)|^2)
  double rhs_T_zero = 0.0;    ///< s^3 int e^{2 s phi(T)} |v(T)|^2
  double log_offset = 0.0;    ///< phi*
  double log_shift = 0.0;
  double underflow_fraction = 0.0;  ///< share of nodes whose weight is exactly 0
  Variant variant = Variant::full;

  double lhs() const { return variant == Variant::remark_t0_only ? lhs_t0 : lhs_t0 + lhs_grad + lhs_zero; }

  double rhs() const {
    double r = rhs_residual + rhs_boundary;
    if (variant == Variant::full) r += rhs_T_energy + rhs_T_zero;
    return r;
  }

  /// LHS / RHS with M = 1; NaN for 0/0, +inf when only the RHS vanishes.
  double ratio() const {
    const double l = lhs();
    const double r = rhs();
    if (r > 0.0) return l / r;
    if (l == 0.0) return std::numeric_limits<double>::quiet_NaN();
    return std::numeric_limits<double>::infinity();
  }
};

/// Nodes whose weight underflows to 0 beyond this share make the row numerically degenerate.
inline constexpr double kUnderflowFlagFraction = 0.9;

inline CarlemanSides assemble(const Field& v, const SpatialField& q, const WeightParams& p, Variant variant,
                              double log_shift = 0.0) {
  const Grid& g = v.grid();
  const double scale = v.max_abs();
  for (double x : v.level(0)) {
    if (std::abs(x) > 1e-8 * scale) {
      throw Error(ErrorKind::precondition, "carleman.assemble", "v(., 0) must vanish");
    }
  }
  if (variant != Variant::full && !(g.domain.T > compute_t0(g.domain))) {
    throw Error(ErrorKind::precondition, "carleman.assemble", "remark variants need T > T0");
  }
  if (q.size() != g.nspace()) {
    throw Error(ErrorKind::invalid_argument, "carleman.assemble", "potential size does not match the grid");
  }

  const Field ph = phi_field(g, p);
  double offset = -std::numeric_limits<double>::infinity();
  for (double x : ph.values()) offset = std::max(offset, x);
  Field weight(g);
  std::size_t zeros = 0;
  for (std::size_t i = 0; i < weight.values().size(); ++i) {
    const double w = std::exp(2.0 * p.s * (ph.values()[i] - offset) - log_shift);
    weight.values()[i] = w;
    zeros += w == 0.0 ? 1 : 0;
  }

  const Field vt = dt(v);
  const auto gv = grad(v);
  const Field lv = dtt(v) - laplacian(v);

  Field grad_density(g);
  Field zero_density(g);
  Field residual_density(g);
  for (std::size_t k = 0; k < g.nt; ++k) {
    for (std::size_t i = 0; i < g.nspace(); ++i) {
      double gg = vt(i, k) * vt(i, k);
      for (const auto& c : gv) gg += c(i, k) * c(i, k);
      const double w = weight(i, k);
      grad_density(i, k) = w * gg;
      zero_density(i, k) = w * v(i, k) * v(i, k);
      const double r = lv(i, k) + q[i] * v(i, k);
      residual_density(i, k) = w * r * r;
    }
  }

  const std::size_t last = g.nt - 1;
  std::vector<double> t0_density(g.nspace());
  for (std::size_t i = 0; i < g.nspace(); ++i) t0_density[i] = weight(i, 0) * vt(i, 0) * vt(i, 0);

  const BoundaryPartition part = gamma0(g);
  const BoundaryTrace dn = normal_derivative(v, part);
  const double boundary = integrate_boundary_time_with(
      dn, g.tau, BoundaryMask::gamma0,
      [&](double val, std::size_t b, std::size_t k) { return weight(part.nodes[b].index, k) * val * val; });

  CarlemanSides sides;
  const double s = p.s;
  sides.variant = variant;
  sides.log_offset = offset;
  sides.log_shift = log_shift;
  sides.underflow_fraction = static_cast<double>(zeros) / static_cast<double>(weight.values().size());
  sides.lhs_t0 = std::sqrt(s) * integrate_space(g, t0_density);
  sides.lhs_grad = s * integrate_spacetime(grad_density);
  sides.lhs_zero = s * s * s * integrate_spacetime(zero_density);
  sides.rhs_residual = integrate_spacetime(residual_density);
  sides.rhs_boundary = s * boundary;
  sides.rhs_T_energy = s * integrate_space_at(grad_density, last);
  sides.rhs_T_zero = s * s * s * integrate_space_at(zero_density, last);
  return sides;
}

/// Max relative change of the ratio when the log-weight is shifted by c in {1, 10}.
inline double weight_normalization_invariance(const Field& v, const SpatialField& q, const WeightParams& p,
                                              Variant variant) {
  const double base = assemble(v, q, p, variant, 0.0).ratio();
  if (!std::isfinite(base)) return 0.0;
  double worst = 0.0;
  for (double c : {1.0, 10.0}) {
    const double shifted = assemble(v, q, p, variant, c).ratio();
    worst = std::max(worst, std::abs(shifted - base) / std::max(std::abs(base), std::numeric_limits<double>::min()));
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Test families and constant estimation

struct TestCase {
  std::string id;
  Field v;
  SpatialField q;
};

/// Deterministic family of admissible fields: each vanishes at t = 0 by construction
/// and on the lateral boundary. Types cycle through t (1 + b t) g(x), sin(omega t) g(x),
/// a wave solution started from v = 0, d_t v = g, and t^2 g(x).
inline std::vector<TestCase> make_test_family(const Grid& g, std::size_t count, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<TestCase> family;
  family.reserve(count);
  for (std::size_t m = 0; m < count; ++m) {
    SpatialPreset shape;
    shape.coeffs = {rng.uniform(0.5, 1.0), rng.uniform(-0.5, 0.5), rng.uniform(-0.25, 0.25)};
    const SpatialField gx = sample(shape, g);
    SpatialPreset qshape;
    qshape.offset = rng.uniform(0.0, 0.5);
    qshape.coeffs = {rng.uniform(0.0, 0.4)};
    const SpatialField q = sample(qshape, g);
    const double b = rng.uniform(-0.3, 0.3);
    const double omega = rng.uniform(1.0, 4.0);

    TestCase tc;
    tc.q = q;
    char buf[32];
    switch (m % 4) {
      case 0:
        std::snprintf(buf, sizeof buf, "linear_t_%02zu", m);
        tc.v = Field::sample(g, [&](const Point&, double t) { return t * (1.0 + b * t); });
        break;
      case 1:
        std::snprintf(buf, sizeof buf, "sine_t_%02zu", m);
        tc.v = Field::sample(g, [&](const Point&, double t) { return std::sin(omega * t); });
        break;
      case 2: {
        std::snprintf(buf, sizeof buf, "wave_%02zu", m);
        IBVPData data;
        data.q = q;
        data.u0 = SpatialField(g.nspace(), 0.0);
        data.u1 = gx;
        tc.v = solve(data, g).u;
        break;
      }
      default:
        std::snprintf(buf, sizeof buf, "quadratic_t_%02zu", m);
        tc.v = Field::sample(g, [&](const Point&, double t) { return t * t * (1.0 + b); });
        break;
    }
    if (m % 4 != 2) {
      for (std::size_t k = 0; k < g.nt; ++k) {
        for (std::size_t i = 0; i < g.nspace(); ++i) tc.v(i, k) *= gx[i];
      }
    }
    tc.id = buf;
    family.push_back(std::move(tc));
  }
  return family;
}

struct CarlemanRow {
  std::string case_id;
  double s = 0.0;
  double lambda = 0.0;
  CarlemanSides sides;
  double ratio = 0.0;
};

/// Number of RHS terms tracked for dominance shares.
inline constexpr int kRhsTerms = 4;
inline constexpr std::array<const char*, kRhsTerms> kRhsTermNames{"rhs_residual", "rhs_boundary", "rhs_T_energy",
                                                                  "rhs_T_zero"};

struct ConstantSummary {
  std::vector<CarlemanRow> rows;   ///< sorted by (case id, lambda, s)
  bool no_data = true;
  double m_hat = 0.0;              ///< max ratio over the family for s >= s0
  double s0 = 0.0;
  double m_hat_tail = 0.0;         ///< max ratio over s >= s_tail_min
  std::vector<std::pair<std::string, double>> per_case_tail_max;
  std::array<double, kRhsTerms> dominance{};  ///< mean share of each RHS term
  std::size_t counterexamples = 0; ///< rows with RHS = 0 and LHS > 0
  std::size_t nonfinite_rows = 0;
  std::size_t underflow_rows = 0;  ///< rows with > 90% of weights underflowing
};

namespace detail {

/// Smallest index after which the sequence is non-increasing or stays within 5% of its tail value.
inline std::size_t settle_index(const std::vector<double>& r) {
  for (std::size_t i = 0; i < r.size(); ++i) {
    bool nonincreasing = true;
    double peak = 0.0;
    for (std::size_t j = i; j < r.size(); ++j) {
      if (j > i && r[j] > r[j - 1]) nonincreasing = false;
      peak = std::max(peak, r[j]);
    }
    if (nonincreasing || peak <= 1.05 * r.back()) return i;
  }
  return r.empty() ? 0 : r.size() - 1;
}

}  // namespace detail

inline ConstantSummary estimate_constant(const std::vector<TestCase>& family, const WeightParams& base,
                                         const std::vector<double>& s_grid, Variant variant,
                                         double s_tail_min = 10.0, unsigned jobs = 1) {
  ConstantSummary out;
  if (family.empty() || s_grid.empty()) return out;
  std::vector<double> s_sorted = s_grid;
  std::sort(s_sorted.begin(), s_sorted.end());

  const std::size_t ns = s_sorted.size();
  auto rows = parallel_map(family.size() * ns, jobs, [&](std::size_t cell) {
    const TestCase& tc = family[cell / ns];
    WeightParams p = base;
    p.s = s_sorted[cell % ns];
    CarlemanRow row;
    row.case_id = tc.id;
    row.s = p.s;
    row.lambda = p.lambda;
    row.sides = assemble(tc.v, tc.q, p, variant);
    row.ratio = row.sides.ratio();
    return row;
  });

  std::size_t shares = 0;
  double s0 = s_sorted.front();
  for (std::size_t c = 0; c < family.size(); ++c) {
    std::vector<double> seq;
    bool usable = true;
    for (std::size_t i = 0; i < ns; ++i) {
      const CarlemanRow& r = rows[c * ns + i];
      if (std::isnan(r.ratio)) {
        usable = false;
        continue;
      }
      if (std::isinf(r.ratio)) {
        ++out.counterexamples;
        usable = false;
        continue;
      }
      seq.push_back(r.ratio);
      if (r.sides.underflow_fraction > kUnderflowFlagFraction) ++out.underflow_rows;
      const double rhs = r.sides.rhs();
      if (rhs > 0.0) {
        const std::array<double, kRhsTerms> parts{r.sides.rhs_residual, r.sides.rhs_boundary,
                                                  variant == Variant::full ? r.sides.rhs_T_energy : 0.0,
                                                  variant == Variant::full ? r.sides.rhs_T_zero : 0.0};
        for (int t = 0; t < kRhsTerms; ++t) out.dominance[t] += parts[t] / rhs;
        ++shares;
      }
    }
    if (usable && seq.size() == ns) s0 = std::max(s0, s_sorted[detail::settle_index(seq)]);
  }
  for (const auto& r : rows) {
    if (!std::isfinite(r.ratio) && !std::isnan(r.ratio)) ++out.nonfinite_rows;
  }
  if (shares > 0) {
    for (double& d : out.dominance) d /= static_cast<double>(shares);
  }

  out.s0 = s0;
  for (std::size_t c = 0; c < family.size(); ++c) {
    double tail = 0.0;
    bool any = false;
    for (std::size_t i = 0; i < ns; ++i) {
      const CarlemanRow& r = rows[c * ns + i];
      if (!std::isfinite(r.ratio)) continue;
      if (r.s >= s0) out.m_hat = std::max(out.m_hat, r.ratio);
      if (r.s >= s_tail_min) {
        tail = std::max(tail, r.ratio);
        any = true;
      }
      out.no_data = false;
    }
    if (any) out.per_case_tail_max.emplace_back(family[c].id, tail);
    out.m_hat_tail = std::max(out.m_hat_tail, tail);
  }
  std::sort(rows.begin(), rows.end(), [](const CarlemanRow& a, const CarlemanRow& b) {
    if (a.case_id != b.case_id) return a.case_id < b.case_id;
    if (a.lambda != b.lambda) return a.lambda < b.lambda;
    return a.s < b.s;
  });
  std::sort(out.per_case_tail_max.begin(), out.per_case_tail_max.end());
  out.rows = std::move(rows);
  return out;
}

}  // namespace carleman_lab

#endif  // CARLEMAN_LAB_CARLEMAN_HPP
