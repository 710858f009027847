#include <boost/math/quadrature/gauss.hpp>
#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "carleman_lab/carleman.hpp"

namespace cl = carleman_lab;
using std::numbers::pi;
using boost::math::quadrature::gauss;

namespace {

cl::DomainSpec unit() { return cl::DomainSpec::interval(0, 1, -0.1, 1.5); }

cl::WeightParams reference(double s, double lambda = 0.5) {
  cl::WeightParams p;
  p.beta0 = cl::auto_beta0(unit(), p.beta);
  p.alpha = cl::auto_alpha(p.beta, 1);
  p.lambda = lambda;
  p.s = s;
  return p;
}

std::array<double, 7> terms(const cl::CarlemanSides& c) {
  return {c.lhs_t0, c.lhs_grad, c.lhs_zero, c.rhs_residual, c.rhs_boundary, c.rhs_T_energy, c.rhs_T_zero};
}

struct Analytic {
  std::function<double(double, double)> v, vt, vx, residual;
};

/// Every term by direct quadrature of analytic integrands with rule `rule(f, a, b)`.
template <class Rule>
std::array<double, 7> oracle(const Analytic& a, const cl::WeightParams& p, Rule&& rule, double phi_star) {
  const auto d = unit();
  auto w = [&](double x, double t) { return std::exp(2 * p.s * (cl::phi({x, 0}, t, p, d) - phi_star)); };
  auto st = [&](const std::function<double(double, double)>& f) {
    return rule([&](double t) { return rule([&](double x) { return f(x, t); }, 0.0, 1.0); }, 0.0, d.T);
  };
  auto at = [&](double t, const std::function<double(double, double)>& f) {
    return rule([&](double x) { return f(x, t); }, 0.0, 1.0);
  };
  auto energy = [&](double x, double t) { return w(x, t) * (a.vt(x, t) * a.vt(x, t) + a.vx(x, t) * a.vx(x, t)); };
  auto zero = [&](double x, double t) { return w(x, t) * a.v(x, t) * a.v(x, t); };
  const double s = p.s;
  return {std::sqrt(s) * at(0.0, [&](double x, double t) { return w(x, t) * a.vt(x, t) * a.vt(x, t); }),
          s * st(energy),
          s * s * s * st(zero),
          st([&](double x, double t) { return w(x, t) * a.residual(x, t) * a.residual(x, t); }),
          s * rule([&](double t) { return w(1.0, t) * a.vx(1.0, t) * a.vx(1.0, t); }, 0.0, d.T),
          s * at(d.T, energy),
          s * s * s * at(d.T, zero)};
}

}  // namespace

TEST(Assemble, ZeroFieldGivesZeroTerms) {
  const auto g = cl::build_grid(unit(), 11, 0.9);
  const auto c = cl::assemble(cl::Field(g), cl::SpatialField(g.nspace(), 0.3), reference(2), cl::Variant::full);
  for (double t : terms(c)) EXPECT_EQ(t, 0.0);
  EXPECT_TRUE(std::isnan(c.ratio()));
  EXPECT_EQ(cl::weight_normalization_invariance(cl::Field(g), cl::SpatialField(g.nspace(), 0.0), reference(2),
                                                cl::Variant::full),
            0.0);
}

TEST(Assemble, TinyGridMatchesIndependentTrapezoid) {
  // v = t x (1 - x): every difference stencil is exact, so the trapezoid rule over
  // analytic integrands must reproduce each term to roundoff.
  const auto g = cl::build_grid(unit(), 5, 0.9);
  const auto p = reference(0.7);
  const double q = 0.4;
  const auto v = cl::Field::sample(g, [](const cl::Point& x, double t) { return t * x[0] * (1 - x[0]); });
  const auto c = cl::assemble(v, cl::SpatialField(g.nspace(), q), p, cl::Variant::full);

  Analytic a;
  a.v = [](double x, double t) { return t * x * (1 - x); };
  a.vt = [](double x, double) { return x * (1 - x); };
  a.vx = [](double x, double t) { return t * (1 - 2 * x); };
  a.residual = [&](double x, double t) { return 2 * t + q * t * x * (1 - x); };
  auto trapezoid = [&](const std::function<double(double)>& f, double lo, double hi) {
    const std::size_t n = hi == 1.0 ? g.nx : g.nt;
    const double h = (hi - lo) / static_cast<double>(n - 1);
    double acc = 0.5 * (f(lo) + f(hi));
    for (std::size_t i = 1; i + 1 < n; ++i) acc += f(lo + static_cast<double>(i) * h);
    return acc * h;
  };
  const double phi_star = cl::phi({1.0, 0}, 0.0, p, unit());
  const auto ref = oracle(a, p, trapezoid, phi_star);
  const auto got = terms(c);
  for (std::size_t i = 0; i < 7; ++i) EXPECT_NEAR(got[i], ref[i], 1e-12 * (1 + std::abs(ref[i]))) << "term " << i;
}

TEST(Assemble, ConvergesToContinuumIntegrals) {
  const auto p = reference(2.0);
  Analytic a;
  a.v = [](double x, double t) { return t * std::sin(pi * x); };
  a.vt = [](double x, double) { return std::sin(pi * x); };
  a.vx = [](double x, double t) { return pi * t * std::cos(pi * x); };
  a.residual = [](double x, double t) { return pi * pi * t * std::sin(pi * x); };
  auto gl = [](const std::function<double(double)>& f, double lo, double hi) {
    return gauss<double, 30>::integrate(f, lo, hi);
  };
  const auto ref = oracle(a, p, gl, cl::phi({1.0, 0}, 0.0, p, unit()));
  auto err = [&](std::size_t nx) {
    const auto g = cl::build_grid(unit(), nx, 0.9);
    const auto v = cl::Field::sample(g, [](const cl::Point& x, double t) { return t * std::sin(pi * x[0]); });
    const auto got = terms(cl::assemble(v, cl::SpatialField(g.nspace(), 0.0), p, cl::Variant::full));
    double e = 0;
    for (std::size_t i = 0; i < 7; ++i) e = std::max(e, std::abs(got[i] - ref[i]) / std::abs(ref[i]));
    return e;
  };
  EXPECT_LT(err(201), 1e-3);
  EXPECT_GT(err(101) / err(201), 3.0);
}

TEST(Assemble, QuadraticHomogeneity) {
  const auto g = cl::build_grid(unit(), 21, 0.9);
  const auto v = cl::Field::sample(g, [](const cl::Point& x, double t) { return std::sin(t) * std::sin(pi * x[0]); });
  const cl::SpatialField q(g.nspace(), 0.2);
  const auto one = terms(cl::assemble(v, q, reference(3), cl::Variant::full));
  cl::Field v2 = v;
  v2 *= 2.0;
  const auto two = terms(cl::assemble(v2, q, reference(3), cl::Variant::full));
  for (std::size_t i = 0; i < 7; ++i) EXPECT_EQ(two[i], 4.0 * one[i]);
}

TEST(Assemble, PreconditionsAreNamed) {
  const auto g = cl::build_grid(unit(), 11, 0.9);
  const auto bad = cl::Field::sample(g, [](const cl::Point& x, double) { return std::sin(pi * x[0]); });
  EXPECT_THROW(cl::assemble(bad, cl::SpatialField(g.nspace(), 0.0), reference(1), cl::Variant::full), cl::Error);
  const auto short_horizon = cl::build_grid(cl::DomainSpec::interval(0, 1, -0.1, 1.0), 11, 0.9);
  const auto v = cl::Field::sample(short_horizon, [](const cl::Point& x, double t) { return t * std::sin(pi * x[0]); });
  const cl::SpatialField q(short_horizon.nspace(), 0.0);
  EXPECT_THROW(cl::assemble(v, q, reference(1), cl::Variant::remark), cl::Error);
  EXPECT_NO_THROW(cl::assemble(v, q, reference(1), cl::Variant::full));
}

TEST(Assemble, VariantsSelectTerms) {
  const auto g = cl::build_grid(unit(), 21, 0.9);
  const auto v = cl::Field::sample(g, [](const cl::Point& x, double t) { return t * std::sin(pi * x[0]); });
  const cl::SpatialField q(g.nspace(), 0.0);
  const auto full = cl::assemble(v, q, reference(2), cl::Variant::full);
  const auto remark = cl::assemble(v, q, reference(2), cl::Variant::remark);
  const auto t0 = cl::assemble(v, q, reference(2), cl::Variant::remark_t0_only);
  EXPECT_DOUBLE_EQ(full.rhs(), full.rhs_residual + full.rhs_boundary + full.rhs_T_energy + full.rhs_T_zero);
  EXPECT_DOUBLE_EQ(remark.rhs(), remark.rhs_residual + remark.rhs_boundary);
  EXPECT_DOUBLE_EQ(t0.lhs(), t0.lhs_t0);
  EXPECT_EQ(cl::parse_variant("remark_t0_only"), cl::Variant::remark_t0_only);
  EXPECT_FALSE(cl::parse_variant("bogus"));
}

TEST(Invariance, FamilyAndStressCase) {
  const auto g = cl::build_grid(unit(), 51, 0.9);
  const auto family = cl::make_test_family(g, 8, 17);
  for (const auto& tc : family) {
    for (double s : {1.0, 10.0, 50.0}) {
      EXPECT_LE(cl::weight_normalization_invariance(tc.v, tc.q, reference(s), cl::Variant::full), 1e-10) << tc.id;
    }
    EXPECT_LE(cl::weight_normalization_invariance(tc.v, tc.q, reference(50, 1.0), cl::Variant::full), 1e-8) << tc.id;
  }
}

TEST(Family, MembersAreAdmissibleAndDeterministic) {
  const auto g = cl::build_grid(unit(), 41, 0.9);
  const auto a = cl::make_test_family(g, 20, 42);
  const auto b = cl::make_test_family(g, 20, 42);
  ASSERT_EQ(a.size(), 20u);
  EXPECT_EQ(a[0].id, "linear_t_00");
  EXPECT_EQ(a[2].id, "wave_02");
  for (std::size_t m = 0; m < a.size(); ++m) {
    EXPECT_EQ(a[m].id, b[m].id);
    EXPECT_EQ(a[m].v.values(), b[m].v.values());
    const double scale = a[m].v.max_abs();
    EXPECT_GT(scale, 0.0);
    for (double x : a[m].v.level(0)) EXPECT_LE(std::abs(x), 1e-12 * scale);
    for (std::size_t k = 0; k < g.nt; ++k) {
      EXPECT_LE(std::abs(a[m].v(0, k)), 1e-12 * scale);
      EXPECT_LE(std::abs(a[m].v(g.nspace() - 1, k)), 1e-12 * scale);
    }
  }
  EXPECT_NE(cl::make_test_family(g, 4, 43)[0].v.values(), a[0].v.values());
}

TEST(EstimateConstant, EmptyOrZeroFamilyHasNoData) {
  const auto g = cl::build_grid(unit(), 11, 0.9);
  EXPECT_TRUE(cl::estimate_constant({}, reference(1), {1, 2}, cl::Variant::full).no_data);
  std::vector<cl::TestCase> zero{{"zero", cl::Field(g), cl::SpatialField(g.nspace(), 0.0)}};
  const auto s = cl::estimate_constant(zero, reference(1), {1, 2}, cl::Variant::full);
  EXPECT_TRUE(s.no_data);
  EXPECT_EQ(s.counterexamples, 0u);
}

TEST(EstimateConstant, FiniteAndIndependentOfWorkerCount) {
  const auto g = cl::build_grid(unit(), 51, 0.9);
  const auto family = cl::make_test_family(g, 8, 7);
  const std::vector<double> s_grid{1, 2, 5, 10, 20, 50};
  const auto one = cl::estimate_constant(family, reference(1), s_grid, cl::Variant::full, 10, 1);
  const auto three = cl::estimate_constant(family, reference(1), s_grid, cl::Variant::full, 10, 3);
  EXPECT_FALSE(one.no_data);
  EXPECT_TRUE(std::isfinite(one.m_hat));
  EXPECT_GT(one.m_hat, 0.0);
  EXPECT_EQ(one.nonfinite_rows, 0u);
  EXPECT_EQ(one.counterexamples, 0u);
  ASSERT_EQ(one.rows.size(), three.rows.size());
  for (std::size_t i = 0; i < one.rows.size(); ++i) {
    EXPECT_EQ(one.rows[i].case_id, three.rows[i].case_id);
    EXPECT_EQ(one.rows[i].ratio, three.rows[i].ratio);
  }
  EXPECT_EQ(one.m_hat, three.m_hat);
  double share = 0;
  for (double d : one.dominance) share += d;
  EXPECT_NEAR(share, 1.0, 1e-12);
}

TEST(EstimateConstant, HomogeneousWaveIsCarriedByBoundaryAndTerminalTerms) {
  const auto g = cl::build_grid(unit(), 101, 0.9);
  cl::IBVPData d;
  d.q = cl::SpatialField(g.nspace(), 0.0);
  d.u0 = cl::SpatialField(g.nspace(), 0.0);
  d.u1 = cl::sample_spatial(g, [](const cl::Point& x) { return std::sin(pi * x[0]); });
  const auto v = cl::solve(d, g).u;
  const auto c = cl::assemble(v, d.q, reference(5), cl::Variant::full);
  EXPECT_TRUE(std::isfinite(c.ratio()));
  EXPECT_LT(c.rhs_residual, 1e-3 * (c.rhs_boundary + c.rhs_T_energy + c.rhs_T_zero));
}
