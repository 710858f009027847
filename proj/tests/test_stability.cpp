#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "carleman_lab/stability.hpp"

namespace cl = carleman_lab;
using std::numbers::pi;

namespace {

cl::DomainSpec unit() { return cl::DomainSpec::interval(0, 1, -0.1, 1.5); }

cl::WeightParams reference(double s = 1.0) {
  cl::WeightParams p;
  p.beta0 = cl::auto_beta0(unit(), p.beta);
  p.alpha = cl::auto_alpha(p.beta, 1);
  p.s = s;
  return p;
}

cl::TwinConfig twin(std::size_t nx, double eps) {
  cl::TwinConfig c;
  c.grid = cl::build_grid(unit(), nx, 0.9);
  c.params = reference();
  c.u0 = cl::sample_spatial(c.grid, [](const cl::Point& x) { return 2 + std::sin(pi * x[0]); });
  c.u1 = cl::SpatialField(c.grid.nspace(), 0.0);
  c.q1 = cl::SpatialField(c.grid.nspace(), 0.0);
  c.q2 = cl::sample_spatial(c.grid, [&](const cl::Point& x) { return eps * std::sin(2 * pi * x[0]); });
  c.m0 = 2.0;
  c.m = 1.0;
  return c;
}

cl::SpatialField shape(const cl::Grid& g) {
  return cl::sample_spatial(g, [](const cl::Point& x) { return std::sin(2 * pi * x[0]); });
}

/// Dense midpoint sum with a million panels.
double dense_k(double s, double x, const cl::WeightParams& p, double T) {
  const std::size_t n = 1'000'000;
  const double h = T / static_cast<double>(n);
  const double pref = std::exp(p.lambda * ((x + 0.1) * (x + 0.1) + p.beta0));
  long double acc = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = (static_cast<double>(i) + 0.5) * h;
    acc += std::exp(-2 * s * pref * (1 - std::exp(-p.lambda * p.beta * t * t)));
  }
  return static_cast<double>(acc * h);
}

}  // namespace

TEST(Romberg, PolynomialAndTranscendental) {
  EXPECT_NEAR(cl::romberg([](double x) { return x * x * x; }, 0, 2, 1e-12), 4.0, 1e-12);
  EXPECT_NEAR(cl::romberg([](double x) { return std::exp(-x * x); }, 0, 1, 1e-12), 0.746824132812427, 1e-12);
}

TEST(KKernel, MatchesDenseOracle) {
  auto p = reference();
  p.beta0 = 2.115;
  for (double s : {1.0, 10.0, 256.0}) {
    const double k = cl::k_kernel(s, {0.0, 0}, p, unit());
    const double ref = dense_k(s, 0.0, p, 1.5);
    EXPECT_LT(std::abs(k - ref) / ref, 1e-6) << "s=" << s;
  }
}

TEST(KKernel, LimitsAndMonotonicity) {
  const auto p = reference();
  EXPECT_NEAR(cl::k_kernel(1e-12, {0.3, 0}, p, unit()), 1.5, 1e-9);
  double prev = 1.5;
  for (double s = 0.5; s < 600; s *= 2) {
    const double k = cl::k_kernel(s, {0.3, 0}, p, unit());
    EXPECT_LT(k, prev);
    prev = k;
  }
  EXPECT_THROW(cl::k_kernel(0.0, {0.3, 0}, p, unit()), cl::Error);
}

TEST(KMax, AttainedNearestToX0AndStrictlyDecreasing) {
  const auto g = cl::build_grid(unit(), 101, 0.9);
  const auto p = reference();
  double prev = std::numeric_limits<double>::infinity();
  for (double s : {1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0, 256.0}) {
    const auto k = cl::k_max(s, g, p);
    EXPECT_TRUE(k.monotone_in_distance);
    EXPECT_EQ(k.argmax[0], 0.0);
    EXPECT_LT(k.value, prev);
    prev = k.value;
  }
}

TEST(Absorption, ZeroPerturbation) {
  const auto g = cl::build_grid(unit(), 21, 0.9);
  const auto r = cl::absorption_check(cl::SpatialField(g.nspace(), 0.0), reference(5), g);
  EXPECT_EQ(r.lhs, 0.0);
  EXPECT_EQ(r.bound, 0.0);
  EXPECT_TRUE(r.holds);
}

TEST(Absorption, UnitPerturbationAgainstDirectQuadrature) {
  const auto g = cl::build_grid(unit(), 6, 0.9);
  const auto p = reference(3);
  const auto r = cl::absorption_check(cl::SpatialField(g.nspace(), 1.0), p, g);
  const double phi_star = cl::phi({1.0, 0}, 0.0, p, unit());
  double lhs = 0, base = 0;
  for (std::size_t i = 0; i < g.nx; ++i) {
    const double x = static_cast<double>(i) / static_cast<double>(g.nx - 1);
    const double wx = (i == 0 || i + 1 == g.nx ? 0.5 : 1.0) * g.hx;
    base += wx * std::exp(2 * p.s * (cl::phi({x, 0}, 0, p, unit()) - phi_star));
    for (std::size_t k = 0; k < g.nt; ++k) {
      const double wt = (k == 0 || k + 1 == g.nt ? 0.5 : 1.0) * g.tau;
      lhs += wx * wt * std::exp(2 * p.s * (cl::phi({x, 0}, g.time(k), p, unit()) - phi_star));
    }
  }
  EXPECT_NEAR(r.lhs, lhs, 1e-13 * lhs);
  EXPECT_NEAR(r.base, base, 1e-13 * base);
  EXPECT_TRUE(r.holds);
  EXPECT_LE(r.lhs, r.bound * (1 + cl::kAbsorptionSlack));
}

TEST(Absorption, RatioDecreasesWithS) {
  const auto g = cl::build_grid(unit(), 41, 0.9);
  const auto dq = shape(g);
  double prev = std::numeric_limits<double>::infinity();
  for (double s : {1.0, 2.0, 4.0, 8.0, 16.0}) {
    const auto r = cl::absorption_check(dq, reference(s), g);
    EXPECT_LT(r.lhs / r.base, prev);
    prev = r.lhs / r.base;
  }
}

TEST(Absorption, ThresholdIsFirstQualifyingS) {
  const auto g = cl::build_grid(unit(), 41, 0.9);
  const auto p = reference();
  const auto t = cl::absorption_threshold({64, 1, 4, 16}, 10.0, g, p);
  ASSERT_TRUE(t);
  EXPECT_LT(cl::k_max(*t, g, p).value * 10.0, 0.5 * std::sqrt(*t));
  EXPECT_FALSE(cl::absorption_threshold({1.0}, 1e6, g, p));
}

TEST(Twin, EqualPotentialsGiveExactZeros) {
  auto c = twin(51, 0.0);
  const auto r = cl::run_twin(c);
  EXPECT_EQ(r.dq_norm, 0.0);
  EXPECT_EQ(r.trace_norm, 0.0);
  EXPECT_FALSE(r.c_emp);
  EXPECT_FALSE(r.c_emp_weighted);
}

TEST(Twin, PerturbationNormMatchesClosedForm) {
  const auto r = cl::run_twin(twin(101, 1e-2));
  EXPECT_NEAR(r.dq_norm, 1e-2 / std::sqrt(2.0), 1e-2 * 1e-2 / std::sqrt(2.0));
  ASSERT_TRUE(r.c_emp);
  EXPECT_GT(*r.c_emp, 0.0);
  EXPECT_TRUE(r.m0_ok);
}

TEST(Twin, ZSystemResidualAndInitialConditionsConverge) {
  const auto a = cl::run_twin(twin(101, 1e-2));
  const auto b = cl::run_twin(twin(201, 1e-2));
  EXPECT_GE(a.residual_z / b.residual_z, 3.0);
  EXPECT_GE(a.dt_z0 / b.dt_z0, 3.0);
  EXPECT_GE(a.initial_velocity_gap / b.initial_velocity_gap, 3.0);
  EXPECT_LT(a.residual_v, 1e-6);
}

TEST(Twin, DirectVSolveAgrees) {
  const auto a = cl::run_twin(twin(101, 1e-2));
  const auto b = cl::run_twin(twin(201, 1e-2));
  ASSERT_TRUE(a.v_direct_gap && b.v_direct_gap);
  EXPECT_LE(*a.v_direct_gap, 5e-2);
  EXPECT_GE(*a.v_direct_gap / *b.v_direct_gap, 2.0);
}

TEST(Twin, HypothesisFailureAborts) {
  auto c = twin(21, 1e-2);
  c.u0 = cl::sample_spatial(c.grid, [](const cl::Point& x) { return std::sin(pi * x[0]); });
  c.m0 = 0.1;
  EXPECT_THROW(cl::run_twin(c), cl::Error);
  auto z = twin(21, 1e-2);
  z.m0 = 0.0;
  EXPECT_THROW(cl::run_twin(z), cl::Error);
}

TEST(Twin, KTableIsFilled) {
  auto c = twin(21, 1e-2);
  c.k_s_values = {1, 2, 4};
  const auto r = cl::run_twin(c);
  ASSERT_EQ(r.k_table.size(), 3u);
  EXPECT_GT(r.k_table[0].second, r.k_table[2].second);
}

TEST(Scaling, LinearResponse) {
  auto base = twin(101, 0.0);
  base.jobs = 2;
  const auto t = cl::scaling_study(base, {2e-3, 0.0, 1e-3}, shape(base.grid));
  ASSERT_EQ(t.rows.size(), 3u);
  EXPECT_EQ(t.rows[0].epsilon, 0.0);
  EXPECT_EQ(t.rows[0].dq_norm, 0.0);
  EXPECT_EQ(t.rows[0].trace_norm, 0.0);
  EXPECT_NEAR(t.rows[2].dq_norm, 2 * t.rows[1].dq_norm, 1e-15);
  EXPECT_NEAR(t.rows[2].trace_norm / t.rows[1].trace_norm, 2.0, 0.1);
}

TEST(Scaling, SpreadAcrossDecadesIsSmall) {
  const auto base = twin(101, 0.0);
  const auto t = cl::scaling_study(base, {1e-3, 1e-2, 1e-1}, shape(base.grid));
  EXPECT_LT(t.spread, 3.0);
}

TEST(Scaling, InadmissibleEpsilonIsRejected) {
  const auto base = twin(21, 0.0);
  EXPECT_THROW(cl::scaling_study(base, {5.0}, shape(base.grid)), cl::Error);
}
