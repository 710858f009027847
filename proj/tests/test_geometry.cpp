#include <boost/multiprecision/cpp_bin_float.hpp>
#include <gtest/gtest.h>

#include <cmath>

#include "carleman_lab/weights.hpp"

namespace cl = carleman_lab;
using big = boost::multiprecision::cpp_bin_float_50;

TEST(Geometry, T0IsTheFarthestDistance) {
  EXPECT_DOUBLE_EQ(cl::compute_t0(cl::DomainSpec::interval(0, 1, -0.1, 1.5)), 1.1);
  EXPECT_NEAR(cl::compute_t0(cl::DomainSpec::rectangle({0, 0}, {1, 1}, {-0.1, -0.1}, 2.0)), 1.5556349186104046,
              1e-12);
  EXPECT_DOUBLE_EQ(cl::compute_t0(cl::DomainSpec::interval(0, 1, 2.0, 1.5)), 2.0);
}

TEST(Geometry, MinBeta0ClosedForm) {
  EXPECT_NEAR(cl::min_beta0(cl::DomainSpec::interval(0, 1, -0.1, 1.5), 0.5), 2.115, 1e-14);
  EXPECT_NEAR(cl::min_beta0(cl::DomainSpec::interval(0, 1, -0.1, 2.0), 0.9), 4.59, 1e-14);
  EXPECT_NEAR(cl::min_beta0(cl::DomainSpec::interval(0, 1, -1.0, 2.0), 0.0), 0.0, 1e-14);
  EXPECT_NEAR(cl::auto_beta0(cl::DomainSpec::interval(0, 1, -0.1, 1.5), 0.5), 2.215, 1e-14);
}

TEST(Geometry, AlphaWindow) {
  auto w1 = cl::alpha_window(0.5, 1);
  EXPECT_NEAR(w1.lower, 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(w1.upper, 4.0 / 3.0, 1e-15);
  auto w2 = cl::alpha_window(0.5, 2);
  EXPECT_NEAR(w2.lower, 0.4, 1e-15);
  EXPECT_NEAR(w2.upper, 0.8, 1e-15);
  EXPECT_TRUE(w1.contains(cl::auto_alpha(0.5, 1)));
  EXPECT_TRUE(w2.contains(cl::auto_alpha(0.5, 2)));
  EXPECT_NE(cl::auto_alpha(0.5, 1), 1.0);
}

TEST(Geometry, ValidationFlagsShortHorizon) {
  const auto d = cl::DomainSpec::interval(0, 1, -0.1, 1.0);
  cl::WeightParams p;
  p.beta0 = cl::auto_beta0(d, p.beta);
  p.alpha = cl::auto_alpha(p.beta, 1);
  const auto r = cl::validate(p, d);
  ASSERT_NE(r.find("T_exceeds_T0"), nullptr);
  EXPECT_FALSE(r.find("T_exceeds_T0")->passed);
  EXPECT_FALSE(r.ok());
}

TEST(Geometry, ValidationAcceptsReferenceAndRejectsBadBeta) {
  const auto d = cl::DomainSpec::interval(0, 1, -0.1, 1.5);
  cl::WeightParams p;
  p.beta0 = cl::auto_beta0(d, p.beta);
  p.alpha = cl::auto_alpha(p.beta, 1);
  EXPECT_TRUE(cl::validate(p, d).ok());
  p.beta = 1.5;
  EXPECT_FALSE(cl::validate(p, d).find("beta_window")->passed);
}

TEST(Geometry, InteriorX0IsRejected) {
  EXPECT_THROW(cl::DomainSpec::interval(0, 1, 0.5, 1.5), cl::Error);
}

TEST(Weights, PsiAndPhiValues) {
  const auto d = cl::DomainSpec::interval(0, 1, -0.1, 1.5);
  cl::WeightParams p;
  p.beta = 0.5;
  p.beta0 = 1.0;
  EXPECT_NEAR(cl::psi({0.4, 0}, 0.0, p, d), 1.25, 1e-15);
  EXPECT_NEAR(cl::psi({0.4, 0}, 1.0, p, d), 0.75, 1e-15);
  p.lambda = 0.0;
  EXPECT_DOUBLE_EQ(cl::phi({0.3, 0}, 0.7, p, d), 1.0);
}

TEST(Weights, PsiAtLeastOneOnReferenceGrid) {
  const auto d = cl::DomainSpec::interval(0, 1, -0.1, 1.5);
  cl::WeightParams p;
  p.beta0 = cl::auto_beta0(d, p.beta);
  const auto g = cl::build_grid(d, 51, 0.9);
  for (double v : cl::psi_field(g, p).values()) EXPECT_GE(v, 1.0);
}

TEST(Weights, JetAgainstClosedForms) {
  const auto d = cl::DomainSpec::interval(0, 1, -0.1, 1.5);
  cl::WeightParams p;
  p.beta0 = cl::auto_beta0(d, p.beta);
  const auto j = cl::weight_jet({0.3, 0}, 0.7, p, d);
  EXPECT_NEAR(j.psi_t, -2 * 0.5 * 0.7, 1e-15);
  EXPECT_NEAR(j.psi_tt, -1.0, 1e-15);
  EXPECT_NEAR(j.lap_psi, 2.0, 1e-15);
  EXPECT_NEAR(j.A, -3.0, 1e-15);
  EXPECT_NEAR(j.G, 0.7 * 0.7 - 4 * 0.16, 1e-14);
  // phi_t by a centered difference
  const double e = 1e-5;
  const double fd = (cl::phi({0.3, 0}, 0.7 + e, p, d) - cl::phi({0.3, 0}, 0.7 - e, p, d)) / (2 * e);
  EXPECT_NEAR(j.phi_t, fd, 1e-8);
}

TEST(Weights, Gamma0Examples) {
  const auto g1 = cl::build_grid(cl::DomainSpec::interval(0, 1, -0.1, 1.5), 11, 0.9);
  const auto part = cl::gamma0(g1);
  ASSERT_EQ(part.nodes.size(), 2u);
  for (const auto& n : part.nodes) EXPECT_EQ(n.in_gamma0, g1.node(n.index)[0] == 1.0);

  const auto g2 = cl::build_grid(cl::DomainSpec::rectangle({0, 0}, {1, 1}, {-0.1, 0.5}, 2.0), 11, 11, 0.5);
  for (const auto& n : cl::gamma0(g2).nodes) {
    const bool left = n.axis == 0 && n.side < 0;
    EXPECT_EQ(n.in_gamma0, !left) << "edge axis=" << n.axis << " side=" << n.side;
  }
}

TEST(Weights, ZeroSGivesUnitWeight) {
  const auto d = cl::DomainSpec::interval(0, 1, -0.1, 1.5);
  cl::WeightParams p;
  p.s = 0.0;
  for (double v : cl::weight_field(cl::build_grid(d, 21, 0.9), p, false).values()) EXPECT_EQ(v, 1.0);
}

TEST(Weights, NormalizedMaximumIsOne) {
  const auto d = cl::DomainSpec::interval(0, 1, -0.1, 1.5);
  cl::WeightParams p;
  p.s = 50;
  const auto g = cl::build_grid(d, 41, 0.9);
  const auto w = cl::weight_field(g, p, true);
  double mx = 0;
  for (double v : w.values()) mx = std::max(mx, v);
  EXPECT_EQ(mx, 1.0);
  // argmax of phi: farthest point at t = 0
  EXPECT_EQ(w(g.nspace() - 1, 0), 1.0);
}

TEST(Weights, UnnormalizedAgainstHighPrecision) {
  const auto d = cl::DomainSpec::interval(0, 1, -0.1, 1.5);
  cl::WeightParams p;
  p.s = 10;
  p.lambda = 0.5;
  p.beta0 = cl::auto_beta0(d, p.beta);
  const auto g = cl::build_grid(d, 11, 0.9);
  const auto w = cl::weight_field(g, p, false);
  for (std::size_t idx : {std::size_t{0}, std::size_t{5}, std::size_t{10}}) {
    for (std::size_t k : {std::size_t{0}, g.nt / 2, g.nt - 1}) {
      const big x = g.node(idx)[0];
      const big t = g.time(k);
      const big psi = (x + big("0.1")) * (x + big("0.1")) - big(p.beta) * t * t + big(p.beta0);
      const big ref = exp(2 * big(p.s) * exp(big(p.lambda) * psi));
      EXPECT_NEAR(w(idx, k) / ref.convert_to<double>(), 1.0, 1e-12);
    }
  }
}

TEST(Weights, UnnormalizedOverflowIsReported) {
  const auto d = cl::DomainSpec::interval(0, 1, -0.1, 1.5);
  cl::WeightParams p;
  p.s = 200;
  p.lambda = 1.0;
  try {
    (void)cl::weight_field(cl::build_grid(d, 11, 0.9), p, false);
    FAIL();
  } catch (const cl::Error& e) {
    EXPECT_EQ(e.kind(), cl::ErrorKind::overflow);
  }
  EXPECT_NO_THROW((void)cl::weight_field(cl::build_grid(d, 11, 0.9), p, true));
}
