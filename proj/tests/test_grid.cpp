#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "carleman_lab/grid.hpp"

namespace cl = carleman_lab;
using std::numbers::pi;

namespace {

cl::DomainSpec unit() { return cl::DomainSpec::interval(0, 1, -0.1, 1.5); }

double max_interior(const cl::Field& f, const cl::Field& ref) {
  const auto& g = f.grid();
  double m = 0;
  for (std::size_t k = 1; k + 1 < g.nt; ++k)
    for (std::size_t i = 1; i + 1 < g.nspace(); ++i) m = std::max(m, std::abs(f(i, k) - ref(i, k)));
  return m;
}

}  // namespace

TEST(Grid, ReferenceArithmetic) {
  const auto g = cl::build_grid(unit(), 101, 0.9);
  EXPECT_NEAR(g.hx, 0.01, 1e-15);
  EXPECT_LE(g.tau, 0.009 * (1 + 1e-12));
  EXPECT_EQ(g.nt - 1, 167u);
  EXPECT_DOUBLE_EQ(g.time(g.nt - 1), 1.5);
  EXPECT_LE(g.cfl(), 0.9 + 1e-12);
}

TEST(Grid, RejectsBadInputs) {
  EXPECT_THROW(cl::build_grid(unit(), 2, 0.9), cl::Error);
  const auto sq = cl::DomainSpec::rectangle({0, 0}, {1, 1}, {-0.1, -0.1}, 2.0);
  try {
    (void)cl::build_grid(sq, 11, 11, 1.2);
    FAIL();
  } catch (const cl::Error& e) {
    EXPECT_EQ(e.where(), "grid.cfl");
  }
}

TEST(FiniteDifferences, QuadraticExactness) {
  const auto g = cl::build_grid(unit(), 21, 0.9);
  const auto f = cl::Field::sample(g, [](const cl::Point&, double t) { return t * t; });
  for (double v : cl::dtt(f).values()) EXPECT_NEAR(v, 2.0, 1e-9);
  const auto h = cl::Field::sample(g, [](const cl::Point& x, double) { return x[0] * x[0]; });
  const auto lap = cl::laplacian(h);
  for (std::size_t k = 0; k < g.nt; ++k)
    for (std::size_t i = 1; i + 1 < g.nspace(); ++i) EXPECT_NEAR(lap(i, k), 2.0, 1e-9);
}

TEST(FiniteDifferences, SecondOrderConvergence) {
  auto err = [](std::size_t nx) {
    const auto g = cl::build_grid(unit(), nx, 0.9);
    const auto f = cl::Field::sample(g, [](const cl::Point& x, double t) { return std::sin(pi * x[0]) * std::sin(pi * t); });
    cl::Field ref = f;
    ref *= -pi * pi;
    return max_interior(cl::dtt(f), ref);
  };
  const double ratio = err(41) / err(81);
  EXPECT_GT(ratio, 3.5);
  EXPECT_LT(ratio, 4.5);
}

TEST(FiniteDifferences, OneSidedEndpointsAreSecondOrder) {
  auto err = [](std::size_t nx) {
    const auto g = cl::build_grid(unit(), nx, 0.9);
    const auto f = cl::Field::sample(g, [](const cl::Point&, double t) { return std::exp(t); });
    const auto d = cl::dt(f);
    const auto d2 = cl::dtt(f);
    return std::max({std::abs(d(0, 0) - 1.0), std::abs(d2(0, 0) - 1.0), std::abs(d(0, g.nt - 1) - std::exp(1.5))});
  };
  EXPECT_GT(err(41) / err(81), 3.3);
}

TEST(Traces, LinearAndConstant) {
  const auto g = cl::build_grid(unit(), 11, 0.9);
  const auto part = cl::boundary_partition(g);
  const auto tr = cl::normal_derivative(cl::Field::sample(g, [](const cl::Point& x, double) { return x[0]; }), part);
  for (std::size_t k = 0; k < g.nt; ++k) {
    for (std::size_t b = 0; b < part.nodes.size(); ++b) {
      const double expected = part.nodes[b].side < 0 ? -1.0 : 1.0;
      EXPECT_NEAR(tr.at(b, k), expected, 1e-12);
    }
  }
  const auto tc = cl::normal_derivative(cl::Field(g, 3.0), part);
  for (double v : tc.values) EXPECT_EQ(v, 0.0);
}

TEST(Traces, SineTraceConverges) {
  auto err = [](std::size_t nx) {
    const auto g = cl::build_grid(unit(), nx, 0.9);
    const auto part = cl::boundary_partition(g);
    const auto tr = cl::normal_derivative(
        cl::Field::sample(g, [](const cl::Point& x, double t) { return std::sin(pi * x[0]) * std::cos(pi * t); }), part);
    double e = 0;
    for (std::size_t b = 0; b < part.nodes.size(); ++b) {
      if (part.nodes[b].side < 0) continue;
      for (std::size_t k = 0; k < g.nt; ++k) e = std::max(e, std::abs(tr.at(b, k) + pi * std::cos(pi * g.time(k))));
    }
    return e;
  };
  EXPECT_GT(err(41) / err(81), 3.5);
}

TEST(Quadrature, ExactCases) {
  const auto g = cl::build_grid(unit(), 11, 0.9);
  EXPECT_NEAR(cl::integrate_spacetime(cl::Field(g, 1.0)), 1.5, 1e-14);
  const auto lin = cl::Field::sample(g, [](const cl::Point& x, double) { return x[0]; });
  for (std::size_t k = 0; k < g.nt; ++k) EXPECT_NEAR(cl::integrate_space_at(lin, k), 0.5, 1e-15);
}

TEST(Quadrature, SpacetimeConvergence) {
  const double exact = (2 / pi) * (1 - std::cos(pi * 1.5)) / pi;
  auto err = [&](std::size_t nx) {
    const auto g = cl::build_grid(unit(), nx, 0.9);
    return std::abs(cl::integrate_spacetime(cl::Field::sample(
                        g, [](const cl::Point& x, double t) { return std::sin(pi * x[0]) * std::sin(pi * t); })) -
                    exact);
  };
  EXPECT_LT(err(41), 2e-3);
  EXPECT_GT(err(41) / err(81), 3.5);
}

TEST(Quadrature, RectangleBoundaryLength) {
  const auto g = cl::build_grid(cl::DomainSpec::rectangle({0, 0}, {1, 0.5}, {-0.1, -0.1}, 2.0), 11, 0.5);
  const auto part = cl::boundary_partition(g);
  double perimeter = 0;
  for (const auto& n : part.nodes) perimeter += n.weight;
  EXPECT_NEAR(perimeter, 3.0, 1e-12);
}
