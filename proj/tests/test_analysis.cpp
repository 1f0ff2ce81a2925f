#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "tcdp/analysis.hpp"

using namespace tcdp;

TEST(CertaintyEquivalent, InvertsCrraUtility) {
  for (double gamma : {0.5, 2.0, 3.0, 5.0}) {
    const double W = 1.37;
    const double v = std::pow(W, 1 - gamma) / (1 - gamma);
    EXPECT_NEAR(certainty_equivalent(v, gamma), W, 1e-13);
  }
  EXPECT_NEAR(certainty_equivalent(std::log(1.2), 1.0), 1.2, 1e-15);
  EXPECT_THROW(certainty_equivalent(0.5, 3.0), std::domain_error);
}

TEST(SurfaceDistance, IdentitySymmetryAndOrdering) {
  std::vector<double> c(basis_count(4, 2));
  std::mt19937_64 rng(2);
  std::normal_distribution<double> N;
  for (auto& e : c) e = N(rng);
  ChebyshevSurface a(HyperRectangle::unit_cube(2), 4, c);
  c[3] += 0.1;
  c[7] -= 0.05;
  ChebyshevSurface b(HyperRectangle::unit_cube(2), 4, c);
  const auto z = surface_distance(a, a);
  EXPECT_EQ(z.l1, 0.0);
  EXPECT_EQ(z.linf, 0.0);
  const auto ab = surface_distance(a, b, 500, 9);
  const auto ba = surface_distance(b, a, 500, 9);
  EXPECT_EQ(ab.l1, ba.l1);
  EXPECT_EQ(ab.linf, ba.linf);
  EXPECT_LE(ab.l1, ab.linf);
  EXPECT_GT(ab.l1, 0.0);
  EXPECT_EQ(ab.seed, 9u);
  EXPECT_EQ(ab.probes, 500u);
  ChebyshevSurface other(HyperRectangle{{0, 0}, {1, 2}}, 4, c);
  EXPECT_THROW(surface_distance(a, other), std::invalid_argument);
}

TEST(UniformProbes, ReproducibleAndInside) {
  HyperRectangle d{{0, -1, 2}, {1, 1, 3}};
  const auto p = uniform_probes(d, 100, 42);
  EXPECT_EQ(p, uniform_probes(d, 100, 42));
  EXPECT_NE(p, uniform_probes(d, 100, 43));
  for (const auto& x : p) EXPECT_TRUE(d.contains(x));
}

TEST(PolicyError, ZeroForPolynomialPolicy) {
  // Controls that are themselves low-degree polynomials are fitted exactly.
  const TensorNodeGrid grid(5, HyperRectangle::unit_cube(2));
  PointSolver solver = [](std::span<const double> x) {
    Decision d;
    d.buy = {0.1 * x[0] * x[1], 0.0};
    d.sell = {0.0, 0.2 - 0.1 * x[1]};
    d.post = {x[0], x[1]};
    return d;
  };
  std::vector<Decision> nodes;
  for (std::size_t i = 0; i < grid.size(); ++i) nodes.push_back(solver(grid.point(i)));
  const auto rep = policy_approx_error(nodes, grid, 4, solver, 200, 3);
  EXPECT_LT(rep.linf, 1e-13);
  EXPECT_LE(rep.l1, rep.linf);
  EXPECT_EQ(rep.samples, 200u);
}

TEST(PolicyError, DetectsKinkedPolicy) {
  const TensorNodeGrid grid(9, HyperRectangle::unit_cube(2));
  PointSolver solver = [](std::span<const double> x) {
    Decision d;
    d.buy = {std::max(0.3 - x[0], 0.0), 0.0};
    d.sell = {0.0, 0.0};
    d.post = {x[0], x[1]};
    return d;
  };
  std::vector<Decision> nodes;
  for (std::size_t i = 0; i < grid.size(); ++i) nodes.push_back(solver(grid.point(i)));
  const auto a = policy_approx_error(nodes, grid, 8, solver, 300, 1, true);
  const auto b = policy_approx_error(nodes, grid, 8, solver, 300, 1, false);
  EXPECT_GT(a.linf, 1e-3);
  EXPECT_LE(a.l1, a.linf);
  EXPECT_EQ(a.l1, b.l1);
  EXPECT_EQ(a.linf, b.linf);
  const auto box = policy_approx_error(nodes, grid, 8, solver, 300, 1, true, ProbeRegion::Box);
  EXPECT_GT(box.linf, 1e-3);
}

TEST(PolicyError, BudgetRegionNeedsUnitDomain) {
  const TensorNodeGrid grid(3, HyperRectangle{{0.0, 0.0}, {0.5, 1.0}});
  PointSolver solver = [](std::span<const double> x) {
    Decision d;
    d.buy = {0.0};
    d.sell = {0.0};
    d.post = {x[0], x[1]};
    return d;
  };
  std::vector<Decision> nodes(grid.size(), solver(grid.point(0)));
  EXPECT_THROW(policy_approx_error(nodes, grid, 2, solver, 100), std::invalid_argument);
  EXPECT_NO_THROW(policy_approx_error(nodes, grid, 2, solver, 100, 1, true, ProbeRegion::Box));
}

TEST(Probes, BudgetSimplexIsUniform) {
  const auto p = budget_probes(3, 20000, 5);
  EXPECT_EQ(p, budget_probes(3, 20000, 5));
  double mean = 0.0;
  for (const auto& x : p) {
    double s = 0.0;
    for (double v : x) {
      EXPECT_GE(v, 0.0);
      s += v;
    }
    EXPECT_LE(s, 1.0 + 1e-15);
    mean += x[0];
  }
  // Uniform on the 3-simplex: E[x_1] = 1/4, and P(sum <= 1/2) = 1/8.
  EXPECT_NEAR(mean / p.size(), 0.25, 0.01);
  const auto inner = std::count_if(p.begin(), p.end(), [](const auto& x) { return x[0] + x[1] + x[2] <= 0.5; });
  EXPECT_NEAR(static_cast<double>(inner) / p.size(), 0.125, 0.01);
}
