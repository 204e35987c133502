#include <gtest/gtest.h>

#include "gnep/equilibrium.hpp"
#include "gnep/oracles.hpp"
#include "gnep/reference_games.hpp"

namespace gnep {
namespace {

FactorAssignment pair_factors(double a1, double a2) {
  const std::vector<double> p{a1, a2};
  return make_factors(2, 1, FactorRule::kUnnormalized, p);
}

TEST(Oracles, Example1Values) {
  const auto p = oracles::example1(0.5);
  EXPECT_DOUBLE_EQ(p.x, 0.75);
  EXPECT_DOUBLE_EQ(p.y, 0.25);
  EXPECT_THROW(oracles::example1(1.0), Error);
}

TEST(Oracles, ThreeCarValues) {
  const auto p = oracles::three_car(0.5);
  EXPECT_DOUBLE_EQ(p.x2, 1.125);
  EXPECT_DOUBLE_EQ(p.v3, 0.375);
  EXPECT_DOUBLE_EQ(oracles::three_car_alpha(2.0, 6.0), 0.25);
}

TEST(Oracles, HarkerBranches) {
  EXPECT_EQ(oracles::harker(1.0).size(), 1u);
  const auto c = oracles::harker(3.0);
  ASSERT_EQ(c.size(), 2u);
  EXPECT_NEAR(c[1].x1, 9.8, 1e-14);
  EXPECT_NEAR(c[1].x2, 5.2, 1e-14);
  EXPECT_NEAR(c[1].sigma, 8.0 / 15.0, 1e-14);
}

TEST(Oracles, Example1SatisfiesAssembledSystem) {
  const GameSpec g = reference::example1_game();
  for (double a : {0.1, 0.35, 0.5, 0.9}) {
    const auto p = oracles::example1(a);
    const Eigen::Vector3d z(p.x, p.y, p.sigma);
    EXPECT_LE(kkt_residual(g, pair_factors(a, 1 - a), z).overall, 1e-10);
  }
}

TEST(Oracles, ThreeCarSatisfiesAssembledSystem) {
  const GameSpec g = reference::three_car_game();
  const MCPInstance inst = assemble_normalized(g);
  for (double a : {0.2, 0.5, 0.8}) {
    const auto p = oracles::three_car(a);
    const std::vector<double> fac{1.7, a, 1 - a};
    const auto f = make_factors(3, 1, FactorRule::kUnnormalized, fac);
    KktPoint k;
    k.x = (VectorXd(6) << p.x1, p.v1, p.x2, p.v2, p.x3, p.v3).finished();
    k.mu = {VectorXd::Constant(1, p.mu1), VectorXd::Constant(1, p.mu2), VectorXd::Constant(1, p.mu3)};
    k.lambda = {VectorXd(0), VectorXd(0), VectorXd(0)};
    k.sigma = {VectorXd::Constant(1, p.sigma)};
    const VectorXd z = pack(inst.layout, k);
    EXPECT_LE(kkt_residual(g, f, z).overall, 1e-10) << a;
    const GNESolution s = solve_equilibrium(g, f, {}, z);
    ASSERT_TRUE(s.converged());
    EXPECT_LE(s.iterations, 3);
  }
}

TEST(Oracles, HarkerSatisfiesAssembledSystem) {
  const GameSpec g = reference::harker_game();
  for (double a : {1.0, 3.0, 10.0}) {
    for (const auto& c : oracles::harker(a)) {
      const GNESolution s = solve_equilibrium(g, pair_factors(1.0, a), {},
                                              (VectorXd(7) << c.x1, c.x2, 0, 0, 0, 0, c.sigma).finished());
      ASSERT_TRUE(s.converged());
      EXPECT_NEAR(s.x[0], c.x1, 1e-8);
      EXPECT_NEAR(s.x[1], c.x2, 1e-8);
      EXPECT_LE(s.iterations, 3);
    }
  }
}

}  // namespace
}  // namespace gnep
