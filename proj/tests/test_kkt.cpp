#include <random>

#include <gtest/gtest.h>

#include "gnep/kkt.hpp"
#include "gnep/reference_games.hpp"

namespace gnep {
namespace {

VectorXd random_point(const MCPInstance& inst, std::mt19937& rng) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  VectorXd z(inst.dim);
  for (int j = 0; j < inst.dim; ++j) z[j] = std::isfinite(inst.lower[j]) ? std::abs(u(rng)) : u(rng);
  return z;
}

TEST(Assembly, Example1ScaledResidual) {
  const GameSpec g = reference::example1_game();
  const double a = 0.3;
  const std::vector<double> p{a, 1 - a};
  const MCPInstance inst = assemble_scaled(g, make_factors(2, 1, FactorRule::kUnnormalized, p));
  ASSERT_EQ(inst.dim, 3);
  const Eigen::Vector3d z(0.4, -1.2, 0.7);
  const VectorXd F = inst.F(z);
  EXPECT_NEAR(F[0], 2 * (0.4 - 1) + a * 0.7, 1e-14);
  EXPECT_NEAR(F[1], 2 * (-1.2 - 0.5) + (1 - a) * 0.7, 1e-14);
  EXPECT_NEAR(F[2], -(0.4 - 1.2 - 1), 1e-14);
  EXPECT_EQ(inst.lower[2], 0.0);
  EXPECT_TRUE(std::isinf(inst.upper[2]));
  EXPECT_TRUE(std::isinf(inst.lower[0]));
}

TEST(Assembly, HarkerLayoutPartitionsZ) {
  const GameSpec g = reference::harker_game();
  const MCPInstance inst = assemble_normalized(g);
  EXPECT_EQ(inst.dim, 7);
  const VariableLayout& L = inst.layout;
  EXPECT_EQ(L.x[1].offset, 1);
  EXPECT_EQ(L.mu[0].size + L.mu[1].size, 0);
  EXPECT_EQ(L.lambda[0].offset, 2);
  EXPECT_EQ(L.lambda[1].offset, 4);
  EXPECT_EQ(L.sigma[0].offset, 6);
  for (int j = 2; j < 7; ++j) EXPECT_EQ(inst.lower[j], 0.0);
}

TEST(Assembly, ThreeCarDimensions) {
  const GameSpec g = reference::three_car_game();
  EXPECT_EQ(assemble_normalized(g).dim, 10);
  EXPECT_EQ(assemble_full(g).dim, 12);
  EXPECT_EQ(assemble_full(reference::example1_game()).dim, 4);
}

TEST(Assembly, NoSharedConstraints) {
  std::vector<PlayerSpec> players(1);
  const std::map<std::string, int, std::less<>> v{{"x", 0}};
  players[0] = {"solo", 1, SmoothScalarFunction::from_polynomial(parse_polynomial("(x-2)^2", v)), {}, {}};
  const GameSpec g = build_game(std::move(players), {});
  const MCPInstance inst = assemble_normalized(g);
  EXPECT_EQ(inst.dim, 1);
  EXPECT_EQ(assemble_full(g).dim, 1);
  EXPECT_NEAR(inst.F(VectorXd::Constant(1, 2.0))[0], 0.0, 1e-15);
}

TEST(Assembly, NormalizedEqualsIdentityScaled) {
  for (const GameSpec& g : {reference::harker_game(), reference::three_car_game()}) {
    const MCPInstance a = assemble_normalized(g);
    const MCPInstance b = assemble_scaled(g, FactorAssignment::identity(g.num_players(), g.num_shared()));
    std::mt19937 rng(9);
    for (int k = 0; k < 10; ++k) {
      const VectorXd z = random_point(a, rng);
      EXPECT_EQ(a.F(z), b.F(z));
    }
  }
}

TEST(Assembly, SinglePlayerFullEqualsNormalized) {
  std::vector<PlayerSpec> players(1);
  const std::map<std::string, int, std::less<>> v{{"x", 0}, {"y", 1}};
  auto p = [&](const char* s) { return SmoothScalarFunction::from_polynomial(parse_polynomial(s, v)); };
  players[0] = {"solo", 2, p("x^2 + x*y + 2*y^2 - x"), {}, {p("x - 3")}};
  const GameSpec g = build_game(std::move(players), {p("x + y - 1")});
  const MCPInstance a = assemble_normalized(g), b = assemble_full(g);
  ASSERT_EQ(a.dim, b.dim);
  std::mt19937 rng(4);
  for (int k = 0; k < 10; ++k) {
    const VectorXd z = random_point(a, rng);
    EXPECT_TRUE(a.F(z).isApprox(b.F(z), 1e-14));
  }
}

TEST(Assembly, JacobianMatchesFiniteDifferences) {
  const std::vector<double> p{0.7, 1.9};
  const GameSpec games[] = {reference::harker_game(), reference::three_car_game()};
  for (const GameSpec& g : games) {
    const auto f = make_factors(g.num_players(), 1, FactorRule::kFirstPlayerIdentity,
                                std::span<const double>(p.data(), static_cast<std::size_t>(g.num_players() - 1)));
    for (const MCPInstance& inst : {assemble_scaled(g, f), assemble_full(g)}) {
      std::mt19937 rng(17);
      const VectorXd z = random_point(inst, rng);
      const MatrixXd J = inst.dense_jacobian(z);
      for (int j = 0; j < inst.dim; ++j) {
        VectorXd zp = z, zm = z;
        zp[j] += 1e-6;
        zm[j] -= 1e-6;
        const VectorXd col = (inst.F(zp) - inst.F(zm)) / 2e-6;
        EXPECT_TRUE(col.isApprox(J.col(j), 1e-6) || (col - J.col(j)).norm() < 1e-7) << "column " << j;
      }
    }
  }
}

TEST(Assembly, PackUnpackRoundTrip) {
  const MCPInstance inst = assemble_full(reference::harker_game());
  std::mt19937 rng(1);
  const VectorXd z = random_point(inst, rng);
  EXPECT_EQ(pack(inst.layout, unpack(inst.layout, z)), z);
  EXPECT_THROW(unpack(inst.layout, VectorXd::Zero(3)), Error);
}

TEST(Residual, Example1ExactPoint) {
  const GameSpec g = reference::example1_game();
  const auto f = FactorAssignment::identity(2, 1);
  const KKTResidual r = kkt_residual(g, f, Eigen::Vector3d(0.75, 0.25, 0.5));
  EXPECT_LE(r.overall, 1e-12);
  const KKTResidual o = kkt_residual(g, f, Eigen::Vector3d(0.0, 0.0, 0.0));
  EXPECT_DOUBLE_EQ(o.stationarity[0], 2.0);
  EXPECT_DOUBLE_EQ(o.stationarity[1], 1.0);
  EXPECT_DOUBLE_EQ(o.primal, 0.0);
}

TEST(Residual, ActiveSharedSet) {
  const GameSpec g = reference::example1_game();
  EXPECT_EQ(active_shared(g, Eigen::Vector2d(0.75, 0.25), VectorXd::Constant(1, 0.5)), std::vector<int>{0});
  EXPECT_TRUE(active_shared(g, Eigen::Vector2d(0.5, 0.25), VectorXd::Constant(1, 0.0)).empty());
}

}  // namespace
}  // namespace gnep
