#include <gtest/gtest.h>

#include "gnep/oracles.hpp"
#include "gnep/reference_games.hpp"
#include "gnep/selector.hpp"

namespace gnep {
namespace {

TEST(Objectives, SumOfCosts) {
  const GameSpec g = reference::example1_game();
  EXPECT_NEAR(objective_sum_of_costs(g)(Eigen::Vector2d(0.75, 0.25)), 0.125, 1e-15);
  const GameSpec t = reference::three_car_game();
  const auto o = oracles::three_car(0.5);
  const VectorXd x = (VectorXd(6) << o.x1, o.v1, o.x2, o.v2, o.x3, o.v3).finished();
  EXPECT_NEAR(objective_sum_of_costs(t)(x), o.cost1 + o.cost2 + o.cost3, 1e-14);
  // -x1 + x2 + (v1² + v2² + v3²)/2 at (1, 1.125, 1.125), v = (1, 0.625, 0.375)
  EXPECT_NEAR(objective_sum_of_costs(t)(x), -1 + 1.125 + (1 + 0.390625 + 0.140625) / 2, 1e-14);
}

TEST(Objectives, SinglePlayer) {
  const GameSpec g = reference::example1_game();
  EXPECT_NEAR(objective_single_player(g, 1)(Eigen::Vector2d(0.75, 0.25)), 0.0625, 1e-15);
  EXPECT_THROW(objective_single_player(g, 2), Error);
  EXPECT_THROW(objective_single_player(g, -1), Error);
}

TEST(Select, Example1SumOfCostsFindsDerivedArgmin) {
  const GameSpec g = reference::example1_game();
  const SelectionResult r = select(selection_problem(g, sum_to_one_family(2, 1), objective_sum_of_costs(g)));
  EXPECT_NEAR(r.params[0], 0.5, 1e-6);
  EXPECT_NEAR(r.j0, 0.125, 1e-10);
  EXPECT_FALSE(r.boundary);
  for (const auto& t : r.trace)
    if (t.ok()) {
      EXPECT_LE(r.j0, t.j0);
    }
}

TEST(Select, ThreeCarBoundaryOptimum) {
  const GameSpec g = reference::three_car_game();
  const SelectionResult r = select(selection_problem(g, pair_family(3, 1, 1, 2), objective_sum_of_costs(g)));
  EXPECT_TRUE(r.boundary);
  EXPECT_NEAR(r.params[0], 0.999, 1e-12);
  ASSERT_TRUE(r.limit.has_value());
  EXPECT_DOUBLE_EQ(r.limit->params[0], 1.0);
  EXPECT_NEAR(r.limit->x[0], 1.0, 1e-6);
  EXPECT_NEAR(r.limit->x[2], 0.75, 1e-6);
  EXPECT_NEAR(r.limit->x[4], 0.75, 1e-6);
}

TEST(Select, StackelbergLimitsOfExample1) {
  const GameSpec g = reference::example1_game();
  const SelectionResult p1 = select(selection_problem(g, sum_to_one_family(2, 1), objective_single_player(g, 0)));
  ASSERT_TRUE(p1.boundary && p1.limit);
  EXPECT_NEAR(p1.limit->x[0], 1.0, 1e-9);
  EXPECT_NEAR(p1.limit->x[1], 0.0, 1e-9);
  EXPECT_NEAR(p1.limit->j0, 0.0, 1e-9);
  const SelectionResult p2 = select(selection_problem(g, sum_to_one_family(2, 1), objective_single_player(g, 1)));
  ASSERT_TRUE(p2.boundary && p2.limit);
  EXPECT_NEAR(p2.limit->x[0], 0.5, 1e-9);
  EXPECT_NEAR(p2.limit->x[1], 0.5, 1e-9);
}

TEST(Select, FlatObjectiveTiesGoToSmallestParameter) {
  const GameSpec g = reference::example1_game();
  const SelectionResult r =
      select(selection_problem(g, sum_to_one_family(2, 1), [](const VectorXd&) { return 2.0; }));
  EXPECT_DOUBLE_EQ(r.params[0], 0.001);
}

TEST(Select, Reproducible) {
  const GameSpec g = reference::harker_game();
  SelectionOptions o;
  o.seeds = 30;
  o.grid_points = 11;
  o.refine_iterations = 20;
  auto p = selection_problem(g, first_identity_family(2, 1), objective_sum_of_costs(g), o);
  p.box_lower = VectorXd::Constant(1, 0.5);
  p.box_upper = VectorXd::Constant(1, 8.0);
  const SelectionResult a = select(p), b = select(p);
  EXPECT_EQ(a.params, b.params);
  EXPECT_EQ(a.trace.size(), b.trace.size());
  bool multi = false;
  for (const auto& t : a.trace) multi = multi || t.basins > 1;
  EXPECT_TRUE(multi);  // α > 21/8 has two equilibria
}

TEST(Select, UnboundedDomainNeedsBox) {
  const GameSpec g = reference::harker_game();
  EXPECT_THROW(select(selection_problem(g, first_identity_family(2, 1), objective_sum_of_costs(g))), Error);
}

TEST(Select, NelderMeadOnTwoParameters) {
  const GameSpec g = reference::example1_game();
  SelectionProblem p{g,
                     [](const VectorXd& a) {
                       const std::vector<double> v{a[0], a[1]};
                       return make_factors(2, 1, FactorRule::kUnnormalized, v);
                     },
                     VectorXd::Zero(2),
                     VectorXd::Constant(2, 3.0),
                     VectorXd::Constant(2, 0.1),
                     VectorXd::Constant(2, 2.0),
                     objective_sum_of_costs(g),
                     {}};
  p.options.grid_points = 6;
  const SelectionResult r = select(p);
  EXPECT_NEAR(r.j0, 0.125, 1e-9);
  EXPECT_NEAR(r.params[0] / (r.params[0] + r.params[1]), 0.5, 1e-4);
}

TEST(Select, AllInnerFailuresThrow) {
  const std::map<std::string, int, std::less<>> v{{"x", 0}, {"y", 1}};
  auto f = [&](const char* s) { return SmoothScalarFunction::from_polynomial(parse_polynomial(s, v)); };
  std::vector<PlayerSpec> players(2);
  players[0] = {"a", 1, f("x^2"), {}, {f("-x")}};
  players[1] = {"b", 1, f("y^2"), {}, {f("-y")}};
  const GameSpec g = build_game(std::move(players), {f("x + y + 1")});  // infeasible
  SelectionOptions o;
  o.grid_points = 3;
  o.solver.max_iters = 20;
  o.solver.restarts = 1;
  try {
    select(selection_problem(g, sum_to_one_family(2, 1), objective_sum_of_costs(g), o));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kAllInnerFailed);
  }
}

}  // namespace
}  // namespace gnep
