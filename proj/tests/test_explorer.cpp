#include <gtest/gtest.h>

#include "gnep/explorer.hpp"
#include "gnep/oracles.hpp"
#include "gnep/reference_games.hpp"

namespace gnep {
namespace {

std::vector<double> grid(double a, double b, int n) {
  std::vector<double> g;
  for (int k = 0; k < n; ++k) g.push_back(a + (b - a) * k / (n - 1));
  return g;
}

TEST(Sweep, Example1MatchesClosedForm) {
  const GameSpec g = reference::example1_game();
  const SweepResult r = sweep(g, sum_to_one_family(2, 1), grid(0.1, 0.9, 9));
  ASSERT_EQ(r.entries.size(), 9u);
  EXPECT_TRUE(r.jumps.empty());
  for (const auto& e : r.entries) {
    ASSERT_TRUE(e.solution.converged());
    const auto o = oracles::example1(e.alpha);
    EXPECT_NEAR(e.solution.x[0], o.x, 1e-6);
    EXPECT_NEAR(e.solution.x[1], o.y, 1e-6);
    EXPECT_NEAR(e.costs[0], o.cost1, 1e-9);
  }
}

TEST(Sweep, ThreeCarFamily) {
  const GameSpec g = reference::three_car_game();
  const SweepResult r = sweep(g, pair_family(3, 1, 1, 2, 0.4), grid(0.02, 0.98, 25));
  for (const auto& e : r.entries) {
    ASSERT_TRUE(e.solution.converged());
    EXPECT_NEAR(e.solution.x[2], 1.5 - 0.75 * e.alpha, 1e-7);
    EXPECT_NEAR(e.solution.x[4], e.solution.x[2], 1e-7);
  }
  EXPECT_NEAR(r.entries[12].solution.x[2], 1.125, 1e-7);  // α = 1/2
  EXPECT_NEAR(r.entries.back().solution.x[2], 0.75 + 0.75 * 0.02, 1e-7);
}

TEST(Sweep, HarkerActiveBranch) {
  const GameSpec g = reference::harker_game();
  SweepOptions opt;
  const auto start = oracles::harker(3.0).back();
  opt.initial = (VectorXd(7) << start.x1, start.x2, 0, 0, 0, 0, start.sigma).finished();
  const SweepResult r = sweep(g, first_identity_family(2, 1), grid(3.0, 12.0, 10), opt);
  for (const auto& e : r.entries) {
    ASSERT_TRUE(e.solution.converged());
    const auto c = oracles::harker(e.alpha).back();
    ASSERT_EQ(c.branch, oracles::OracleCaseId::kHarkerActive);
    EXPECT_NEAR(e.solution.x[0], c.x1, 1e-7);
    EXPECT_NEAR(e.solution.sigma[0], c.sigma, 1e-7);
  }
}

TEST(Sweep, RejectsGridOutsideDomain) {
  const GameSpec g = reference::example1_game();
  EXPECT_THROW(sweep(g, sum_to_one_family(2, 1), {0.5, 1.0}), Error);
  EXPECT_THROW(sweep(g, sum_to_one_family(2, 1), {0.5, 0.4}), Error);
}

TEST(Sweep, MarksJumpAcrossHarkerBranches) {
  const GameSpec g = reference::harker_game();
  SweepOptions opt;
  opt.initial = (VectorXd(7) << 9.8, 5.2, 0, 0, 0, 0, 8.0 / 15).finished();
  // Descending in α is not allowed, so walk upward from the active region
  // into a point where only the interior equilibrium is reachable by a
  // sudden jump: start on the active branch and restart each point cold.
  opt.warm_start = false;
  const SweepResult r = sweep(g, first_identity_family(2, 1), {1.0, 3.0}, opt);
  ASSERT_TRUE(r.entries[0].solution.converged());
  ASSERT_TRUE(r.entries[1].solution.converged());
  EXPECT_NEAR(r.entries[0].solution.x[0], 5.0, 1e-7);
  EXPECT_NEAR(r.entries[1].solution.x[0], 9.8, 1e-7);
  ASSERT_EQ(r.jumps, std::vector<std::size_t>{1});
  ASSERT_TRUE(r.entries[1].cold.has_value());
  EXPECT_NEAR(r.entries[1].cold->x[0], 5.0, 1e-6);
}

TEST(Sweep, ParallelMatchesSequentialColdStarts) {
  const GameSpec g = reference::example1_game();
  SweepOptions seq, par;
  seq.warm_start = false;
  par.parallel = true;
  const auto a = sweep(g, sum_to_one_family(2, 1), grid(0.1, 0.9, 5), seq);
  const auto b = sweep(g, sum_to_one_family(2, 1), grid(0.1, 0.9, 5), par);
  for (std::size_t k = 0; k < a.entries.size(); ++k) EXPECT_EQ(a.entries[k].solution.z, b.entries[k].solution.z);
}

TEST(Sensitivity, Example1ClosedFormDerivatives) {
  const GameSpec g = reference::example1_game();
  const FactorFamily fam = sum_to_one_family(2, 1);
  for (double a : {0.2, 0.5, 0.8}) {
    const GNESolution s = solve_equilibrium(g, fam.at(a));
    const SensitivityReport r = sensitivity(g, fam, a, s);
    EXPECT_NEAR(r.dx[0], -0.5, 1e-9);
    EXPECT_NEAR(r.dx[1], 0.5, 1e-9);
    EXPECT_NEAR(r.dsigma[0], 0.0, 1e-9);
    EXPECT_NEAR(r.dcost[0], a / 2, 1e-9);
    EXPECT_FALSE(r.hypothesis_violation);
    EXPECT_TRUE(r.h_positive_definite);
    for (double d : r.own_dcost) EXPECT_GE(d, -1e-10);
  }
}

TEST(Sensitivity, MatchesCentralDifferencesOfSweep) {
  const GameSpec g = reference::harker_game();
  const FactorFamily fam = first_identity_family(2, 1);
  SweepOptions opt;
  opt.initial = (VectorXd(7) << 9.8, 5.2, 0, 0, 0, 0, 8.0 / 15).finished();
  const double h = 1e-4;
  const std::vector<double> grid_pts{4.0 - h, 4.0, 4.0 + h};
  const SweepResult r = sweep(g, fam, grid_pts, opt);
  const SensitivityReport s = sensitivity(g, fam, 4.0, r.entries[1].solution);
  const VectorXd fd_x = (r.entries[2].solution.x - r.entries[0].solution.x) / (2 * h);
  const double fd_s = (r.entries[2].solution.sigma[0] - r.entries[0].solution.sigma[0]) / (2 * h);
  for (int j = 0; j < 2; ++j) EXPECT_NEAR(s.dx[j], fd_x[j], std::max(1e-6, 1e-3 * std::abs(fd_x[j])));
  EXPECT_NEAR(s.dsigma[0], fd_s, std::max(1e-6, 1e-3 * std::abs(fd_s)));
  // σ = 8/(8α − 9)
  EXPECT_NEAR(s.dsigma[0], -64.0 / std::pow(8 * 4.0 - 9, 2), 1e-9);
  EXPECT_TRUE(s.hypothesis_violation);  // Harker costs couple the players
}

TEST(Sensitivity, SymmetricGameHasStationaryMultiplier) {
  const std::map<std::string, int, std::less<>> v{{"x", 0}, {"y", 1}};
  auto p = [&](const char* s) { return SmoothScalarFunction::from_polynomial(parse_polynomial(s, v)); };
  std::vector<PlayerSpec> players(2);
  players[0] = {"a", 1, p("(x - 1)^2"), {}, {}};
  players[1] = {"b", 1, p("(y - 1)^2"), {}, {}};
  const GameSpec g = build_game(std::move(players), {p("x + y - 1")});
  const FactorFamily fam = sum_to_one_family(2, 1);
  const SensitivityReport r = sensitivity(g, fam, 0.5, solve_equilibrium(g, fam.at(0.5)));
  EXPECT_NEAR(r.dsigma[0], 0.0, 1e-12);
  EXPECT_NEAR(r.dx[0], -1.0, 1e-9);
}

TEST(Sensitivity, InactiveSharedConstraintGivesZeroDerivatives) {
  const GameSpec g = reference::harker_game();
  const FactorFamily fam = first_identity_family(2, 1);
  const SensitivityReport r = sensitivity(g, fam, 1.0, solve_equilibrium(g, fam.at(1.0)));
  EXPECT_TRUE(r.active.empty());
  EXPECT_NEAR(r.dx.norm(), 0.0, 1e-14);
}

TEST(Monotonicity, Example1BothPlayers) {
  const GameSpec g = reference::example1_game();
  const auto gr = grid(0.05, 0.95, 19);
  EXPECT_TRUE(verify_monotonicity(g, sum_to_one_family(2, 1), gr, 0).monotone);
  EXPECT_TRUE(verify_monotonicity(g, sum_to_one_family(2, 1), gr, 1).monotone);
  EXPECT_TRUE(verify_monotonicity(g, sum_to_one_family(2, 1), {0.5}, 0).monotone);
}

TEST(Monotonicity, ReportsViolations) {
  SweepResult fake;
  for (double a : {0.2, 0.4, 0.6}) {
    SweepEntry e;
    e.alpha = a;
    e.solution.status = SolveStatus::kConverged;
    e.costs = {a == 0.4 ? -1.0 : a, 0.0};
    fake.entries.push_back(e);
  }
  const auto rep = verify_monotonicity(fake, sum_to_one_family(2, 1), 0);
  EXPECT_FALSE(rep.monotone);
  ASSERT_EQ(rep.violations.size(), 1u);
  EXPECT_DOUBLE_EQ(rep.violations[0].first, 0.2);
}

}  // namespace
}  // namespace gnep
