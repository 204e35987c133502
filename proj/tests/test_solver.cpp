#include <random>

#include <gtest/gtest.h>

#include "gnep/equilibrium.hpp"
#include "gnep/reference_games.hpp"

namespace gnep {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

TEST(FischerBurmeister, Examples) {
  EXPECT_DOUBLE_EQ(fb_compose(0.0, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(fb_compose(3.0, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(fb_compose(0.0, 2.0), 0.0);
  EXPECT_NEAR(fb_compose(3.0, 4.0), 2.0, 1e-15);
  EXPECT_NEAR(fb_compose(-1.0, 0.0), -2.0, 1e-15);
}

// Box-constrained LCP F(z) = Mz + q solved by enumerating every
// lower / upper / interior pattern.
std::optional<VectorXd> brute_force(const MatrixXd& M, const VectorXd& q, const VectorXd& l, const VectorXd& u) {
  const int n = static_cast<int>(q.size());
  int patterns = 1;
  for (int j = 0; j < n; ++j) patterns *= 3;
  for (int code = 0; code < patterns; ++code) {
    std::vector<int> st(n);
    for (int j = 0, c = code; j < n; ++j, c /= 3) st[j] = c % 3;
    bool ok = true;
    for (int j = 0; j < n; ++j)
      if ((st[j] == 0 && !std::isfinite(l[j])) || (st[j] == 1 && !std::isfinite(u[j]))) ok = false;
    if (!ok) continue;
    MatrixXd A = MatrixXd::Zero(n, n);
    VectorXd b(n);
    for (int j = 0; j < n; ++j) {
      if (st[j] == 2) {
        A.row(j) = M.row(j);
        b[j] = -q[j];
      } else {
        A(j, j) = 1.0;
        b[j] = st[j] == 0 ? l[j] : u[j];
      }
    }
    const Eigen::FullPivLU<MatrixXd> lu(A);
    if (!lu.isInvertible()) continue;
    const VectorXd z = lu.solve(b);
    const VectorXd F = M * z + q;
    for (int j = 0; j < n && ok; ++j) {
      const double t = 1e-9;
      if (z[j] < l[j] - t || z[j] > u[j] + t) ok = false;
      if (st[j] == 0 && F[j] < -t) ok = false;
      if (st[j] == 1 && F[j] > t) ok = false;
    }
    if (ok) return z;
  }
  return std::nullopt;
}

TEST(Solver, MatchesBruteForceOnRandomBoxLcps) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  int solved = 0;
  for (int trial = 0; trial < 60; ++trial) {
    const int n = 5;
    MatrixXd B(n, n);
    for (auto& v : B.reshaped()) v = u(rng);
    const MatrixXd M = B * B.transpose() + 0.5 * MatrixXd::Identity(n, n);
    VectorXd q(n), l(n), up(n);
    for (int j = 0; j < n; ++j) {
      q[j] = 2.0 * u(rng);
      const int kind = (trial + j) % 4;  // free, lower, upper, two-sided
      l[j] = (kind == 1 || kind == 3) ? -0.3 : -kInf;
      up[j] = (kind == 2 || kind == 3) ? 0.4 : kInf;
    }
    if (trial % 7 == 0) l[0] = up[0] = 0.1;  // fixed coordinate
    const auto ref = brute_force(M, q, l, up);
    ASSERT_TRUE(ref.has_value());
    const MCPInstance inst = MCPInstance::generic(
        l, up, [M, q](const VectorXd& z, VectorXd& F) { F = M * z + q; },
        [M](const VectorXd&, std::vector<Triplet>& t) {
          for (int i = 0; i < M.rows(); ++i)
            for (int j = 0; j < M.cols(); ++j) t.emplace_back(i, j, M(i, j));
        });
    const SolveReport r = solve(inst);
    ASSERT_TRUE(r.converged()) << "trial " << trial;
    EXPECT_LE((r.z - *ref).lpNorm<Eigen::Infinity>(), 1e-7) << "trial " << trial;
    ++solved;
  }
  EXPECT_EQ(solved, 60);
}

TEST(Solver, Example1Normalized) {
  const GameSpec g = reference::example1_game();
  const GNESolution s = solve_equilibrium(g, FactorAssignment::identity(2, 1));
  ASSERT_TRUE(s.converged());
  EXPECT_NEAR(s.x[0], 0.75, 1e-8);
  EXPECT_NEAR(s.x[1], 0.25, 1e-8);
  EXPECT_NEAR(s.sigma[0], 0.5, 1e-8);
  EXPECT_LE(s.residual.overall, 1e-8);
}

TEST(Solver, HarkerIdentityFactors) {
  const GNESolution s = solve_equilibrium(reference::harker_game(), FactorAssignment::identity(2, 1));
  ASSERT_TRUE(s.converged());
  EXPECT_NEAR(s.x[0], 5.0, 1e-7);
  EXPECT_NEAR(s.x[1], 9.0, 1e-7);
}

TEST(Solver, ThreeCarNormalized) {
  const GNESolution s = solve_equilibrium(reference::three_car_game(), FactorAssignment::identity(3, 1));
  ASSERT_TRUE(s.converged());
  EXPECT_NEAR(s.x[2], 1.125, 1e-7);
  EXPECT_NEAR(s.x[4], 1.125, 1e-7);
  EXPECT_NEAR(s.sigma[0], 0.375, 1e-7);  // 0.75 / (A_2 + A_3)
}

TEST(Solver, FullAssemblyThreeCar) {
  const GameSpec g = reference::three_car_game();
  const MCPInstance inst = assemble_full(g);
  const SolveReport r = solve(inst);
  ASSERT_TRUE(r.converged());
  EXPECT_LE(r.natural_residual, 1e-7);
}

TEST(Solver, MultistartFindsBothHarkerEquilibria) {
  const GameSpec g = reference::harker_game();
  const std::vector<double> a{3.0};
  const auto f = make_factors(2, 1, FactorRule::kFirstPlayerIdentity, a);
  const MCPInstance inst = assemble_scaled(g, f);
  const auto seeds = random_seeds(inst, 30, 7);
  const EquilibriumSet set = find_equilibria(g, f, {}, seeds);
  bool interior = false, active = false;
  for (const auto& s : set.distinct) {
    if (std::abs(s.x[0] - 5.0) < 1e-6 && std::abs(s.x[1] - 9.0) < 1e-6) interior = true;
    if (std::abs(s.x[0] - 9.8) < 1e-6 && std::abs(s.x[1] - 5.2) < 1e-6) active = true;
  }
  EXPECT_TRUE(interior);
  EXPECT_TRUE(active);
}

TEST(Solver, ParallelMultistartIsDeterministic) {
  const GameSpec g = reference::harker_game();
  const MCPInstance inst = assemble_normalized(g);
  const auto seeds = random_seeds(inst, 8, 99);
  const MultistartReport a = multistart_solve(inst, {}, seeds, false);
  const MultistartReport b = multistart_solve(inst, {}, seeds, true);
  const MultistartReport c = multistart_solve(inst, {}, seeds, true);
  EXPECT_EQ(a.best.z, b.best.z);
  EXPECT_EQ(b.best.z, c.best.z);
  ASSERT_EQ(a.all.size(), b.all.size());
  for (std::size_t k = 0; k < a.all.size(); ++k) EXPECT_EQ(a.all[k].z, b.all[k].z);
}

TEST(Solver, MeritDecreasesWithinEachRestart) {
  const MCPInstance inst = assemble_normalized(reference::three_car_game());
  SolverOptions opt;
  const SolveReport r = solve(inst, opt, VectorXd::Constant(inst.dim, 3.0));
  ASSERT_TRUE(r.converged());
  for (std::size_t k = 1; k < r.merit_history.size(); ++k)
    if (r.merit_history[k].first == r.merit_history[k - 1].first) {
      EXPECT_LE(r.merit_history[k].second, r.merit_history[k - 1].second);
    }
}

TEST(Solver, ScaledSolutionSolvesOriginalGame) {
  const GameSpec g = reference::three_car_game();
  std::mt19937 rng(8);
  std::uniform_real_distribution<double> u(0.1, 3.0);
  for (int k = 0; k < 10; ++k) {
    const std::vector<double> p{u(rng), u(rng), u(rng)};
    const auto f = make_factors(3, 1, FactorRule::kUnnormalized, p);
    const GNESolution s = solve_equilibrium(g, f);
    ASSERT_TRUE(s.converged());
    EXPECT_LE(s.unscaled_residual.overall, 1e-7);
    for (int i = 1; i < 3; ++i)
      EXPECT_NEAR(s.sigma_effective[static_cast<std::size_t>(i)][0], p[static_cast<std::size_t>(i)] * s.sigma[0], 1e-14);
  }
}

TEST(Solver, RejectsBadOptions) {
  SolverOptions opt;
  opt.tol = 0.0;
  EXPECT_THROW(solve(assemble_normalized(reference::example1_game()), opt), Error);
}

}  // namespace
}  // namespace gnep
