#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <future>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/SVD>

#include "gnep/equilibrium.hpp"

namespace gnep {

/// One-parameter path α ↦ A(α) through factor space together with its
/// derivative dA/dα (per-player diagonals).
struct FactorFamily {
  std::function<FactorAssignment(double)> at;
  std::function<std::vector<VectorXd>(double)> derivative;
  double lower = 0.0;  // open admissible interval
  double upper = 1.0;

  bool contains(double alpha) const { return alpha > lower && alpha < upper; }
};

/// Player p gets α, every other player (1 − α)/(M − 1).
inline FactorFamily sum_to_one_family(int num_players, int num_shared, int player = 0) {
  if (num_players < 2) throw Error(ErrorCode::kDomain, "sum-to-one family needs two players");
  if (player < 0 || player >= num_players) throw Error(ErrorCode::kIndexOutOfRange, "player index");
  const double others = 1.0 / (num_players - 1);
  FactorFamily f;
  f.at = [=](double a) {
    std::vector<VectorXd> d(static_cast<std::size_t>(num_players), VectorXd::Constant(num_shared, (1.0 - a) * others));
    d[static_cast<std::size_t>(player)].setConstant(a);
    return FactorAssignment(std::move(d), FactorRule::kSumToOne);
  };
  f.derivative = [=](double) {
    std::vector<VectorXd> d(static_cast<std::size_t>(num_players), VectorXd::Constant(num_shared, -others));
    d[static_cast<std::size_t>(player)].setConstant(1.0);
    return d;
  };
  return f;
}

/// A_1 = I, A_p = αI, all other players I.
inline FactorFamily first_identity_family(int num_players, int num_shared, int player = 1) {
  if (player < 1 || player >= num_players) throw Error(ErrorCode::kIndexOutOfRange, "player index");
  FactorFamily f;
  f.upper = std::numeric_limits<double>::infinity();
  f.at = [=](double a) {
    std::vector<VectorXd> d(static_cast<std::size_t>(num_players), VectorXd::Ones(num_shared));
    d[static_cast<std::size_t>(player)].setConstant(a);
    return FactorAssignment(std::move(d), FactorRule::kFirstPlayerIdentity);
  };
  f.derivative = [=](double) {
    std::vector<VectorXd> d(static_cast<std::size_t>(num_players), VectorXd::Zero(num_shared));
    d[static_cast<std::size_t>(player)].setOnes();
    return d;
  };
  return f;
}

/// A_p = αI, A_q = (1 − α)I, all other players `rest`·I.
inline FactorFamily pair_family(int num_players, int num_shared, int p, int q, double rest = 1.0) {
  if (p < 0 || q < 0 || p >= num_players || q >= num_players || p == q)
    throw Error(ErrorCode::kIndexOutOfRange, "player index");
  FactorFamily f;
  f.at = [=](double a) {
    std::vector<VectorXd> d(static_cast<std::size_t>(num_players), VectorXd::Constant(num_shared, rest));
    d[static_cast<std::size_t>(p)].setConstant(a);
    d[static_cast<std::size_t>(q)].setConstant(1.0 - a);
    return FactorAssignment(std::move(d), FactorRule::kUnnormalized);
  };
  f.derivative = [=](double) {
    std::vector<VectorXd> d(static_cast<std::size_t>(num_players), VectorXd::Zero(num_shared));
    d[static_cast<std::size_t>(p)].setOnes();
    d[static_cast<std::size_t>(q)].setConstant(-1.0);
    return d;
  };
  return f;
}

// ---------------------------------------------------------------------------
// Sweeps

struct SweepEntry {
  double alpha = 0.0;
  GNESolution solution;
  std::vector<double> costs;
  SolveStatus status = SolveStatus::kMaxIters;
  bool jump = false;  // x moved by more than the jump tolerance since the previous converged entry
  std::optional<GNESolution> cold;  // cold-start solve recorded after a jump, if it found another basin
};

struct SweepResult {
  std::vector<SweepEntry> entries;
  std::vector<std::size_t> jumps;
};

struct SweepOptions {
  SolverOptions solver;
  double jump_factor = 0.1;  // jump_tol = jump_factor · max(1, ‖x‖∞)
  bool warm_start = true;
  bool parallel = false;  // cold starts only
  std::optional<VectorXd> initial;
};

inline SweepResult sweep(const GameSpec& game, const FactorFamily& family, const std::vector<double>& grid,
                         const SweepOptions& opt = {}) {
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (!family.contains(grid[k]))
      throw Error(ErrorCode::kDomain, "grid point " + std::to_string(grid[k]) + " outside the admissible set");
    if (k > 0 && !(grid[k] > grid[k - 1])) throw Error(ErrorCode::kDomain, "grid must be strictly increasing");
  }
  SweepResult out;
  out.entries.resize(grid.size());
  auto fill = [&](std::size_t k, const std::optional<VectorXd>& start) {
    SweepEntry& e = out.entries[k];
    e.alpha = grid[k];
    e.solution = solve_equilibrium(game, family.at(grid[k]), opt.solver, start);
    e.costs = e.solution.costs;
    e.status = e.solution.status;
  };

  if (opt.parallel) {
    std::vector<std::future<void>> jobs;
    for (std::size_t k = 0; k < grid.size(); ++k)
      jobs.push_back(std::async(std::launch::async, [&, k] { fill(k, opt.initial); }));
    for (auto& j : jobs) j.get();
  } else {
    std::optional<VectorXd> start = opt.initial;
    for (std::size_t k = 0; k < grid.size(); ++k) {
      fill(k, opt.warm_start ? start : opt.initial);
      if (out.entries[k].solution.converged()) start = out.entries[k].solution.z;
    }
  }

  const SweepEntry* prev = nullptr;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    SweepEntry& e = out.entries[k];
    if (!e.solution.converged()) continue;
    if (prev != nullptr) {
      const double scale = std::max(1.0, e.solution.x.lpNorm<Eigen::Infinity>());
      if ((e.solution.x - prev->solution.x).lpNorm<Eigen::Infinity>() > opt.jump_factor * scale) {
        e.jump = true;
        out.jumps.push_back(k);
        if (!opt.parallel) {
          GNESolution c = solve_equilibrium(game, family.at(e.alpha), opt.solver);
          if (c.converged() && (c.x - e.solution.x).lpNorm<Eigen::Infinity>() > 1e-6) e.cold = std::move(c);
        }
      }
    }
    prev = &e;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Sensitivity

struct SensitivityReport {
  VectorXd dx;                  // dx/dα
  VectorXd dsigma;              // dσ/dα, zero on inactive shared constraints
  std::vector<double> dcost;    // dJ_i/dα along the family
  std::vector<double> own_dcost;  // dJ_i/dα_i with only A_i moving
  std::vector<int> active;      // active shared constraints
  double condition = 0.0;       // 2-norm condition number of the bordered matrix
  bool h_positive_definite = false;
  bool hypothesis_violation = false;  // separability or block-diagonal quadratic shared constraints fail
  std::vector<std::string> notes;
};

namespace detail {

inline bool shared_is_block_quadratic(const GameSpec& game) {
  for (const auto& s : game.shared()) {
    const QuadraticData* q = s.quadratic();
    if (q == nullptr) return false;
    const auto& sup = s.support();
    for (std::size_t r = 0; r < sup.size(); ++r)
      for (std::size_t c = 0; c < sup.size(); ++c)
        if (game.owner(sup[r]) != game.owner(sup[c]) &&
            q->Q(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) != 0.0)
          return false;
  }
  return true;
}

}  // namespace detail

/// Differentiates the equilibrium along dA (one diagonal per player) by
/// solving the KKT Jacobian restricted to the active set.
inline SensitivityReport sensitivity(const GameSpec& game, const FactorAssignment& factors,
                                     const GNESolution& solution, const std::vector<VectorXd>& dA,
                                     double active_tol = 1e-7) {
  if (!solution.converged()) throw Error(ErrorCode::kDomain, "sensitivity needs a converged solution");
  if (static_cast<int>(dA.size()) != game.num_players())
    throw Error(ErrorCode::kDimensionMismatch, "direction needs one diagonal per player");
  const MCPInstance inst = assemble_scaled(game, factors);
  const VariableLayout& L = inst.layout;
  const int n = game.dim();

  SensitivityReport rep;
  rep.active = active_shared(game, solution.x, solution.sigma, active_tol);

  std::vector<int> keep;
  for (int j = 0; j < n; ++j) keep.push_back(j);
  for (const auto& b : L.mu)
    for (int k = 0; k < b.size; ++k) keep.push_back(b.offset + k);
  for (int i = 0; i < game.num_players(); ++i) {
    const auto& p = game.player(i);
    for (std::size_t e = 0; e < p.ineq_constraints.size(); ++e) {
      const int idx = L.lambda[static_cast<std::size_t>(i)].offset + static_cast<int>(e);
      if (std::abs(p.ineq_constraints[e](solution.x)) <= active_tol && solution.z[idx] >= active_tol)
        keep.push_back(idx);
    }
  }
  for (int j : rep.active) keep.push_back(L.sigma[0].offset + j);

  const MatrixXd J = inst.dense_jacobian(solution.z);
  const auto m = static_cast<Eigen::Index>(keep.size());
  MatrixXd K(m, m);
  for (Eigen::Index r = 0; r < m; ++r)
    for (Eigen::Index c = 0; c < m; ++c) K(r, c) = J(keep[static_cast<std::size_t>(r)], keep[static_cast<std::size_t>(c)]);

  const Eigen::JacobiSVD<MatrixXd> svd(K, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  rep.condition = sv.size() == 0 ? 1.0 : (sv[sv.size() - 1] > 0.0 ? sv[0] / sv[sv.size() - 1] : std::numeric_limits<double>::infinity());
  if (!(rep.condition < 1e12))
    throw Error(ErrorCode::kBorderedSingular, "bordered matrix is rank-deficient (condition " + std::to_string(rep.condition) + ")");

  std::vector<VectorXd> sgrad;
  for (const auto& s : game.shared()) sgrad.push_back(s.gradient(solution.x));

  // Right-hand side −∂F/∂α: only stationarity rows depend on the factors.
  auto solve_for = [&](const std::vector<VectorXd>& dir) {
    VectorXd rhs = VectorXd::Zero(m);
    for (int j = 0; j < game.num_shared(); ++j)
      for (int v = 0; v < n; ++v)
        rhs[v] -= dir[static_cast<std::size_t>(game.owner(v))][j] * solution.sigma[j] * sgrad[static_cast<std::size_t>(j)][v];
    VectorXd full = VectorXd::Zero(L.dim);
    const VectorXd sol = svd.solve(rhs);
    for (Eigen::Index r = 0; r < m; ++r) full[keep[static_cast<std::size_t>(r)]] = sol[r];
    return full;
  };
  auto cost_rates = [&](const VectorXd& dx) {
    std::vector<double> out;
    for (const auto& p : game.players()) out.push_back(p.cost.gradient(solution.x).dot(dx));
    return out;
  };

  const VectorXd d = solve_for(dA);
  rep.dx = d.head(n);
  rep.dsigma = d.segment(L.sigma[0].offset, game.num_shared());
  rep.dcost = cost_rates(rep.dx);
  for (int i = 0; i < game.num_players(); ++i) {
    std::vector<VectorXd> own(static_cast<std::size_t>(game.num_players()), VectorXd::Zero(game.num_shared()));
    own[static_cast<std::size_t>(i)].setOnes();
    rep.own_dcost.push_back(cost_rates(solve_for(own).head(n))[static_cast<std::size_t>(i)]);
  }

  const MatrixXd H = J.topLeftCorner(n, n);
  rep.h_positive_definite = Eigen::LLT<MatrixXd>(0.5 * (H + H.transpose())).info() == Eigen::Success;
  for (int i = 0; i < game.num_players(); ++i)
    if (!game.cost_is_separable(i)) {
      rep.hypothesis_violation = true;
      rep.notes.push_back("cost of " + game.player(i).name + " is not separable");
    }
  if (!detail::shared_is_block_quadratic(game)) {
    rep.hypothesis_violation = true;
    rep.notes.push_back("shared constraints are not block-diagonal quadratic");
  }
  return rep;
}

inline SensitivityReport sensitivity(const GameSpec& game, const FactorFamily& family, double alpha,
                                     const GNESolution& solution) {
  return sensitivity(game, family.at(alpha), solution, family.derivative(alpha));
}

// ---------------------------------------------------------------------------
// Monotonicity of a player's cost in its own factor

struct MonotonicityReport {
  bool monotone = true;
  int checked = 0;
  /// Consecutive own-factor values (a, b), a < b, with J(b) < J(a) − slack.
  std::vector<std::pair<double, double>> violations;
};

inline MonotonicityReport verify_monotonicity(const SweepResult& sweep_result, const FactorFamily& family,
                                              int player, double slack = 1e-8) {
  std::vector<std::pair<double, double>> pts;  // (own factor, J)
  for (const auto& e : sweep_result.entries) {
    if (!e.solution.converged()) continue;
    const VectorXd d = family.at(e.alpha).diagonal(player);
    pts.emplace_back(d.mean(), e.costs.at(static_cast<std::size_t>(player)));
  }
  std::sort(pts.begin(), pts.end());
  MonotonicityReport rep;
  rep.checked = static_cast<int>(pts.size());
  for (std::size_t k = 1; k < pts.size(); ++k)
    if (pts[k].second < pts[k - 1].second - slack) rep.violations.emplace_back(pts[k - 1].first, pts[k].first);
  rep.monotone = rep.violations.empty();
  return rep;
}

inline MonotonicityReport verify_monotonicity(const GameSpec& game, const FactorFamily& family,
                                              const std::vector<double>& grid, int player,
                                              const SweepOptions& opt = {}) {
  if (player < 0 || player >= game.num_players()) throw Error(ErrorCode::kIndexOutOfRange, "player index");
  return verify_monotonicity(sweep(game, family, grid, opt), family, player);
}

}  // namespace gnep
