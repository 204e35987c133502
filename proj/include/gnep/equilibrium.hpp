#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "gnep/game.hpp"
#include "gnep/kkt.hpp"
#include "gnep/solver.hpp"

namespace gnep {

/// Equilibrium candidate with every multiplier family and its diagnostics.
struct GNESolution {
  VectorXd x;
  std::vector<VectorXd> mu;
  std::vector<VectorXd> lambda;
  VectorXd sigma;                         // fictitious shared multiplier
  std::vector<VectorXd> sigma_effective;  // A_i σ
  KKTResidual residual;                   // scaled system
  KKTResidual unscaled_residual;          // original system with σ_i = A_i σ
  std::vector<double> costs;
  SolveStatus status = SolveStatus::kMaxIters;
  int iterations = 0;
  double fb_residual = 0.0;
  VectorXd z;

  bool converged() const { return status == SolveStatus::kConverged; }
};

/// Interprets a scaled-assembly vector z as an equilibrium candidate.
inline GNESolution make_solution(const GameSpec& game, const FactorAssignment& factors,
                                 const VariableLayout& layout, const VectorXd& z) {
  GNESolution s;
  KktPoint p = unpack(layout, z);
  s.x = p.x;
  s.mu = std::move(p.mu);
  s.lambda = std::move(p.lambda);
  s.sigma = p.sigma.front();
  for (const auto& d : factors.diagonals()) s.sigma_effective.push_back(d.cwiseProduct(s.sigma));
  s.residual = kkt_residual(game, factors, z);
  s.unscaled_residual = unscaled_kkt_residual(game, s.x, s.mu, s.lambda, s.sigma_effective);
  s.costs = game.costs(s.x);
  s.z = z;
  return s;
}

inline GNESolution make_solution(const GameSpec& game, const FactorAssignment& factors,
                                 const VariableLayout& layout, const SolveReport& r) {
  GNESolution s = make_solution(game, factors, layout, r.z);
  s.status = r.status;
  s.iterations = r.iterations;
  s.fb_residual = r.fb_residual;
  return s;
}

/// Deterministic seed points: the default start plus `count - 1` random
/// perturbations of x (scale `spread`) with multipliers drawn in [0, 1].
inline std::vector<VectorXd> random_seeds(const MCPInstance& inst, int count, std::uint64_t seed,
                                          double spread = 10.0) {
  std::vector<VectorXd> out;
  out.push_back(default_initial_point(inst));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  int n = 0;
  for (const auto& b : inst.layout.x) n += b.size;
  for (int k = 1; k < count; ++k) {
    VectorXd z = default_initial_point(inst);
    for (int j = 0; j < inst.dim; ++j) {
      if (j < n)
        z[j] = spread * unif(rng);
      else if (std::isfinite(inst.lower[j]))
        z[j] = inst.lower[j] + 0.5 * (1.0 + unif(rng));
      else
        z[j] = unif(rng);
    }
    out.push_back(z);
  }
  return out;
}

/// Solves the scaled KKT system of `game` under `factors`.
inline GNESolution solve_equilibrium(const GameSpec& game, const FactorAssignment& factors,
                                     const SolverOptions& opt = {},
                                     const std::optional<VectorXd>& initial = std::nullopt) {
  const MCPInstance inst = assemble_scaled(game, factors);
  const SolveReport r = solve(inst, opt, initial);
  return make_solution(game, factors, inst.layout, r);
}

struct EquilibriumSet {
  GNESolution best;
  std::vector<GNESolution> distinct;
  int converged = 0;
};

/// Multistart search for possibly several equilibria under one factor
/// assignment.
inline EquilibriumSet find_equilibria(const GameSpec& game, const FactorAssignment& factors,
                                      const SolverOptions& opt, std::span<const VectorXd> seeds,
                                      bool parallel = false) {
  const MCPInstance inst = assemble_scaled(game, factors);
  const MultistartReport m = multistart_solve(inst, opt, seeds, parallel);
  EquilibriumSet out;
  out.best = make_solution(game, factors, inst.layout, m.best);
  for (const auto& r : m.distinct) out.distinct.push_back(make_solution(game, factors, inst.layout, r));
  out.converged = m.converged;
  return out;
}

}  // namespace gnep
