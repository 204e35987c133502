#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "gnep/error.hpp"
#include "gnep/game.hpp"

namespace gnep {

using Triplet = Eigen::Triplet<double>;

/// Positions of the KKT unknowns inside the MCP vector
/// z = [x^1..x^M, μ_1..μ_M, λ_1..λ_M, σ block(s)].
struct VariableLayout {
  int dim = 0;
  std::vector<BlockRange> x;
  std::vector<BlockRange> mu;
  std::vector<BlockRange> lambda;
  /// One block for the scaled/normalized assembly, M blocks for the full one.
  std::vector<BlockRange> sigma;
};

/// A point of the KKT system, split by role.
struct KktPoint {
  VectorXd x;
  std::vector<VectorXd> mu;
  std::vector<VectorXd> lambda;
  std::vector<VectorXd> sigma;
};

inline VectorXd pack(const VariableLayout& layout, const KktPoint& p) {
  VectorXd z(layout.dim);
  auto put = [&](const std::vector<BlockRange>& blocks, const std::vector<VectorXd>& values) {
    if (blocks.size() != values.size())
      throw Error(ErrorCode::kDimensionMismatch, "block count mismatch while packing");
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      if (values[i].size() != blocks[i].size)
        throw Error(ErrorCode::kDimensionMismatch, "block size mismatch while packing");
      z.segment(blocks[i].offset, blocks[i].size) = values[i];
    }
  };
  int n = 0;
  for (const auto& b : layout.x) n += b.size;
  if (p.x.size() != n) throw Error(ErrorCode::kDimensionMismatch, "x has wrong length");
  z.head(n) = p.x;
  put(layout.mu, p.mu);
  put(layout.lambda, p.lambda);
  put(layout.sigma, p.sigma);
  return z;
}

inline KktPoint unpack(const VariableLayout& layout, const VectorXd& z) {
  if (z.size() != layout.dim) throw Error(ErrorCode::kDimensionMismatch, "z has wrong length");
  KktPoint p;
  int n = 0;
  for (const auto& b : layout.x) n += b.size;
  p.x = z.head(n);
  auto get = [&](const std::vector<BlockRange>& blocks, std::vector<VectorXd>& out) {
    for (const auto& b : blocks) out.push_back(z.segment(b.offset, b.size));
  };
  get(layout.mu, p.mu);
  get(layout.lambda, p.lambda);
  get(layout.sigma, p.sigma);
  return p;
}

/// Box-constrained mixed complementarity problem: find z in [l, u] with each
/// F_j(z) complementary to the bound z_j sits at.
struct MCPInstance {
  using ResidualFn = std::function<void(const VectorXd&, VectorXd&)>;
  using JacobianFn = std::function<void(const VectorXd&, std::vector<Triplet>&)>;

  int dim = 0;
  VectorXd lower;
  VectorXd upper;
  VariableLayout layout;
  ResidualFn residual;
  /// Appends Jacobian entries; duplicates are summed. The sparsity pattern
  /// (including explicit zeros) must not depend on z.
  JacobianFn jacobian;

  VectorXd F(const VectorXd& z) const {
    VectorXd out(dim);
    residual(z, out);
    return out;
  }

  Eigen::SparseMatrix<double> sparse_jacobian(const VectorXd& z) const {
    std::vector<Triplet> t;
    jacobian(z, t);
    Eigen::SparseMatrix<double> J(dim, dim);
    J.setFromTriplets(t.begin(), t.end());
    return J;
  }

  MatrixXd dense_jacobian(const VectorXd& z) const { return MatrixXd(sparse_jacobian(z)); }

  /// Generic instance without KKT structure; the layout is a single x block.
  static MCPInstance generic(VectorXd lower, VectorXd upper, ResidualFn F, JacobianFn J) {
    MCPInstance inst;
    inst.dim = static_cast<int>(lower.size());
    if (upper.size() != inst.dim) throw Error(ErrorCode::kDimensionMismatch, "bound sizes differ");
    if ((lower.array() > upper.array()).any())
      throw Error(ErrorCode::kDimensionMismatch, "lower bound exceeds upper bound");
    inst.lower = std::move(lower);
    inst.upper = std::move(upper);
    inst.layout.dim = inst.dim;
    inst.layout.x.push_back({0, inst.dim});
    inst.residual = std::move(F);
    inst.jacobian = std::move(J);
    return inst;
  }
};

namespace detail {

enum class SharedMode { kScaled, kFull };

struct AssemblyData {
  GameSpec game;
  std::vector<VectorXd> factors;  // per-player diagonals (scaled mode)
  SharedMode mode = SharedMode::kScaled;
  VariableLayout layout;
  std::vector<int> owner;  // player of each x coordinate
  std::vector<std::vector<bool>> linear_eq, linear_ineq;
  std::vector<bool> linear_shared;
};

inline bool is_linear(const SmoothScalarFunction& f) {
  const auto* q = f.quadratic();
  return q != nullptr && (q->Q.size() == 0 || q->Q.isZero(0.0));
}

inline VariableLayout make_layout(const GameSpec& game, SharedMode mode) {
  VariableLayout L;
  int pos = 0;
  for (int i = 0; i < game.num_players(); ++i) {
    L.x.push_back({pos, game.block(i).size});
    pos += game.block(i).size;
  }
  for (const auto& p : game.players()) {
    L.mu.push_back({pos, static_cast<int>(p.eq_constraints.size())});
    pos += static_cast<int>(p.eq_constraints.size());
  }
  for (const auto& p : game.players()) {
    L.lambda.push_back({pos, static_cast<int>(p.ineq_constraints.size())});
    pos += static_cast<int>(p.ineq_constraints.size());
  }
  const int copies = mode == SharedMode::kScaled ? 1 : game.num_players();
  for (int c = 0; c < copies; ++c) {
    L.sigma.push_back({pos, game.num_shared()});
    pos += game.num_shared();
  }
  L.dim = pos;
  return L;
}

/// Shared-multiplier weight of player i on constraint j.
inline double shared_weight(const AssemblyData& a, const VectorXd& z, int i, int j) {
  if (a.mode == SharedMode::kScaled)
    return a.factors[static_cast<std::size_t>(i)][j] * z[a.layout.sigma[0].offset + j];
  return z[a.layout.sigma[static_cast<std::size_t>(i)].offset + j];
}

inline void evaluate(const AssemblyData& a, const VectorXd& z, VectorXd& F) {
  const GameSpec& game = a.game;
  F.setZero(a.layout.dim);
  const VectorXd x = z.head(game.dim());
  for (int i = 0; i < game.num_players(); ++i) {
    const auto ii = static_cast<std::size_t>(i);
    const PlayerSpec& p = game.player(i);
    const BlockRange& b = game.block(i);
    {
      const auto& sup = p.cost.support();
      if (!sup.empty()) {
        const VectorXd g = p.cost.local_gradient(p.cost.gather(x));
        for (std::size_t k = 0; k < sup.size(); ++k)
          if (b.contains(sup[k])) F[sup[k]] += g[static_cast<Eigen::Index>(k)];
      }
    }
    for (std::size_t e = 0; e < p.eq_constraints.size(); ++e) {
      const auto& h = p.eq_constraints[e];
      const VectorXd y = h.gather(x);
      const int row = a.layout.mu[ii].offset + static_cast<int>(e);
      F[row] = h.local_value(y);
      const VectorXd g = h.local_gradient(y);
      for (std::size_t k = 0; k < h.support().size(); ++k)
        F[h.support()[k]] += z[row] * g[static_cast<Eigen::Index>(k)];
    }
    for (std::size_t e = 0; e < p.ineq_constraints.size(); ++e) {
      const auto& gf = p.ineq_constraints[e];
      const VectorXd y = gf.gather(x);
      const int row = a.layout.lambda[ii].offset + static_cast<int>(e);
      F[row] = -gf.local_value(y);
      const VectorXd g = gf.local_gradient(y);
      for (std::size_t k = 0; k < gf.support().size(); ++k)
        F[gf.support()[k]] += z[row] * g[static_cast<Eigen::Index>(k)];
    }
  }
  for (int j = 0; j < game.num_shared(); ++j) {
    const auto& s = game.shared()[static_cast<std::size_t>(j)];
    const VectorXd y = s.gather(x);
    const double sv = s.local_value(y);
    for (const auto& blk : a.layout.sigma) F[blk.offset + j] = -sv;
    const VectorXd g = s.local_gradient(y);
    for (std::size_t k = 0; k < s.support().size(); ++k) {
      const int v = s.support()[k];
      F[v] += shared_weight(a, z, a.owner[static_cast<std::size_t>(v)], j) * g[static_cast<Eigen::Index>(k)];
    }
  }
}

inline void jacobian(const AssemblyData& a, const VectorXd& z, std::vector<Triplet>& out) {
  const GameSpec& game = a.game;
  const VectorXd x = z.head(game.dim());
  out.reserve(out.size() + static_cast<std::size_t>(a.layout.dim) * 8);
  for (int r = 0; r < a.layout.dim; ++r) out.emplace_back(r, r, 0.0);

  auto add_hessian = [&](const SmoothScalarFunction& f, const VectorXd& y, auto weight_of_row) {
    const MatrixXd H = f.local_hessian(y);
    const auto& sup = f.support();
    for (std::size_t r = 0; r < sup.size(); ++r) {
      const double w = weight_of_row(sup[r]);
      if (std::isnan(w)) continue;
      for (std::size_t c = 0; c < sup.size(); ++c)
        out.emplace_back(sup[r], sup[c], w * H(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)));
    }
  };
  constexpr double kSkip = std::numeric_limits<double>::quiet_NaN();

  for (int i = 0; i < game.num_players(); ++i) {
    const auto ii = static_cast<std::size_t>(i);
    const PlayerSpec& p = game.player(i);
    const BlockRange& b = game.block(i);
    if (!p.cost.support().empty() && !is_linear(p.cost))
      add_hessian(p.cost, p.cost.gather(x), [&](int v) { return b.contains(v) ? 1.0 : kSkip; });
    auto constraint_terms = [&](const SmoothScalarFunction& f, int row, bool linear, double sign) {
      const VectorXd y = f.gather(x);
      if (!linear) add_hessian(f, y, [&](int) { return z[row]; });
      const VectorXd g = f.local_gradient(y);
      for (std::size_t k = 0; k < f.support().size(); ++k) {
        const double gk = g[static_cast<Eigen::Index>(k)];
        out.emplace_back(f.support()[k], row, gk);
        out.emplace_back(row, f.support()[k], sign * gk);
      }
    };
    for (std::size_t e = 0; e < p.eq_constraints.size(); ++e)
      constraint_terms(p.eq_constraints[e], a.layout.mu[ii].offset + static_cast<int>(e),
                       a.linear_eq[ii][e], 1.0);
    for (std::size_t e = 0; e < p.ineq_constraints.size(); ++e)
      constraint_terms(p.ineq_constraints[e], a.layout.lambda[ii].offset + static_cast<int>(e),
                       a.linear_ineq[ii][e], -1.0);
  }

  for (int j = 0; j < game.num_shared(); ++j) {
    const auto& s = game.shared()[static_cast<std::size_t>(j)];
    const VectorXd y = s.gather(x);
    if (!a.linear_shared[static_cast<std::size_t>(j)])
      add_hessian(s, y, [&](int v) { return shared_weight(a, z, a.owner[static_cast<std::size_t>(v)], j); });
    const VectorXd g = s.local_gradient(y);
    for (std::size_t k = 0; k < s.support().size(); ++k) {
      const int v = s.support()[k];
      const double gk = g[static_cast<Eigen::Index>(k)];
      const int player = a.owner[static_cast<std::size_t>(v)];
      if (a.mode == SharedMode::kScaled) {
        const int col = a.layout.sigma[0].offset + j;
        out.emplace_back(v, col, a.factors[static_cast<std::size_t>(player)][j] * gk);
        out.emplace_back(col, v, -gk);
      } else {
        for (std::size_t c = 0; c < a.layout.sigma.size(); ++c) {
          const int col = a.layout.sigma[c].offset + j;
          if (static_cast<int>(c) == player) out.emplace_back(v, col, gk);
          out.emplace_back(col, v, -gk);
        }
      }
    }
  }
}

inline MCPInstance assemble(const GameSpec& game, std::vector<VectorXd> factors, SharedMode mode) {
  auto data = std::make_shared<AssemblyData>();
  data->game = game;
  data->factors = std::move(factors);
  data->mode = mode;
  data->layout = make_layout(game, mode);
  data->owner.resize(static_cast<std::size_t>(game.dim()));
  for (int v = 0; v < game.dim(); ++v) data->owner[static_cast<std::size_t>(v)] = game.owner(v);
  for (const auto& p : game.players()) {
    std::vector<bool> le, li;
    for (const auto& h : p.eq_constraints) le.push_back(is_linear(h));
    for (const auto& g : p.ineq_constraints) li.push_back(is_linear(g));
    data->linear_eq.push_back(std::move(le));
    data->linear_ineq.push_back(std::move(li));
  }
  for (const auto& s : game.shared()) data->linear_shared.push_back(is_linear(s));

  MCPInstance inst;
  inst.dim = data->layout.dim;
  inst.layout = data->layout;
  constexpr double inf = std::numeric_limits<double>::infinity();
  inst.lower = VectorXd::Constant(inst.dim, -inf);
  inst.upper = VectorXd::Constant(inst.dim, inf);
  for (const auto& b : inst.layout.lambda) inst.lower.segment(b.offset, b.size).setZero();
  for (const auto& b : inst.layout.sigma) inst.lower.segment(b.offset, b.size).setZero();
  inst.residual = [data](const VectorXd& z, VectorXd& F) { evaluate(*data, z, F); };
  inst.jacobian = [data](const VectorXd& z, std::vector<Triplet>& t) { jacobian(*data, z, t); };
  return inst;
}

}  // namespace detail

/// KKT system with one fictitious shared multiplier vector σ; player i sees
/// A_i σ on the shared constraints.
inline MCPInstance assemble_scaled(const GameSpec& game, const FactorAssignment& factors) {
  if (factors.num_players() != game.num_players() || factors.num_shared() != game.num_shared())
    throw Error(ErrorCode::kDimensionMismatch, "factor assignment does not match the game");
  return detail::assemble(game, factors.diagonals(), detail::SharedMode::kScaled);
}

/// Rosen's normalized KKT system: every A_i = I.
inline MCPInstance assemble_normalized(const GameSpec& game) {
  return assemble_scaled(game, FactorAssignment::identity(game.num_players(), game.num_shared()));
}

/// Per-player shared multipliers σ_i with the shared constraints duplicated
/// once per player.
inline MCPInstance assemble_full(const GameSpec& game) {
  return detail::assemble(game, {}, detail::SharedMode::kFull);
}

// ---------------------------------------------------------------------------
// Residual diagnostics

struct KKTResidual {
  std::vector<double> stationarity;  // ∞-norm per player
  double primal = 0.0;               // h, g, s violations
  double dual = 0.0;                 // negative inequality multipliers
  double complementarity = 0.0;      // max |λ_j g_j|, |σ_j s_j|
  double overall = 0.0;
};

namespace detail {

/// `stationary_sigma[i]` enters player i's Lagrangian; every vector in
/// `complementary_sigma` must be complementary to s.
inline KKTResidual residual_core(const GameSpec& game, const VectorXd& x,
                                 const std::vector<VectorXd>& mu,
                                 const std::vector<VectorXd>& lambda,
                                 const std::vector<VectorXd>& stationary_sigma,
                                 const std::vector<VectorXd>& complementary_sigma) {
  KKTResidual r;
  VectorXd svals(game.num_shared());
  std::vector<VectorXd> sgrad;
  for (int j = 0; j < game.num_shared(); ++j) {
    const auto& s = game.shared()[static_cast<std::size_t>(j)];
    svals[j] = s(x);
    sgrad.push_back(s.gradient(x));
    r.primal = std::max(r.primal, std::max(svals[j], 0.0));
  }
  for (int i = 0; i < game.num_players(); ++i) {
    const auto ii = static_cast<std::size_t>(i);
    const PlayerSpec& p = game.player(i);
    const BlockRange& b = game.block(i);
    VectorXd grad = p.cost.gradient(x).segment(b.offset, b.size);
    for (std::size_t e = 0; e < p.eq_constraints.size(); ++e) {
      const auto& h = p.eq_constraints[e];
      grad += mu[ii][static_cast<Eigen::Index>(e)] * h.gradient(x).segment(b.offset, b.size);
      r.primal = std::max(r.primal, std::abs(h(x)));
    }
    for (std::size_t e = 0; e < p.ineq_constraints.size(); ++e) {
      const auto& g = p.ineq_constraints[e];
      const double l = lambda[ii][static_cast<Eigen::Index>(e)];
      const double gv = g(x);
      grad += l * g.gradient(x).segment(b.offset, b.size);
      r.primal = std::max(r.primal, std::max(gv, 0.0));
      r.dual = std::max(r.dual, std::max(-l, 0.0));
      r.complementarity = std::max(r.complementarity, std::abs(l * gv));
    }
    for (int j = 0; j < game.num_shared(); ++j)
      grad += stationary_sigma[ii][j] * sgrad[static_cast<std::size_t>(j)].segment(b.offset, b.size);
    r.stationarity.push_back(grad.size() ? grad.lpNorm<Eigen::Infinity>() : 0.0);
  }
  for (const auto& sig : complementary_sigma) {
    for (int j = 0; j < game.num_shared(); ++j) {
      r.dual = std::max(r.dual, std::max(-sig[j], 0.0));
      r.complementarity = std::max(r.complementarity, std::abs(sig[j] * svals[j]));
    }
  }
  r.overall = std::max({r.primal, r.dual, r.complementarity});
  for (double s : r.stationarity) r.overall = std::max(r.overall, s);
  return r;
}

}  // namespace detail

/// Residual of the factor-scaled KKT system at a candidate laid out as
/// assemble_scaled's z.
inline KKTResidual kkt_residual(const GameSpec& game, const FactorAssignment& factors,
                                const VectorXd& z) {
  const VariableLayout layout = detail::make_layout(game, detail::SharedMode::kScaled);
  const KktPoint p = unpack(layout, z);
  const VectorXd& sigma = p.sigma.front();
  std::vector<VectorXd> eff;
  for (const auto& d : factors.diagonals()) eff.push_back(d.cwiseProduct(sigma));
  return detail::residual_core(game, p.x, p.mu, p.lambda, eff, {sigma});
}

/// Residual of the original per-player KKT system with multipliers σ_i.
inline KKTResidual unscaled_kkt_residual(const GameSpec& game, const VectorXd& x,
                                         const std::vector<VectorXd>& mu,
                                         const std::vector<VectorXd>& lambda,
                                         const std::vector<VectorXd>& sigma_players) {
  return detail::residual_core(game, x, mu, lambda, sigma_players, sigma_players);
}

/// Shared constraints counted as active: |s_j| <= tol and σ_j >= tol.
inline std::vector<int> active_shared(const GameSpec& game, const VectorXd& x,
                                      const VectorXd& sigma, double tol = 1e-7) {
  std::vector<int> active;
  for (int j = 0; j < game.num_shared(); ++j)
    if (std::abs(game.shared()[static_cast<std::size_t>(j)](x)) <= tol && sigma[j] >= tol)
      active.push_back(j);
  return active;
}

}  // namespace gnep
