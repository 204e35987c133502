#pragma once

#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "gnep/error.hpp"
#include "gnep/function.hpp"

namespace gnep {

/// One player's optimization problem. Private constraints use the global
/// conventions h(x^i) = 0 and g(x^i) <= 0.
struct PlayerSpec {
  std::string name;
  int dim = 0;
  SmoothScalarFunction cost;
  std::vector<SmoothScalarFunction> eq_constraints;
  std::vector<SmoothScalarFunction> ineq_constraints;
};

struct BlockRange {
  int offset = 0;
  int size = 0;

  int end() const { return offset + size; }
  bool contains(int index) const { return index >= offset && index < end(); }
};

/// Validated M-player GNEP. The stacked decision vector concatenates the
/// player blocks in order; shared constraints s(x) <= 0 act on all of it.
class GameSpec {
 public:
  int num_players() const { return static_cast<int>(players_.size()); }
  int dim() const { return dim_; }
  int num_shared() const { return static_cast<int>(shared_.size()); }

  const PlayerSpec& player(int i) const { return players_.at(static_cast<std::size_t>(i)); }
  const std::vector<PlayerSpec>& players() const { return players_; }
  const std::vector<SmoothScalarFunction>& shared() const { return shared_; }
  const BlockRange& block(int i) const { return blocks_.at(static_cast<std::size_t>(i)); }

  int total_eq() const {
    int k = 0;
    for (const auto& p : players_) k += static_cast<int>(p.eq_constraints.size());
    return k;
  }
  int total_ineq() const {
    int m = 0;
    for (const auto& p : players_) m += static_cast<int>(p.ineq_constraints.size());
    return m;
  }

  /// Index of the player owning coordinate `index` of the stacked vector.
  int owner(int index) const {
    for (int i = 0; i < num_players(); ++i)
      if (blocks_[static_cast<std::size_t>(i)].contains(index)) return i;
    throw Error(ErrorCode::kIndexOutOfRange, "coordinate " + std::to_string(index));
  }

  /// Cost of every player at x.
  std::vector<double> costs(const VectorXd& x) const {
    std::vector<double> out;
    out.reserve(players_.size());
    for (const auto& p : players_) out.push_back(p.cost(x));
    return out;
  }

  /// J_i depends on x^i only.
  bool cost_is_separable(int i) const {
    const auto& b = block(i);
    for (int v : player(i).cost.support())
      if (!b.contains(v)) return false;
    return true;
  }

  friend GameSpec build_game(std::vector<PlayerSpec> players,
                             std::vector<SmoothScalarFunction> shared);

 private:
  std::vector<PlayerSpec> players_;
  std::vector<SmoothScalarFunction> shared_;
  std::vector<BlockRange> blocks_;
  int dim_ = 0;
};

inline GameSpec build_game(std::vector<PlayerSpec> players,
                           std::vector<SmoothScalarFunction> shared) {
  if (players.empty()) throw Error(ErrorCode::kDimensionMismatch, "a game needs at least one player");
  GameSpec game;
  int offset = 0;
  for (const auto& p : players) {
    if (p.dim <= 0)
      throw Error(ErrorCode::kDimensionMismatch, "player '" + p.name + "' has non-positive dimension");
    game.blocks_.push_back({offset, p.dim});
    offset += p.dim;
  }
  game.dim_ = offset;

  auto check_range = [&](const SmoothScalarFunction& f, const std::string& what) {
    for (int v : f.support())
      if (v < 0 || v >= game.dim_)
        throw Error(ErrorCode::kDimensionMismatch,
                    what + " references coordinate " + std::to_string(v) + " outside [0, " +
                        std::to_string(game.dim_) + ")");
  };
  for (std::size_t i = 0; i < players.size(); ++i) {
    const auto& p = players[i];
    const auto& b = game.blocks_[i];
    check_range(p.cost, "cost of player '" + p.name + "'");
    auto check_private = [&](const SmoothScalarFunction& f, const std::string& kind) {
      check_range(f, kind);
      for (int v : f.support())
        if (!b.contains(v))
          throw Error(ErrorCode::kForeignBlock, kind + " of player '" + p.name +
                                                    "' depends on coordinate " + std::to_string(v) +
                                                    " of another player");
    };
    for (const auto& h : p.eq_constraints) check_private(h, "equality constraint");
    for (const auto& g : p.ineq_constraints) check_private(g, "inequality constraint");
  }
  for (const auto& s : shared) check_range(s, "shared constraint");

  game.players_ = std::move(players);
  game.shared_ = std::move(shared);
  return game;
}

// ---------------------------------------------------------------------------
// Factor matrices

enum class FactorRule { kFirstPlayerIdentity, kSumToOne, kUnnormalized };

inline const char* to_string(FactorRule rule) {
  switch (rule) {
    case FactorRule::kFirstPlayerIdentity: return "first-identity";
    case FactorRule::kSumToOne: return "sum-to-one";
    case FactorRule::kUnnormalized: return "unnormalized";
  }
  return "?";
}

/// Strictly positive diagonal factor matrices A_1..A_M (stored as their
/// diagonals) together with the normalization rule they satisfy.
class FactorAssignment {
 public:
  FactorAssignment(std::vector<VectorXd> diagonals, FactorRule rule)
      : diag_(std::move(diagonals)), rule_(rule) {
    validate();
  }

  static FactorAssignment identity(int num_players, int num_shared) {
    return FactorAssignment(
        std::vector<VectorXd>(static_cast<std::size_t>(num_players), VectorXd::Ones(num_shared)),
        FactorRule::kFirstPlayerIdentity);
  }

  int num_players() const { return static_cast<int>(diag_.size()); }
  int num_shared() const { return diag_.empty() ? 0 : static_cast<int>(diag_.front().size()); }
  FactorRule rule() const { return rule_; }
  const VectorXd& diagonal(int i) const { return diag_.at(static_cast<std::size_t>(i)); }
  MatrixXd matrix(int i) const { return diagonal(i).asDiagonal(); }
  const std::vector<VectorXd>& diagonals() const { return diag_; }

  /// All A_i divided by c; the result no longer claims a normalization rule.
  FactorAssignment scaled(double c) const {
    std::vector<VectorXd> d = diag_;
    for (auto& v : d) v /= c;
    return FactorAssignment(std::move(d), FactorRule::kUnnormalized);
  }

 private:
  void validate() const {
    if (diag_.empty()) throw Error(ErrorCode::kDimensionMismatch, "no factor matrices");
    const auto m0 = diag_.front().size();
    for (const auto& d : diag_) {
      if (d.size() != m0) throw Error(ErrorCode::kDimensionMismatch, "factor matrices differ in size");
      for (Eigen::Index j = 0; j < d.size(); ++j)
        if (!(d[j] > 0.0) || !std::isfinite(d[j]))
          throw Error(ErrorCode::kInvalidFactor, "factor entries must be finite and strictly positive");
    }
    if (rule_ == FactorRule::kFirstPlayerIdentity) {
      for (Eigen::Index j = 0; j < m0; ++j)
        if (diag_.front()[j] != 1.0)
          throw Error(ErrorCode::kInvalidFactor, "first-identity rule requires A_1 = I");
    } else if (rule_ == FactorRule::kSumToOne) {
      for (Eigen::Index j = 0; j < m0; ++j) {
        double sum = 0.0;
        for (const auto& d : diag_) sum += d[j];
        if (std::abs(sum - 1.0) > 1e-12)
          throw Error(ErrorCode::kInvalidFactor, "sum-to-one rule violated in column " + std::to_string(j));
      }
    }
  }

  std::vector<VectorXd> diag_;
  FactorRule rule_;
};

/// Completes a factor assignment from its free parameters, laid out player by
/// player with m0 entries each:
///   first-identity: players 2..M, all positive;
///   sum-to-one:     players 1..M-1, each in (0,1), per-column sums < 1;
///   unnormalized:   players 1..M, all positive.
inline FactorAssignment make_factors(int num_players, int num_shared, FactorRule rule,
                                     std::span<const double> free_params) {
  if (num_players < 1 || num_shared < 0)
    throw Error(ErrorCode::kDimensionMismatch, "invalid factor dimensions");
  const auto m0 = static_cast<std::size_t>(num_shared);
  const auto m = static_cast<std::size_t>(num_players);
  const std::size_t expected = rule == FactorRule::kUnnormalized ? m * m0 : (m - 1) * m0;
  if (free_params.size() != expected)
    throw Error(ErrorCode::kDimensionMismatch, "expected " + std::to_string(expected) +
                                                   " free factor parameters, got " +
                                                   std::to_string(free_params.size()));
  for (double p : free_params)
    if (!(p > 0.0)) throw Error(ErrorCode::kInvalidFactor, "factor parameters must be positive");

  std::vector<VectorXd> diag(m, VectorXd::Ones(num_shared));
  auto fill = [&](std::size_t player, std::size_t block) {
    for (std::size_t j = 0; j < m0; ++j) diag[player][static_cast<Eigen::Index>(j)] = free_params[block * m0 + j];
  };
  switch (rule) {
    case FactorRule::kFirstPlayerIdentity:
      for (std::size_t i = 1; i < m; ++i) fill(i, i - 1);
      break;
    case FactorRule::kUnnormalized:
      for (std::size_t i = 0; i < m; ++i) fill(i, i);
      break;
    case FactorRule::kSumToOne:
      for (std::size_t i = 0; i + 1 < m; ++i) fill(i, i);
      for (std::size_t j = 0; j < m0; ++j) {
        double used = 0.0;
        for (std::size_t i = 0; i + 1 < m; ++i) used += diag[i][static_cast<Eigen::Index>(j)];
        if (!(used < 1.0))
          throw Error(ErrorCode::kInvalidFactor, "sum-to-one column " + std::to_string(j) + " reaches 1");
        diag[m - 1][static_cast<Eigen::Index>(j)] = 1.0 - used;
      }
      break;
  }
  return FactorAssignment(std::move(diag), rule);
}

/// σ_i = A_i σ for every player.
inline std::vector<VectorXd> effective_multipliers(const FactorAssignment& factors,
                                                   const VectorXd& sigma) {
  if (sigma.size() != factors.num_shared())
    throw Error(ErrorCode::kDimensionMismatch, "sigma has wrong length");
  if ((sigma.array() < 0.0).any())
    throw Error(ErrorCode::kNegativeMultiplier, "shared multipliers must be non-negative");
  std::vector<VectorXd> out;
  out.reserve(static_cast<std::size_t>(factors.num_players()));
  for (const auto& d : factors.diagonals()) out.push_back(d.cwiseProduct(sigma));
  return out;
}

}  // namespace gnep
