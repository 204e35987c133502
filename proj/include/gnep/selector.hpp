#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "gnep/equilibrium.hpp"
#include "gnep/explorer.hpp"

namespace gnep {

/// Top-level objective J₀ evaluated on an equilibrium x*.
using Objective = std::function<double(const VectorXd&)>;

inline Objective objective_sum_of_costs(const GameSpec& game) {
  return [game](const VectorXd& x) {
    double s = 0.0;
    for (double c : game.costs(x)) s += c;
    return s;
  };
}

inline Objective objective_single_player(const GameSpec& game, int player) {
  if (player < 0 || player >= game.num_players())
    throw Error(ErrorCode::kIndexOutOfRange, "player " + std::to_string(player) + " out of range");
  return [game, player](const VectorXd& x) { return game.player(player).cost(x); };
}

struct SelectionOptions {
  int grid_points = 21;  // per parameter
  int refine_iterations = 80;
  double epsilon = 1e-3;
  int seeds = 1;  // inner multistart seeds; 1 means the default start only
  std::uint64_t seed = 0;
  bool extrapolate_boundary = true;
  SolverOptions solver;
};

struct SelectionProblem {
  GameSpec game;
  std::function<FactorAssignment(const VectorXd&)> factors;
  VectorXd domain_lower;  // open admissible domain of the parameters
  VectorXd domain_upper;
  std::optional<VectorXd> box_lower;  // default: domain shrunk by ε
  std::optional<VectorXd> box_upper;
  Objective objective;
  SelectionOptions options;
};

/// One-parameter problem along a factor family.
inline SelectionProblem selection_problem(const GameSpec& game, const FactorFamily& family, Objective objective,
                                          SelectionOptions options = {}) {
  SelectionProblem p{game,
                     [family](const VectorXd& a) { return family.at(a[0]); },
                     VectorXd::Constant(1, family.lower),
                     VectorXd::Constant(1, family.upper),
                     std::nullopt,
                     std::nullopt,
                     std::move(objective),
                     options};
  return p;
}

struct TraceEntry {
  VectorXd params;
  double j0 = std::numeric_limits<double>::infinity();
  std::vector<double> costs;
  SolveStatus status = SolveStatus::kMaxIters;
  int basins = 0;  // converged distinct equilibria seen by the inner multistart
  bool refinement = false;
  bool ok() const { return status == SolveStatus::kConverged; }
};

struct BoundaryLimit {
  VectorXd params;  // parameters on the domain edge
  VectorXd x;       // extrapolated equilibrium
  double j0 = 0.0;
};

struct SelectionResult {
  VectorXd params;
  GNESolution solution;
  double j0 = std::numeric_limits<double>::infinity();
  std::vector<TraceEntry> trace;
  bool boundary = false;
  std::optional<BoundaryLimit> limit;
};

namespace detail {

struct Evaluation {
  TraceEntry entry;
  GNESolution solution;
};

inline Evaluation evaluate_selection(const SelectionProblem& p, const VectorXd& params,
                                     const std::optional<VectorXd>& warm = std::nullopt) {
  Evaluation ev;
  ev.entry.params = params;
  const FactorAssignment f = p.factors(params);
  const auto consider = [&](const GNESolution& s) {
    if (!s.converged()) return;
    ++ev.entry.basins;
    const double j = p.objective(s.x);
    if (!ev.entry.ok() || j < ev.entry.j0) {
      ev.entry.j0 = j;
      ev.entry.costs = s.costs;
      ev.entry.status = s.status;
      ev.solution = s;
    }
  };
  if (p.options.seeds <= 1) {
    GNESolution s = solve_equilibrium(p.game, f, p.options.solver, warm);
    if (!s.converged()) {
      ev.entry.status = s.status;
      ev.solution = std::move(s);
      return ev;
    }
    consider(s);
  } else {
    const MCPInstance inst = assemble_scaled(p.game, f);
    const auto seeds = random_seeds(inst, p.options.seeds, p.options.seed);
    const EquilibriumSet set = find_equilibria(p.game, f, p.options.solver, seeds);
    for (const auto& s : set.distinct) consider(s);
    if (set.distinct.empty()) {
      ev.entry.status = set.best.status;
      ev.solution = set.best;
    }
  }
  return ev;
}

inline double golden_section(const std::function<double(double)>& f, double a, double b, int iterations) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a), d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  for (int k = 0; k < iterations && b - a > 1e-12 * (1.0 + std::abs(a)); ++k) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return fc <= fd ? c : d;
}

/// Box-projected Nelder–Mead; `budget` bounds the number of evaluations.
inline void nelder_mead(const std::function<double(const VectorXd&)>& f, const VectorXd& start, const VectorXd& step,
                        const VectorXd& lo, const VectorXd& hi, int budget) {
  const auto n = start.size();
  auto project = [&](VectorXd v) { return VectorXd(v.cwiseMax(lo).cwiseMin(hi)); };
  std::vector<VectorXd> s{project(start)};
  for (Eigen::Index k = 0; k < n; ++k) {
    VectorXd v = start;
    v[k] += (v[k] + step[k] <= hi[k]) ? step[k] : -step[k];
    s.push_back(project(v));
  }
  std::vector<double> fs;
  int used = 0;
  auto eval = [&](const VectorXd& v) {
    ++used;
    return f(v);
  };
  for (const auto& v : s) fs.push_back(eval(v));
  while (used < budget) {
    std::vector<std::size_t> order(s.size());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fs[a] < fs[b]; });
    std::vector<VectorXd> s2;
    std::vector<double> f2;
    for (auto k : order) {
      s2.push_back(s[k]);
      f2.push_back(fs[k]);
    }
    s = std::move(s2);
    fs = std::move(f2);
    if ((s.back() - s.front()).lpNorm<Eigen::Infinity>() < 1e-10) break;
    VectorXd centroid = VectorXd::Zero(n);
    for (std::size_t k = 0; k + 1 < s.size(); ++k) centroid += s[k];
    centroid /= static_cast<double>(n);
    const VectorXd xr = project(centroid + (centroid - s.back()));
    const double fr = eval(xr);
    if (fr < fs.front()) {
      const VectorXd xe = project(centroid + 2.0 * (centroid - s.back()));
      const double fe = eval(xe);
      s.back() = fe < fr ? xe : xr;
      fs.back() = std::min(fe, fr);
    } else if (fr < fs[fs.size() - 2]) {
      s.back() = xr;
      fs.back() = fr;
    } else {
      const VectorXd xc = project(centroid + 0.5 * (s.back() - centroid));
      const double fc = eval(xc);
      if (fc < fs.back()) {
        s.back() = xc;
        fs.back() = fc;
      } else {
        for (std::size_t k = 1; k < s.size() && used < budget; ++k) {
          s[k] = project(s.front() + 0.5 * (s[k] - s.front()));
          fs[k] = eval(s[k]);
        }
      }
    }
  }
}

}  // namespace detail

/// Grid search over the admissible box followed by derivative-free
/// refinement around the best grid cell.
inline SelectionResult select(const SelectionProblem& p) {
  const SelectionOptions& o = p.options;
  const auto n = p.domain_lower.size();
  if (n < 1 || p.domain_upper.size() != n) throw Error(ErrorCode::kDimensionMismatch, "parameter domain");
  if (o.grid_points < 2) throw Error(ErrorCode::kDomain, "grid density must be at least 2");
  if (!(o.epsilon > 0.0)) throw Error(ErrorCode::kDomain, "epsilon must be positive");
  const VectorXd lo = p.box_lower.value_or(p.domain_lower.array() + o.epsilon);
  const VectorXd hi = p.box_upper.value_or(p.domain_upper.array() - o.epsilon);
  for (Eigen::Index k = 0; k < n; ++k) {
    if (!std::isfinite(lo[k]) || !std::isfinite(hi[k]))
      throw Error(ErrorCode::kDomain, "unbounded parameter domain needs an explicit box");
    if (!(lo[k] > p.domain_lower[k]) || !(hi[k] < p.domain_upper[k]) || !(lo[k] <= hi[k]))
      throw Error(ErrorCode::kDomain, "admissible box must lie strictly inside the domain");
  }

  SelectionResult res;
  std::optional<GNESolution> best_solution;
  auto record = [&](const VectorXd& params, bool refinement) {
    detail::Evaluation ev = detail::evaluate_selection(p, params);
    ev.entry.refinement = refinement;
    if (ev.entry.ok() && ev.entry.j0 < res.j0) {
      res.j0 = ev.entry.j0;
      res.params = params;
      best_solution = ev.solution;
    }
    res.trace.push_back(ev.entry);
    return ev.entry.ok() ? ev.entry.j0 : std::numeric_limits<double>::infinity();
  };

  const VectorXd cell = (hi - lo) / static_cast<double>(o.grid_points - 1);
  std::vector<int> idx(static_cast<std::size_t>(n), 0);
  for (bool more = true; more;) {
    VectorXd params(n);
    for (Eigen::Index k = 0; k < n; ++k)
      params[k] = idx[static_cast<std::size_t>(k)] == o.grid_points - 1 ? hi[k] : lo[k] + cell[k] * idx[static_cast<std::size_t>(k)];
    record(params, false);
    more = false;
    for (Eigen::Index k = n - 1; k >= 0; --k) {
      if (++idx[static_cast<std::size_t>(k)] < o.grid_points) {
        more = true;
        break;
      }
      idx[static_cast<std::size_t>(k)] = 0;
    }
  }
  if (!best_solution) throw Error(ErrorCode::kAllInnerFailed, "no inner solve converged on the grid");

  if (o.refine_iterations > 0) {
    if (n == 1) {
      const double a = std::max(lo[0], res.params[0] - cell[0]);
      const double b = std::min(hi[0], res.params[0] + cell[0]);
      if (b > a)
        detail::golden_section([&](double t) { return record(VectorXd::Constant(1, t), true); }, a, b,
                               o.refine_iterations);
    } else {
      detail::nelder_mead([&](const VectorXd& v) { return record(v, true); }, res.params, cell, lo, hi,
                          o.refine_iterations);
    }
  }
  res.solution = *best_solution;

  std::vector<int> edge(static_cast<std::size_t>(n), 0);  // −1 lower, +1 upper
  for (Eigen::Index k = 0; k < n; ++k) {
    if (res.params[k] - lo[k] <= o.epsilon) edge[static_cast<std::size_t>(k)] = -1;
    if (hi[k] - res.params[k] <= o.epsilon) edge[static_cast<std::size_t>(k)] = +1;
    if (edge[static_cast<std::size_t>(k)] != 0) res.boundary = true;
  }

  if (res.boundary && o.extrapolate_boundary) {
    // Second-order Richardson extrapolation from distances h, h/2, h/4 to
    // the domain edge.
    VectorXd target = res.params;
    bool finite = true;
    for (Eigen::Index k = 0; k < n; ++k) {
      const int e = edge[static_cast<std::size_t>(k)];
      if (e == 0) continue;
      target[k] = e < 0 ? p.domain_lower[k] : p.domain_upper[k];
      finite = finite && std::isfinite(target[k]);
    }
    if (finite) {
      auto at = [&](double h, const std::optional<VectorXd>& warm) {
        VectorXd q = res.params;
        for (Eigen::Index k = 0; k < n; ++k) {
          const int e = edge[static_cast<std::size_t>(k)];
          if (e != 0) q[k] = target[k] - e * h;
        }
        return detail::evaluate_selection(p, q, warm).solution;
      };
      const double h = o.epsilon;
      const GNESolution s1 = at(h, res.solution.z);
      const GNESolution s2 = s1.converged() ? at(h / 2, s1.z) : s1;
      const GNESolution s4 = s2.converged() ? at(h / 4, s2.z) : s2;
      if (s1.converged() && s2.converged() && s4.converged()) {
        BoundaryLimit lim;
        lim.params = target;
        lim.x = (8.0 * s4.x - 6.0 * s2.x + s1.x) / 3.0;
        lim.j0 = p.objective(lim.x);
        res.limit = lim;
      }
    }
  }
  return res;
}

}  // namespace gnep
