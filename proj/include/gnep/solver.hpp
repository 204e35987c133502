#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <future>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <Eigen/KLUSupport>

#include "gnep/error.hpp"
#include "gnep/kkt.hpp"

namespace gnep {

struct SolverOptions {
  double tol = 1e-8;           // on ‖Φ(z)‖∞
  int max_iters = 200;         // Newton iterations, summed over restarts
  double backtrack = 0.5;
  double armijo = 1e-4;
  double regularization_floor = 1e-10;
  int restarts = 5;
  double initial_multiplier = 0.1;  // start value for bounded coordinates
  int dense_threshold = 150;        // dense LU up to this dimension, sparse LU above
  double divergence_threshold = 1e8;
  std::uint64_t restart_seed = 0;
  bool project = false;             // clamp line-search trials to the bounds
  int nonmonotone_memory = 1;       // Armijo reference is the max merit over this many iterates
  double smoothing = 0.0;           // initial μ of the smoothed FB continuation; 0 disables it
  double smoothing_decrease = 0.1;

  void validate() const {
    if (!(tol > 0.0)) throw Error(ErrorCode::kDomain, "tol must be positive");
    if (max_iters < 1) throw Error(ErrorCode::kDomain, "max_iters must be at least 1");
    if (!(backtrack > 0.0 && backtrack < 1.0) || !(armijo > 0.0 && armijo < 1.0))
      throw Error(ErrorCode::kDomain, "line-search factors must lie in (0,1)");
    if (!(regularization_floor > 0.0)) throw Error(ErrorCode::kDomain, "regularization floor must be positive");
    if (restarts < 0) throw Error(ErrorCode::kDomain, "restarts must be non-negative");
    if (!(smoothing >= 0.0) || !(smoothing_decrease > 0.0 && smoothing_decrease < 1.0))
      throw Error(ErrorCode::kDomain, "invalid smoothing parameters");
    if (nonmonotone_memory < 1) throw Error(ErrorCode::kDomain, "nonmonotone memory must be at least 1");
  }
};

enum class SolveStatus { kConverged, kMaxIters, kSingular, kDiverged };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::kConverged: return "CONVERGED";
    case SolveStatus::kMaxIters: return "MAX_ITERS";
    case SolveStatus::kSingular: return "SINGULAR";
    case SolveStatus::kDiverged: return "DIVERGED";
  }
  return "?";
}

struct SolveReport {
  SolveStatus status = SolveStatus::kMaxIters;
  int iterations = 0;
  int restarts = 0;
  int lm_steps = 0;        // iterations that fell back to a Levenberg–Marquardt step
  int gradient_steps = 0;  // iterations that fell back to steepest descent
  double fb_residual = std::numeric_limits<double>::infinity();
  /// ‖z − mid(l, u, z − F(z))‖∞
  double natural_residual = std::numeric_limits<double>::infinity();
  VectorXd z;
  /// Merit ½‖Φ‖² at every visited iterate, tagged with the restart it
  /// belongs to.
  std::vector<std::pair<int, double>> merit_history;

  bool converged() const { return status == SolveStatus::kConverged; }
};

/// Fischer–Burmeister function: zero iff a >= 0, b >= 0, ab = 0.
inline double fb_compose(double a, double b) { return a + b - std::hypot(a, b); }

namespace detail {

struct FbPartials {
  double value, da, db;
};

inline FbPartials fb_partials(double a, double b, double mu = 0.0) {
  const double r = mu > 0.0 ? std::sqrt(a * a + b * b + 2.0 * mu * mu) : std::hypot(a, b);
  if (r < 1e-14) {
    constexpr double c = 1.0 - 0.70710678118654752440;
    return {0.0, c, c};
  }
  return {a + b - r, 1.0 - a / r, 1.0 - b / r};
}

/// Φ(z) and the diagonal scalings of the generalized Jacobian
/// V = diag(dz) + diag(dF)·∇F.
inline void reformulate(const MCPInstance& inst, const VectorXd& z, const VectorXd& F, VectorXd& phi,
                        VectorXd* dz, VectorXd* dF, double mu = 0.0) {
  const auto d = inst.dim;
  phi.resize(d);
  if (dz) dz->resize(d);
  if (dF) dF->resize(d);
  for (int j = 0; j < d; ++j) {
    const double l = inst.lower[j], u = inst.upper[j];
    const bool has_l = std::isfinite(l), has_u = std::isfinite(u);
    double v, a, b;
    if (!has_l && !has_u) {
      v = F[j], a = 0.0, b = 1.0;
    } else if (has_l && has_u && l == u) {
      v = z[j] - l, a = 1.0, b = 0.0;
    } else if (has_l && !has_u) {
      const auto p = fb_partials(z[j] - l, F[j], mu);
      v = p.value, a = p.da, b = p.db;
    } else if (!has_l && has_u) {
      const auto p = fb_partials(u - z[j], -F[j], mu);
      v = -p.value, a = p.da, b = p.db;
    } else {
      const auto in = fb_partials(u - z[j], -F[j], mu);
      const auto out = fb_partials(z[j] - l, -in.value, mu);
      v = out.value;
      a = out.da + out.db * in.da;
      b = out.db * in.db;
    }
    phi[j] = v;
    if (dz) (*dz)[j] = a;
    if (dF) (*dF)[j] = b;
  }
}

inline double natural_residual(const MCPInstance& inst, const VectorXd& z, const VectorXd& F) {
  double r = 0.0;
  for (int j = 0; j < inst.dim; ++j) {
    const double p = std::clamp(z[j] - F[j], inst.lower[j], inst.upper[j]);
    r = std::max(r, std::abs(z[j] - p));
  }
  return r;
}

class NewtonSystem {
 public:
  NewtonSystem(const MCPInstance& inst, const SolverOptions& opt)
      : inst_(inst), opt_(opt), dense_(inst.dim <= opt.dense_threshold) {}

  /// Solves V d = rhs, regularizing V + δI when needed. Returns false when
  /// no regularization level up to 1e-2 yields a usable direction.
  bool solve(const VectorXd& z, const VectorXd& dz, const VectorXd& dF, const VectorXd& rhs,
             VectorXd& d, VectorXd& grad_merit, const VectorXd& phi) {
    triplets_.clear();
    inst_.jacobian(z, triplets_);
    for (auto& t : triplets_) t = Triplet(t.row(), t.col(), dF[t.row()] * t.value());
    for (int r = 0; r < inst_.dim; ++r) triplets_.emplace_back(r, r, dz[r]);
    V_.resize(inst_.dim, inst_.dim);
    V_.setFromTriplets(triplets_.begin(), triplets_.end());
    V_.makeCompressed();
    grad_merit = V_.transpose() * phi;

    double delta = 0.0;
    while (true) {
      if (try_solve(delta, rhs, d)) return true;
      delta = delta == 0.0 ? opt_.regularization_floor : delta * 100.0;
      if (delta > 1e-2) return false;
    }
  }

 /// Levenberg–Marquardt direction (VᵀV + νI) d = −Vᵀφ for the current V.
  bool lm_direction(double nu, const VectorXd& grad_merit, VectorXd& d) {
    Eigen::SparseMatrix<double> N = V_.transpose() * V_;
    for (int r = 0; r < inst_.dim; ++r) N.coeffRef(r, r) += nu;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(N);
    if (ldlt.info() != Eigen::Success) return false;
    d = ldlt.solve(-grad_merit);
    return d.allFinite();
  }

 private:
  bool try_solve(double delta, const VectorXd& rhs, VectorXd& d) {
    if (dense_) {
      MatrixXd A(V_);
      if (delta > 0.0) A.diagonal().array() += delta;
      Eigen::PartialPivLU<MatrixXd> lu(A);
      if (delta == 0.0 && !(lu.rcond() > 1e-13)) return false;
      d = lu.solve(rhs);
      d += lu.solve(rhs - A * d);  // one step of iterative refinement
      return d.allFinite();
    }
    Eigen::SparseMatrix<double> A = V_;
    if (delta > 0.0)
      for (int r = 0; r < inst_.dim; ++r) A.coeffRef(r, r) += delta;
    if (!analyzed_) {
      lu_.analyzePattern(A);
      analyzed_ = true;
    }
    lu_.factorize(A);
    if (lu_.info() != Eigen::Success) return false;
    d = lu_.solve(rhs);
    if (!d.allFinite()) return false;
    const VectorXd res = rhs - A * d;
    d += lu_.solve(res);
    if (!d.allFinite()) return false;
    if (delta == 0.0 && (rhs - A * d).norm() > 1e-6 * (1.0 + rhs.norm())) return false;
    return true;
  }

  const MCPInstance& inst_;
  const SolverOptions& opt_;
  bool dense_;
  bool analyzed_ = false;
  std::vector<Triplet> triplets_;
  Eigen::SparseMatrix<double> V_;
  Eigen::KLU<Eigen::SparseMatrix<double>> lu_;
};

}  // namespace detail

/// Free coordinates at 0, one-sided ones offset from their bound by the
/// initial multiplier, two-sided ones at the box midpoint.
inline VectorXd default_initial_point(const MCPInstance& inst, double offset = 0.1) {
  VectorXd z(inst.dim);
  for (int j = 0; j < inst.dim; ++j) {
    const double l = inst.lower[j], u = inst.upper[j];
    const bool has_l = std::isfinite(l), has_u = std::isfinite(u);
    if (has_l && has_u) {
      z[j] = 0.5 * (l + u);
    } else if (has_l) {
      z[j] = l + offset;
    } else if (has_u) {
      z[j] = u - offset;
    } else {
      z[j] = 0.0;
    }
  }
  return z;
}

/// Damped semismooth Newton method on the Fischer–Burmeister reformulation
/// Φ(z) = 0 of the MCP, with Armijo backtracking on ½‖Φ‖², steepest-descent
/// fallback and randomized restarts from the best iterate.
inline SolveReport solve(const MCPInstance& inst, const SolverOptions& opt = {},
                         const std::optional<VectorXd>& initial_guess = std::nullopt) {
  opt.validate();
  if (initial_guess && initial_guess->size() != inst.dim)
    throw Error(ErrorCode::kDimensionMismatch, "initial guess has wrong dimension");

  VectorXd z = initial_guess ? *initial_guess : default_initial_point(inst, opt.initial_multiplier);
  for (int j = 0; j < inst.dim; ++j) z[j] = std::clamp(z[j], inst.lower[j], inst.upper[j]);

  SolveReport report;
  detail::NewtonSystem system(inst, opt);
  std::mt19937_64 rng(opt.restart_seed);
  VectorXd F(inst.dim), phi, dz, dF, d, grad, trial, Ft, phit;
  VectorXd best_z = z;
  double best_merit = std::numeric_limits<double>::infinity();
  bool last_singular = false;
  std::deque<double> window;
  double mu = opt.smoothing;

  auto finish = [&](SolveStatus status, const VectorXd& zf) {
    report.status = status;
    report.z = zf;
    inst.residual(zf, F);
    detail::reformulate(inst, zf, F, phi, nullptr, nullptr);
    report.fb_residual = phi.size() ? phi.lpNorm<Eigen::Infinity>() : 0.0;
    report.natural_residual = detail::natural_residual(inst, zf, F);
    return report;
  };

  auto restart = [&]() -> bool {
    if (report.restarts >= opt.restarts) return false;
    ++report.restarts;
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    z = best_z;
    window.clear();
    mu = opt.smoothing;
    for (int j = 0; j < inst.dim; ++j) {
      if (std::isfinite(inst.lower[j]) || std::isfinite(inst.upper[j])) {
        const double base = std::isfinite(inst.lower[j]) ? std::max(z[j], inst.lower[j]) : z[j];
        z[j] = std::clamp(base + opt.initial_multiplier * unif(rng), inst.lower[j], inst.upper[j]);
      } else {
        z[j] += 1e-2 * (1.0 + std::abs(z[j])) * normal(rng);
      }
    }
    return true;
  };

  while (report.iterations < opt.max_iters) {
    inst.residual(z, F);
    detail::reformulate(inst, z, F, phi, &dz, &dF);
    const double res = phi.size() ? phi.lpNorm<Eigen::Infinity>() : 0.0;
    if (!std::isfinite(res) || res > opt.divergence_threshold) {
      if (restart()) continue;
      return finish(SolveStatus::kDiverged, z);
    }
    const double true_merit = 0.5 * phi.squaredNorm();
    report.merit_history.emplace_back(report.restarts, true_merit);
    if (true_merit < best_merit) {
      best_merit = true_merit;
      best_z = z;
    }
    if (res <= opt.tol) return finish(SolveStatus::kConverged, z);
    while (mu > 0.0) {
      detail::reformulate(inst, z, F, phi, &dz, &dF, mu);
      if (phi.lpNorm<Eigen::Infinity>() > mu) break;
      mu = mu * opt.smoothing_decrease < opt.tol ? 0.0 : mu * opt.smoothing_decrease;
      window.clear();
      if (mu == 0.0) detail::reformulate(inst, z, F, phi, &dz, &dF);
    }
    const double merit = 0.5 * phi.squaredNorm();
    window.push_back(merit);
    if (static_cast<int>(window.size()) > opt.nonmonotone_memory) window.pop_front();
    const double reference = *std::max_element(window.begin(), window.end());

    ++report.iterations;
    const bool ok = system.solve(z, dz, dF, -phi, d, grad, phi);
    last_singular = !ok;
    double slope = ok ? grad.dot(d) : 0.0;
    if (!ok || !(slope < -1e-12 * d.squaredNorm())) {
      if (system.lm_direction(std::max(opt.regularization_floor, std::sqrt(2.0 * merit)), grad, d) &&
          grad.dot(d) < 0.0) {
        slope = grad.dot(d);
        ++report.lm_steps;
      } else {
        d = -grad;
        slope = -grad.squaredNorm();
        ++report.gradient_steps;
      }
    }
    if (!(slope < 0.0)) {
      if (restart()) continue;
      return finish(last_singular ? SolveStatus::kSingular : SolveStatus::kMaxIters, best_z);
    }

    double t = 1.0;
    bool accepted = false;
    while (t > 1e-12) {
      trial = z + t * d;
      if (opt.project) trial = trial.cwiseMax(inst.lower).cwiseMin(inst.upper);
      inst.residual(trial, Ft);
      detail::reformulate(inst, trial, Ft, phit, nullptr, nullptr, mu);
      const double mt = 0.5 * phit.squaredNorm();
      if (std::isfinite(mt) && mt <= reference + opt.armijo * t * slope) {
        accepted = true;
        break;
      }
      t *= opt.backtrack;
    }
    if (!accepted) {
      if (restart()) continue;
      return finish(last_singular ? SolveStatus::kSingular : SolveStatus::kMaxIters, best_z);
    }
    z = trial;
  }
  inst.residual(z, F);
  detail::reformulate(inst, z, F, phi, nullptr, nullptr);
  if (phi.size() == 0 || phi.lpNorm<Eigen::Infinity>() <= opt.tol) return finish(SolveStatus::kConverged, z);
  return finish(SolveStatus::kMaxIters, 0.5 * phi.squaredNorm() < best_merit ? z : best_z);
}

struct MultistartReport {
  SolveReport best;
  /// Converged solutions whose primal parts differ by more than the distinct
  /// tolerance, in seed order of first discovery.
  std::vector<SolveReport> distinct;
  std::vector<SolveReport> all;
  int converged = 0;

  bool none_converged() const { return converged == 0; }
};

namespace detail {

/// Smaller natural residual wins; exact ties go to the lexicographically
/// smaller z.
inline bool better(const SolveReport& a, const SolveReport& b) {
  if (a.converged() != b.converged()) return a.converged();
  if (a.natural_residual != b.natural_residual) return a.natural_residual < b.natural_residual;
  return std::lexicographical_compare(a.z.data(), a.z.data() + a.z.size(), b.z.data(),
                                      b.z.data() + b.z.size());
}

}  // namespace detail

/// Runs `solve` from every seed point and keeps the best converged report.
/// Parallel execution yields the same result as sequential.
inline MultistartReport multistart_solve(const MCPInstance& inst, const SolverOptions& opt,
                                         std::span<const VectorXd> seeds, bool parallel = false,
                                         double distinct_tol = 1e-6) {
  if (seeds.empty()) throw Error(ErrorCode::kDomain, "multistart needs at least one seed");
  MultistartReport out;
  out.all.resize(seeds.size());
  if (parallel) {
    std::vector<std::future<SolveReport>> futures;
    for (const auto& s : seeds)
      futures.push_back(std::async(std::launch::async, [&inst, &opt, &s] { return solve(inst, opt, s); }));
    for (std::size_t k = 0; k < seeds.size(); ++k) out.all[k] = futures[k].get();
  } else {
    for (std::size_t k = 0; k < seeds.size(); ++k) out.all[k] = solve(inst, opt, seeds[k]);
  }
  int n = 0;
  for (const auto& b : inst.layout.x) n += b.size;
  out.best = out.all.front();
  for (const auto& r : out.all) {
    if (detail::better(r, out.best)) out.best = r;
    if (!r.converged()) continue;
    ++out.converged;
    const bool seen = std::any_of(out.distinct.begin(), out.distinct.end(), [&](const SolveReport& d) {
      return (d.z.head(n) - r.z.head(n)).lpNorm<Eigen::Infinity>() <= distinct_tol;
    });
    if (!seen) out.distinct.push_back(r);
  }
  return out;
}

}  // namespace gnep
