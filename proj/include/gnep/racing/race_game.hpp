#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "gnep/equilibrium.hpp"
#include "gnep/racing/bicycle.hpp"

namespace gnep::racing {

struct CarParams {
  double v_max = 3.0;
  double a_max = 3.0;
  double delta_max = 0.4;
};

struct RaceParams {
  int horizon = 10;
  double dt = 0.1;
  double beta = 0.1;  // control effort weight
  double d_safe = 0.4;
  double wheelbase = 0.25;

  void validate() const {
    if (horizon < 1) throw Error(ErrorCode::kDomain, "horizon must be at least 1");
    if (!(dt > 0.0)) throw Error(ErrorCode::kDomain, "time step must be positive");
    if (!(d_safe > 0.0)) throw Error(ErrorCode::kDomain, "safety distance must be positive");
    if (!(wheelbase > 0.0) || !(beta >= 0.0)) throw Error(ErrorCode::kDomain, "invalid car parameters");
  }
};

/// Index map of one car's decision vector: inputs u_0..u_{N-1} as (a, δ),
/// then states x_1..x_N as (v, ψ, s, e, X, Y).
struct CarLayout {
  int horizon = 0;
  int offset = 0;

  enum StateField { kV = 0, kPsi, kS, kE, kX, kY };
  static constexpr int kStateSize = 6;

  int size() const { return 8 * horizon; }
  int input(int k, int j) const { return offset + 2 * k + j; }
  int state(int k, StateField f) const { return offset + 2 * horizon + kStateSize * (k - 1) + f; }
};

struct RaceGame {
  GameSpec game;
  FactorAssignment factors;
  std::vector<CarLayout> cars;
  std::vector<CarState> initial;
  std::vector<CarParams> params;
  RaceParams race;
  std::shared_ptr<const Track> track;
  bool relaxed_first_step = false;  // a k = 1 row fixed by x_0 was moved off its bound
};

namespace detail {

template <int K, typename Eval>
SmoothScalarFunction slot_function(const std::array<int, K>& support, Eval eval) {
  return SmoothScalarFunction::autodiff<K>(support, eval);
}

/// One dynamics row: `field` of x_k minus its Euler prediction from x_{k-1}
/// (constant when k = 1) and u_{k-1}. Each row depends only on the
/// variables its field uses.
inline SmoothScalarFunction dynamics_row(const std::shared_ptr<const Track>& track, const RaceParams& rp,
                                         const CarLayout& L, const CarState& x0, int k, int field) {
  const double dt = rp.dt, wb = rp.wheelbase;
  const int next = L.state(k, static_cast<CarLayout::StateField>(field));
  const int a = L.input(k - 1, 0), d = L.input(k - 1, 1);
  const auto next_poly = Polynomial::variable(next);
  if (field == CarLayout::kV) {
    const Polynomial prev = k == 1 ? Polynomial::constant(x0.v) : Polynomial::variable(L.state(k - 1, CarLayout::kV));
    return SmoothScalarFunction::from_polynomial(next_poly - prev - Polynomial::variable(a, dt));
  }
  if (k == 1) {
    const auto n = euler_step<double>(*track, wb, dt, x0.v, x0.psi, x0.s, x0.e, 0.0, 0.0);
    if (field != CarLayout::kPsi)
      return SmoothScalarFunction::from_polynomial(next_poly - Polynomial::constant(n[static_cast<std::size_t>(field)]));
    const auto rate = progress_rate(*track, x0.v, x0.psi, x0.s, x0.e);
    return slot_function<2>({d, next}, [dt, wb, x0, rate](const auto& z) {
      using T = std::decay_t<decltype(z[0])>;
      const std::array<T, 2> r{lift<T>(rate[0]), lift<T>(rate[1])};
      return z[1] - (lift<T>(x0.psi) + lift<T>(dt) * heading_rate(wb, lift<T>(x0.v), z[0], r));
    });
  }
  const int v = L.state(k - 1, CarLayout::kV), p = L.state(k - 1, CarLayout::kPsi);
  const int s = L.state(k - 1, CarLayout::kS), e = L.state(k - 1, CarLayout::kE);
  switch (field) {
    case CarLayout::kPsi:
      return slot_function<6>({v, p, s, e, d, next}, [track, dt, wb](const auto& z) {
        using T = std::decay_t<decltype(z[0])>;
        const auto r = progress_rate(*track, z[0], z[1], z[2], z[3]);
        return z[5] - (z[1] + lift<T>(dt) * heading_rate(wb, z[0], z[4], r));
      });
    case CarLayout::kS:
      return slot_function<5>({v, p, s, e, next}, [track, dt](const auto& z) {
        using T = std::decay_t<decltype(z[0])>;
        return z[4] - (z[2] + lift<T>(dt) * progress_rate(*track, z[0], z[1], z[2], z[3])[0]);
      });
    default:
      return slot_function<4>({v, p, e, next}, [dt](const auto& z) {
        using T = std::decay_t<decltype(z[0])>;
        using std::sin;
        return z[3] - (z[2] + lift<T>(dt) * z[0] * sin(z[1]));
      });
  }
}

inline SmoothScalarFunction position_row(const std::shared_ptr<const Track>& track, const CarLayout& L, int k,
                                         int coord) {
  const int s = L.state(k, CarLayout::kS), e = L.state(k, CarLayout::kE);
  const int out = L.state(k, coord == 0 ? CarLayout::kX : CarLayout::kY);
  return slot_function<3>({s, e, out}, [track, coord](const auto& z) {
    return z[2] - track->position(z[0], z[1])[static_cast<std::size_t>(coord)];
  });
}

inline SmoothScalarFunction linear(int index, double coeff, double constant) {
  return SmoothScalarFunction::from_polynomial(Polynomial::variable(index, coeff) + Polynomial::constant(constant));
}

}  // namespace detail

/// Two-car (or single-car) racing game over the horizon. Car 0 is player 1
/// with A_1 = I; car 1 is player 2 with A_2 = αI.
inline RaceGame build_race_game(std::shared_ptr<const Track> track, const std::vector<CarState>& initial,
                                const std::vector<CarParams>& cars, const RaceParams& rp, double alpha = 1.0,
                                bool check_collision = true) {
  rp.validate();
  if (initial.empty() || initial.size() > 2 || cars.size() != initial.size())
    throw Error(ErrorCode::kDimensionMismatch, "race game needs one or two cars with parameters");
  if (!(alpha > 0.0)) throw Error(ErrorCode::kInvalidFactor, "alpha must be positive");
  const int N = rp.horizon;
  const int M = static_cast<int>(initial.size());
  if (M == 2 && check_collision) {
    const double dx = initial[0].X - initial[1].X, dy = initial[0].Y - initial[1].Y;
    if (dx * dx + dy * dy < rp.d_safe * rp.d_safe)
      throw Error(ErrorCode::kInitialCollision, "cars start closer than the safety distance");
  }

  std::vector<CarLayout> layouts;
  for (int c = 0; c < M; ++c) layouts.push_back({N, c * 8 * N});

  // x_1's s and e are fixed by x_0, so k = 1 rows on them are constants;
  // violated or active ones are moved to strictly inactive.
  constexpr double kRelax = 1e-3;
  std::vector<std::array<double, 2>> pinned;
  for (const auto& x0 : initial) {
    const auto n = euler_step<double>(*track, rp.wheelbase, rp.dt, x0.v, x0.psi, x0.s, x0.e, 0.0, 0.0);
    pinned.push_back(track->position(n[2], n[3]));
  }
  std::vector<double> first_e_bound;
  for (const auto& x0 : initial) {
    const double e1 = euler_step<double>(*track, rp.wheelbase, rp.dt, x0.v, x0.psi, x0.s, x0.e, 0.0, 0.0)[3];
    first_e_bound.push_back(std::abs(e1) > track->half_width() - kRelax ? std::abs(e1) + kRelax : track->half_width());
  }
  bool relaxed = false;

  std::vector<PlayerSpec> players(static_cast<std::size_t>(M));
  for (int c = 0; c < M; ++c) {
    const CarLayout& L = layouts[static_cast<std::size_t>(c)];
    const CarParams& cp = cars[static_cast<std::size_t>(c)];
    PlayerSpec& p = players[static_cast<std::size_t>(c)];
    p.name = c == 0 ? "car1" : "car2";
    p.dim = L.size();

    Polynomial cost = Polynomial::variable(L.state(N, CarLayout::kS), -1.0);
    if (M == 2) cost = cost + Polynomial::variable(layouts[static_cast<std::size_t>(1 - c)].state(N, CarLayout::kS));
    for (int k = 0; k < N; ++k)
      for (int j = 0; j < 2; ++j) cost = cost + 0.5 * rp.beta * Polynomial::variable(L.input(k, j)).pow(2);
    p.cost = SmoothScalarFunction::from_polynomial(cost);

    for (int k = 1; k <= N; ++k) {
      for (int f = 0; f < 4; ++f) p.eq_constraints.push_back(detail::dynamics_row(track, rp, L, initial[static_cast<std::size_t>(c)], k, f));
      p.eq_constraints.push_back(detail::position_row(track, L, k, 0));
      p.eq_constraints.push_back(detail::position_row(track, L, k, 1));
    }
    for (int k = 0; k < N; ++k) {
      p.ineq_constraints.push_back(detail::linear(L.input(k, 0), 1.0, -cp.a_max));
      p.ineq_constraints.push_back(detail::linear(L.input(k, 0), -1.0, -cp.a_max));
      p.ineq_constraints.push_back(detail::linear(L.input(k, 1), 1.0, -cp.delta_max));
      p.ineq_constraints.push_back(detail::linear(L.input(k, 1), -1.0, -cp.delta_max));
    }
    for (int k = 1; k <= N; ++k) {
      const double H = k == 1 ? first_e_bound[static_cast<std::size_t>(c)] : track->half_width();
      relaxed = relaxed || H != track->half_width();
      p.ineq_constraints.push_back(detail::linear(L.state(k, CarLayout::kE), 1.0, -H));
      p.ineq_constraints.push_back(detail::linear(L.state(k, CarLayout::kE), -1.0, -H));
      p.ineq_constraints.push_back(detail::linear(L.state(k, CarLayout::kV), 1.0, -cp.v_max));
      p.ineq_constraints.push_back(detail::linear(L.state(k, CarLayout::kV), -1.0, 0.0));
    }
  }

  std::vector<SmoothScalarFunction> shared;
  if (M == 2) {
    for (int k = 1; k <= N - 1; ++k) {
      const Polynomial dx = Polynomial::variable(layouts[0].state(k, CarLayout::kX)) -
                            Polynomial::variable(layouts[1].state(k, CarLayout::kX));
      const Polynomial dy = Polynomial::variable(layouts[0].state(k, CarLayout::kY)) -
                            Polynomial::variable(layouts[1].state(k, CarLayout::kY));
      double r2 = rp.d_safe * rp.d_safe;
      if (k == 1) {
        const double px = pinned[0][0] - pinned[1][0], py = pinned[0][1] - pinned[1][1];
        const double d2 = px * px + py * py;
        if (d2 < r2 + kRelax) {
          r2 = d2 - kRelax;
          relaxed = true;
        }
      }
      shared.push_back(SmoothScalarFunction::from_polynomial(Polynomial::constant(r2) - dx * dx - dy * dy));
    }
  }
  GameSpec game = build_game(std::move(players), std::move(shared));
  const int m0 = game.num_shared();
  FactorAssignment factors = M == 2 ? FactorAssignment({VectorXd::Ones(m0), VectorXd::Constant(m0, alpha)}, FactorRule::kFirstPlayerIdentity)
                      : FactorAssignment::identity(1, m0);
  return RaceGame{std::move(game), std::move(factors), std::move(layouts), initial, cars, rp, std::move(track), relaxed};
}

/// Open-loop plan of one car extracted from a game solution.
struct Plan {
  std::vector<CarInput> inputs;
  std::vector<CarState> states;  // x_1..x_N
};

inline Plan extract_plan(const RaceGame& rg, const VectorXd& x, int car) {
  const CarLayout& L = rg.cars.at(static_cast<std::size_t>(car));
  Plan p;
  for (int k = 0; k < L.horizon; ++k) p.inputs.push_back({x[L.input(k, 0)], x[L.input(k, 1)]});
  for (int k = 1; k <= L.horizon; ++k)
    p.states.push_back({x[L.state(k, CarLayout::kV)], x[L.state(k, CarLayout::kPsi)], x[L.state(k, CarLayout::kS)],
                        x[L.state(k, CarLayout::kE)], x[L.state(k, CarLayout::kX)], x[L.state(k, CarLayout::kY)]});
  return p;
}

/// Start point from an open-loop rollout under constant acceleration and a
/// lane-keeping steering law that holds each car's initial offset.
inline VectorXd rollout_start(const RaceGame& rg, const MCPInstance& inst, double accel) {
  VectorXd z = default_initial_point(inst, 0.0);
  const RaceParams& rp = rg.race;
  for (std::size_t c = 0; c < rg.cars.size(); ++c) {
    const CarLayout& L = rg.cars[c];
    const CarParams& cp = rg.params[c];
    CarState x = rg.initial[c];
    const double e_ref = std::clamp(x.e, -0.8 * rg.track->half_width(), 0.8 * rg.track->half_width());
    for (int k = 0; k < L.horizon; ++k) {
      double a = std::clamp(accel, -cp.a_max, cp.a_max);
      if (x.v + rp.dt * a > cp.v_max || x.v + rp.dt * a < 0.0) a = 0.0;
      const double kappa = rg.track->smooth_curvature(x.s);
      const double steer = std::atan(rp.wheelbase * (kappa - 4.0 * (x.e - e_ref) - 4.0 * x.psi));
      const CarInput u{a, std::clamp(steer, -cp.delta_max, cp.delta_max)};
      z[L.input(k, 0)] = u.a;
      z[L.input(k, 1)] = u.delta;
      x = bicycle_step(x, u, *rg.track, rp.dt, rp.wheelbase);
      const double vals[6] = {x.v, x.psi, x.s, x.e, x.X, x.Y};
      for (int f = 0; f < 6; ++f) z[L.state(k + 1, static_cast<CarLayout::StateField>(f))] = vals[f];
    }
  }
  return z;
}

/// Moves every per-step quantity of a previous solution one step forward
/// in time and repeats the last step.
inline VectorXd shift_solution(const RaceGame& rg, const VectorXd& z) {
  VectorXd out = z;
  const VariableLayout lay = gnep::detail::make_layout(rg.game, gnep::detail::SharedMode::kScaled);
  const int N = rg.race.horizon;
  auto shift = [&](int offset, int steps, int width) {
    for (int k = 0; k + 1 < steps; ++k)
      for (int j = 0; j < width; ++j) out[offset + k * width + j] = z[offset + (k + 1) * width + j];
  };
  for (std::size_t c = 0; c < rg.cars.size(); ++c) {
    const CarLayout& L = rg.cars[c];
    shift(L.offset, N, 2);
    shift(L.offset + 2 * N, N, 6);
    shift(lay.mu[c].offset, N, 6);
    shift(lay.lambda[c].offset, N, 4);
    shift(lay.lambda[c].offset + 4 * N, N, 4);
  }
  if (!lay.sigma.empty() && lay.sigma[0].size > 1) shift(lay.sigma[0].offset, lay.sigma[0].size, 1);
  return out;
}

struct StepSolve {
  GNESolution solution;
  int attempts = 0;
};

/// Solves the horizon game from the warm start, then from rollouts.
inline StepSolve solve_race(const RaceGame& rg, const SolverOptions& opt, const std::optional<VectorXd>& warm) {
  const MCPInstance inst = assemble_scaled(rg.game, rg.factors);
  std::vector<VectorXd> starts;
  if (warm && warm->size() == inst.dim) starts.push_back(*warm);
  for (double a : {rg.params.front().a_max, 0.0, -0.5 * rg.params.front().a_max}) starts.push_back(rollout_start(rg, inst, a));
  StepSolve out;
  for (const auto& s : starts) {
    ++out.attempts;
    out.solution = make_solution(rg.game, rg.factors, inst.layout, solve(inst, opt, s));
    if (out.solution.converged()) break;
  }
  return out;
}

}  // namespace gnep::racing
