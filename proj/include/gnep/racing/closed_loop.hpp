#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <future>
#include <optional>
#include <vector>

#include "gnep/racing/race_game.hpp"

namespace gnep::racing {

/// Car 0 is the opponent (player 1), car 1 the ego (player 2). A scenario
/// with a single car drives car 0 alone.
struct RaceScenario {
  std::shared_ptr<const Track> track;
  std::vector<CarState> initial;
  std::vector<CarParams> cars;
  RaceParams race;
  double duration = 2.0;
  SolverOptions solver = racing_solver_options();
  bool parallel_cars = false;

  static SolverOptions racing_solver_options() {
    SolverOptions o;
    o.max_iters = 100;
    o.restarts = 2;
    o.nonmonotone_memory = 10;
    o.smoothing = 0.01;
    return o;
  }

  int steps() const { return static_cast<int>(std::lround(duration / race.dt)); }

  void validate() const {
    if (!track) throw Error(ErrorCode::kDomain, "scenario has no track");
    if (initial.empty() || initial.size() > 2 || cars.size() != initial.size())
      throw Error(ErrorCode::kDimensionMismatch, "scenario needs one or two cars with parameters");
    if (!(duration > 0.0)) throw Error(ErrorCode::kDomain, "duration must be positive");
    race.validate();
    solver.validate();
  }
};

struct CarStepRecord {
  CarInput input;
  SolveStatus status = SolveStatus::kMaxIters;
  int iterations = 0;
  int attempts = 0;
  double solve_ms = 0.0;
  bool degraded = false;
  double min_planned_gap = std::numeric_limits<double>::infinity();
};

struct StepRecord {
  double time = 0.0;
  std::vector<CarState> states;  // before the step
  std::vector<CarStepRecord> cars;
  bool shared_solve = false;
};

struct RaceOutcome {
  std::vector<std::vector<CarState>> trajectories;  // per car, steps + 1 states
  std::vector<StepRecord> steps;
  std::vector<double> final_s;
  bool ego_wins = false;
  bool degraded = false;
  int failed_solves = 0;
  double min_gap = std::numeric_limits<double>::infinity();  // realized, over all states
};

namespace detail {

inline double planned_gap(const RaceGame& rg, const VectorXd& x) {
  if (rg.cars.size() < 2) return std::numeric_limits<double>::infinity();
  double gap = std::numeric_limits<double>::infinity();
  for (int k = 1; k < rg.race.horizon; ++k) {
    const double dx = x[rg.cars[0].state(k, CarLayout::kX)] - x[rg.cars[1].state(k, CarLayout::kX)];
    const double dy = x[rg.cars[0].state(k, CarLayout::kY)] - x[rg.cars[1].state(k, CarLayout::kY)];
    gap = std::min(gap, std::hypot(dx, dy));
  }
  return gap;
}

struct ModelSolve {
  StepSolve result;
  double ms = 0.0;
  double gap = std::numeric_limits<double>::infinity();
};

inline ModelSolve solve_model(const RaceScenario& sc, const std::vector<CarState>& states, double alpha,
                              const std::optional<VectorXd>& warm) {
  const RaceGame rg = build_race_game(sc.track, states, sc.cars, sc.race, alpha, false);
  const auto t0 = std::chrono::steady_clock::now();
  ModelSolve out;
  out.result = solve_race(rg, sc.solver, warm ? std::optional<VectorXd>(shift_solution(rg, *warm)) : std::nullopt);
  out.ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  if (out.result.solution.converged()) out.gap = planned_gap(rg, out.result.solution.x);
  return out;
}

}  // namespace detail

/// Receding-horizon race: at every step each car solves its own horizon game
/// (ego with A_2 = α_ego I, opponent with A_2 = α_opp_model I), applies its
/// first planned input and both states advance by the bicycle model.
inline RaceOutcome simulate_closed_loop(const RaceScenario& sc, double alpha_ego, double alpha_opp_model = 1.0) {
  sc.validate();
  if (!(alpha_ego > 0.0) || !(alpha_opp_model > 0.0)) throw Error(ErrorCode::kInvalidFactor, "alpha must be positive");
  const std::size_t M = sc.initial.size();
  const int T = sc.steps();
  build_race_game(sc.track, sc.initial, sc.cars, sc.race, alpha_ego);
  auto gap = [&](const std::vector<CarState>& s) {
    return M < 2 ? std::numeric_limits<double>::infinity() : std::hypot(s[0].X - s[1].X, s[0].Y - s[1].Y);
  };
  const bool shared = M == 1 || alpha_ego == alpha_opp_model;

  RaceOutcome out;
  out.trajectories.assign(M, {});
  std::vector<CarState> x = sc.initial;
  for (std::size_t c = 0; c < M; ++c) out.trajectories[c].push_back(x[c]);
  out.min_gap = gap(x);
  std::vector<CarInput> held(M, CarInput{0.0, 0.0});
  // warm[c]: previous z of the game car c solves (car 1 is unused when shared)
  std::vector<std::optional<VectorXd>> warm(M);

  for (int step = 0; step < T; ++step) {
    StepRecord rec;
    rec.time = step * sc.race.dt;
    rec.states = x;
    rec.shared_solve = shared;
    rec.cars.resize(M);

    std::vector<detail::ModelSolve> solves(shared ? 1 : 2);
    const std::vector<double> alphas = shared ? std::vector<double>{alpha_ego} : std::vector<double>{alpha_opp_model, alpha_ego};
    if (!shared && sc.parallel_cars) {
      auto f = std::async(std::launch::async, [&] { return detail::solve_model(sc, x, alphas[0], warm[0]); });
      solves[1] = detail::solve_model(sc, x, alphas[1], warm[1]);
      solves[0] = f.get();
    } else {
      for (std::size_t g = 0; g < solves.size(); ++g) solves[g] = detail::solve_model(sc, x, alphas[g], warm[g]);
    }

    for (const auto& ms : solves) out.failed_solves += ms.result.solution.converged() ? 0 : 1;
    const RaceGame layout_game = build_race_game(sc.track, x, sc.cars, sc.race, 1.0, false);
    for (std::size_t c = 0; c < M; ++c) {
      const std::size_t g = shared ? 0 : c;
      const detail::ModelSolve& ms = solves[g];
      CarStepRecord& cr = rec.cars[c];
      cr.status = ms.result.solution.status;
      cr.iterations = ms.result.solution.iterations;
      cr.attempts = ms.result.attempts;
      cr.solve_ms = ms.ms;
      cr.min_planned_gap = ms.gap;
      if (ms.result.solution.converged()) {
        const Plan p = extract_plan(layout_game, ms.result.solution.x, static_cast<int>(c));
        held[c] = p.inputs.front();
        warm[g] = ms.result.solution.z;
      } else {
        cr.degraded = true;
        out.degraded = true;
        warm[g].reset();
        const double v_next = x[c].v + sc.race.dt * held[c].a;
        if (v_next > sc.cars[c].v_max || v_next < 0.0)
          held[c].a = (std::clamp(v_next, 0.0, sc.cars[c].v_max) - x[c].v) / sc.race.dt;
      }
      cr.input = held[c];
    }
    for (std::size_t c = 0; c < M; ++c) {
      x[c] = bicycle_step(x[c], held[c], *sc.track, sc.race.dt, sc.race.wheelbase);
      out.trajectories[c].push_back(x[c]);
    }
    out.min_gap = std::min(out.min_gap, gap(x));
    out.steps.push_back(std::move(rec));
  }
  for (const auto& xc : x) out.final_s.push_back(xc.s);
  out.ego_wins = M == 1 || out.final_s[1] > out.final_s[0];
  return out;
}

}  // namespace gnep::racing
