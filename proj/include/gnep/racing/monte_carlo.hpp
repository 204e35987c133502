#pragma once

#include <algorithm>
#include <atomic>
#include <map>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "gnep/racing/closed_loop.hpp"

namespace gnep::racing {

struct Range {
  double lo = 0.0;
  double hi = 0.0;
  double draw(std::mt19937_64& rng) const { return std::uniform_real_distribution<double>(lo, hi)(rng); }
};

/// Sampling ranges relative to the track length L and half-width H.
struct Randomization {
  Range opponent_s_fraction{0.0, 1.0};  // × L
  Range ego_relative_s{-1.75, -1.5};
  Range opponent_v{1.0, 2.0};
  Range ego_relative_v{0.25, 0.75};
  Range ego_e_fraction{-1.0 / 3.0, 1.0 / 3.0};       // × H
  Range opponent_relative_e_fraction{-0.125, 0.125};  // × H
};

struct Strategy {
  std::string name;
  double alpha_ego = 1.0;
};

struct MonteCarloConfig {
  std::shared_ptr<const Track> track = std::make_shared<const Track>(Track::l_shaped());
  CarParams opponent{2.85, 3.0, 0.4};
  CarParams ego{3.0, 3.0, 0.4};
  RaceParams race;
  double duration = 2.0;
  double alpha_opp_model = 1.0;
  std::vector<Strategy> strategies{{"normalized", 1.0}, {"non-normalized", 0.05}};
  Randomization randomization;
  SolverOptions solver = RaceScenario::racing_solver_options();
  int workers = 1;

  void validate() const {
    if (!track) throw Error(ErrorCode::kDomain, "config has no track");
    if (strategies.empty()) throw Error(ErrorCode::kDomain, "at least one strategy is required");
    if (workers < 1) throw Error(ErrorCode::kDomain, "workers must be at least 1");
    race.validate();
  }
};

struct RunSample {
  CarState opponent;
  CarState ego;
};

struct RunResult {
  int index = 0;
  RunSample sample;
  std::vector<int> verdict;  // per strategy: 1 win, 0 loss, -1 failed
  std::vector<bool> degraded;
  std::vector<double> final_gap;  // ego s − opponent s
  std::vector<std::string> error;
  std::vector<double> solve_ms;   // every per-car solve of the run
};

struct StrategySummary {
  std::string name;
  double alpha_ego = 0.0;
  int runs = 0;
  int wins = 0;
  int failed = 0;
  int degraded = 0;
  double win_rate() const { return runs - failed > 0 ? static_cast<double>(wins) / (runs - failed) : 0.0; }
};

struct MonteCarloResult {
  std::uint64_t seed = 0;
  std::vector<StrategySummary> summary;
  std::vector<RunResult> runs;
  double median_solve_ms = 0.0;
  double p90_solve_ms = 0.0;
};

/// Initial conditions of run `index`; depends only on (seed, index).
inline RunSample sample_run(const MonteCarloConfig& cfg, std::uint64_t seed, int index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index)};
  std::mt19937_64 rng(seq);
  const Randomization& r = cfg.randomization;
  const double L = cfg.track->length(), H = cfg.track->half_width();
  const double so = r.opponent_s_fraction.draw(rng) * L;
  const double se = so + r.ego_relative_s.draw(rng);
  const double vo = r.opponent_v.draw(rng);
  const double ve = vo + r.ego_relative_v.draw(rng);
  const double ee = r.ego_e_fraction.draw(rng) * H;
  const double eo = ee + r.opponent_relative_e_fraction.draw(rng) * H;
  return {make_state(*cfg.track, so, eo, std::min(vo, cfg.opponent.v_max)),
          make_state(*cfg.track, se, ee, std::min(ve, cfg.ego.v_max))};
}

inline RunResult run_paired(const MonteCarloConfig& cfg, std::uint64_t seed, int index) {
  RunResult out;
  out.index = index;
  out.sample = sample_run(cfg, seed, index);
  RaceScenario sc{cfg.track, {out.sample.opponent, out.sample.ego}, {cfg.opponent, cfg.ego}, cfg.race, cfg.duration,
                  cfg.solver};
  for (const auto& st : cfg.strategies) {
    try {
      const RaceOutcome o = simulate_closed_loop(sc, st.alpha_ego, cfg.alpha_opp_model);
      out.verdict.push_back(o.ego_wins ? 1 : 0);
      out.degraded.push_back(o.degraded);
      out.final_gap.push_back(o.final_s[1] - o.final_s[0]);
      out.error.emplace_back();
      for (const auto& step : o.steps) {
        out.solve_ms.push_back(step.cars[0].solve_ms);
        if (!step.shared_solve) out.solve_ms.push_back(step.cars[1].solve_ms);
      }
    } catch (const Error& e) {
      out.verdict.push_back(-1);
      out.degraded.push_back(false);
      out.final_gap.push_back(std::numeric_limits<double>::quiet_NaN());
      out.error.emplace_back(e.what());
    }
  }
  return out;
}

/// Paired-seed study: every run replays identical initial conditions under
/// each ego strategy against an opponent that assumes the normalized game.
inline MonteCarloResult monte_carlo(const MonteCarloConfig& cfg, int n_runs, std::uint64_t seed) {
  cfg.validate();
  if (n_runs < 0) throw Error(ErrorCode::kDomain, "run count must be non-negative");
  MonteCarloResult res;
  res.seed = seed;
  res.runs.resize(static_cast<std::size_t>(n_runs));
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i = next++; i < n_runs; i = next++) res.runs[static_cast<std::size_t>(i)] = run_paired(cfg, seed, i);
  };
  const int nw = std::min(cfg.workers, std::max(n_runs, 1));
  std::vector<std::thread> pool;
  for (int w = 1; w < nw; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::vector<double> ms;
  for (std::size_t s = 0; s < cfg.strategies.size(); ++s) {
    StrategySummary sum{cfg.strategies[s].name, cfg.strategies[s].alpha_ego};
    for (const auto& r : res.runs) {
      ++sum.runs;
      if (r.verdict[s] < 0) ++sum.failed;
      if (r.verdict[s] == 1) ++sum.wins;
      if (r.degraded[s]) ++sum.degraded;
    }
    res.summary.push_back(sum);
  }
  for (const auto& r : res.runs) ms.insert(ms.end(), r.solve_ms.begin(), r.solve_ms.end());
  if (!ms.empty()) {
    std::sort(ms.begin(), ms.end());
    res.median_solve_ms = ms[ms.size() / 2];
    res.p90_solve_ms = ms[ms.size() * 9 / 10];
  }
  return res;
}

}  // namespace gnep::racing
