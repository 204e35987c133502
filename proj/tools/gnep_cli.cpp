#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "gnep/gnep.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace gnep;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitNumerical = 2;

/// Input problems found by the CLI itself.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string out;
  double tol = 1e-8;
  std::uint64_t seed = 0;
};

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("gnep");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  const char* env = std::getenv("GNEP_LOG");
  spdlog::set_level(env ? spdlog::level::from_str(env) : spdlog::level::warn);
}

std::vector<double> parse_list(const std::string& text, const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError(what + ": '" + item + "' is not a number");
    }
  }
  if (out.empty()) throw UsageError(what + " is empty");
  return out;
}

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> parts;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ':');) {
    try {
      parts.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw UsageError("--grid: '" + item + "' is not a number");
    }
  }
  if (parts.size() != 3 || !(parts[2] > 0.0) || parts[1] < parts[0]) throw UsageError("--grid expects lo:hi:step");
  std::vector<double> grid;
  const auto n = static_cast<long>(std::floor((parts[1] - parts[0]) / parts[2] + 1e-9));
  for (long k = 0; k <= n; ++k) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", parts[0] + static_cast<double>(k) * parts[2]);
    grid.push_back(std::stod(buf));
  }
  return grid;
}

json vec(const VectorXd& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

json vecs(const std::vector<VectorXd>& vs) {
  json j = json::array();
  for (const auto& v : vs) j.push_back(vec(v));
  return j;
}

json solution_json(const io::GameScenario& sc, const GNESolution& s) {
  json j;
  j["status"] = to_string(s.status);
  j["iterations"] = s.iterations;
  json x;
  for (std::size_t k = 0; k < sc.variables.size(); ++k) x[sc.variables[k]] = s.x[static_cast<Eigen::Index>(k)];
  j["x"] = x;
  j["costs"] = s.costs;
  j["mu"] = vecs(s.mu);
  j["lambda"] = vecs(s.lambda);
  j["sigma"] = vec(s.sigma);
  j["sigma_effective"] = vecs(s.sigma_effective);
  j["residual"] = s.residual.overall;
  j["unscaled_residual"] = s.unscaled_residual.overall;
  return j;
}

/// Writes `text` to `<out>/<name>` when an output directory is set,
/// otherwise to stdout.
void emit(const Common& c, const std::string& name, const std::string& text) {
  if (c.out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(fs::path(c.out) / name, std::ios::binary);
  if (!f) throw Error(ErrorCode::kIo, "cannot write " + name);
  f << text;
  spdlog::info("wrote {}", (fs::path(c.out) / name).string());
}

void finish_manifest(const Common& c, const io::RunManifest& m) {
  if (!c.out.empty()) m.write(c.out);
}

io::RunManifest manifest(const std::string& sub, const std::string& path, const Common& c) {
  io::RunManifest m;
  m.subcommand = sub;
  m.scenario_path = path;
  m.scenario_sha256 = io::sha256_hex(io::read_file(path));
  m.output_dir = c.out;
  m.seed = c.seed;
  m.options["tol"] = io::format_double(c.tol);
  if (!c.out.empty()) io::prepare_output_dir(c.out);
  return m;
}

io::FamilySpec family_for(const io::GameScenario& sc, const std::string& rule) {
  io::FamilySpec f = sc.family;
  if (rule.empty()) return f;
  const auto kind = io::parse_family_kind(rule);
  if (!kind || *kind == io::FamilyKind::kPair) throw UsageError("--rule must be first-identity or sum-to-one");
  if (*kind != f.kind) f = io::FamilySpec{*kind};
  return f;
}

FactorRule rule_of(io::FamilyKind k) {
  return k == io::FamilyKind::kSumToOne ? FactorRule::kSumToOne : FactorRule::kFirstPlayerIdentity;
}

// ---------------------------------------------------------------------------

struct SolveArgs {
  std::string file, alpha, rule;
  int seeds = 192;
};

int cmd_solve(const SolveArgs& a, const Common& c) {
  const io::GameScenario sc = io::load_game(a.file);
  io::RunManifest m = manifest("solve", a.file, c);
  const io::FamilySpec fs = family_for(sc, a.rule);
  const int M = sc.game.num_players(), m0 = sc.game.num_shared();

  FactorAssignment factors = FactorAssignment::identity(M, m0);
  if (!a.alpha.empty()) {
    const auto values = parse_list(a.alpha, "--alpha");
    if (values.size() == 1) {
      const FactorFamily family = io::make_family(sc, fs);
      if (!family.contains(values[0]))
        throw UsageError("--alpha " + a.alpha + " outside the " + io::to_string(fs.kind) + " family's domain");
      factors = family.at(values[0]);
    } else {
      if (fs.kind == io::FamilyKind::kPair) throw UsageError("a factor list needs --rule");
      try {
        factors = make_factors(M, m0, rule_of(fs.kind), values);
      } catch (const Error& e) {
        throw UsageError(std::string("--alpha: ") + e.what());
      }
    }
  }
  SolverOptions opt;
  opt.tol = c.tol;
  m.options["alpha"] = a.alpha.empty() ? "normalized" : a.alpha;
  m.options["family"] = io::to_string(fs.kind);
  m.options["seeds"] = std::to_string(a.seeds);
  if (a.seeds < 1) throw UsageError("--seeds must be at least 1");

  const MCPInstance inst = assemble_scaled(sc.game, factors);
  const auto seeds = random_seeds(inst, a.seeds, c.seed);
  const EquilibriumSet set = find_equilibria(sc.game, factors, opt, seeds);

  json doc;
  doc["game"] = sc.name;
  doc["manifest_sha256"] = m.hash();
  doc["seed"] = c.seed;
  doc["factors"] = vecs(factors.diagonals());
  doc["converged_starts"] = set.converged;
  json cands = json::array();
  if (set.distinct.empty()) {
    cands.push_back(solution_json(sc, set.best));
  } else {
    for (const auto& s : set.distinct) cands.push_back(solution_json(sc, s));
  }
  doc["candidates"] = cands;
  emit(c, "solution.json", doc.dump(2) + "\n");
  finish_manifest(c, m);
  if (set.converged == 0) {
    spdlog::error("no start converged (best status {})", to_string(set.best.status));
    return kExitNumerical;
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct SweepArgs {
  std::string file, grid, rule;
  bool cold = false;
};

int cmd_sweep(const SweepArgs& a, const Common& c) {
  const io::GameScenario sc = io::load_game(a.file);
  io::RunManifest m = manifest("sweep", a.file, c);
  const io::FamilySpec fs = family_for(sc, a.rule);
  const FactorFamily family = io::make_family(sc, fs);
  const auto grid = parse_grid(a.grid);
  for (double g : grid)
    if (!family.contains(g)) throw UsageError("grid point " + io::format_double(g) + " outside the family's domain");
  SweepOptions opt;
  opt.solver.tol = c.tol;
  opt.warm_start = !a.cold;
  m.options["grid"] = a.grid;
  m.options["family"] = io::to_string(fs.kind);
  m.options["warm_start"] = a.cold ? "0" : "1";
  const SweepResult r = sweep(sc.game, family, grid, opt);

  std::ostringstream out;
  io::CsvWriter csv(out);
  csv.comment(m.stamp());
  std::vector<std::string> cols{"alpha", "status", "jump"};
  for (const auto& v : sc.variables) cols.push_back(v);
  for (int i = 0; i < sc.game.num_players(); ++i) cols.push_back("cost" + std::to_string(i + 1));
  for (int j = 0; j < sc.game.num_shared(); ++j) cols.push_back("sigma" + std::to_string(j + 1));
  csv.header(cols);
  bool all = true;
  for (const auto& e : r.entries) {
    csv << e.alpha << to_string(e.status) << e.jump;
    const bool ok = e.solution.converged();
    all = all && ok;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(sc.variables.size()); ++k) csv << (ok ? e.solution.x[k] : nan);
    for (int i = 0; i < sc.game.num_players(); ++i) csv << (ok ? e.costs[static_cast<std::size_t>(i)] : nan);
    for (int j = 0; j < sc.game.num_shared(); ++j) csv << (ok ? e.solution.sigma[j] : nan);
    csv.end();
  }
  emit(c, "sweep.csv", out.str());
  finish_manifest(c, m);
  return all ? kExitOk : kExitNumerical;
}

// ---------------------------------------------------------------------------

struct SelectArgs {
  std::string file, rule, box;
  int grid_points = 21;
  int seeds = 1;
};

int cmd_select(const SelectArgs& a, const Common& c) {
  const io::GameScenario sc = io::load_game(a.file);
  io::RunManifest m = manifest("select", a.file, c);
  const io::FamilySpec fs = family_for(sc, a.rule);
  const FactorFamily family = io::make_family(sc, fs);
  SelectionOptions so;
  so.grid_points = a.grid_points;
  so.seeds = a.seeds;
  so.seed = c.seed;
  so.solver.tol = c.tol;
  SelectionProblem p = selection_problem(sc.game, family, io::make_objective(sc), so);
  std::optional<std::pair<double, double>> box = sc.box;
  if (!a.box.empty()) {
    const auto b = parse_list(a.box, "--box");
    if (b.size() != 2 || !(b[0] < b[1])) throw UsageError("--box expects lo,hi");
    box.emplace(b[0], b[1]);
  }
  if (box) {
    if (!(box->first > family.lower) || !(box->second < family.upper))
      throw UsageError("selection box must lie strictly inside the family's domain");
    p.box_lower = VectorXd::Constant(1, box->first);
    p.box_upper = VectorXd::Constant(1, box->second);
  } else if (!std::isfinite(family.upper)) {
    throw UsageError("unbounded family: give a selection box (--box lo,hi)");
  }
  m.options["family"] = io::to_string(fs.kind);
  m.options["grid_points"] = std::to_string(a.grid_points);
  m.options["seeds"] = std::to_string(a.seeds);
  m.options["objective"] = sc.objective_player < 0 ? "sum" : "player " + std::to_string(sc.objective_player + 1);
  if (box) m.options["box"] = io::format_double(box->first) + "," + io::format_double(box->second);
  if (a.grid_points < 2) throw UsageError("--grid-points must be at least 2");
  if (a.seeds < 1) throw UsageError("--seeds must be at least 1");

  SelectionResult r;
  try {
    r = select(p);
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    return kExitNumerical;
  }
  json doc;
  doc["game"] = sc.name;
  doc["manifest_sha256"] = m.hash();
  doc["seed"] = c.seed;
  doc["alpha"] = r.params[0];
  doc["objective"] = r.j0;
  doc["boundary"] = r.boundary;
  if (r.limit) {
    json lim;
    lim["alpha"] = r.limit->params[0];
    json x;
    for (std::size_t k = 0; k < sc.variables.size(); ++k) x[sc.variables[k]] = r.limit->x[static_cast<Eigen::Index>(k)];
    lim["x"] = x;
    lim["objective"] = r.limit->j0;
    doc["boundary_limit"] = lim;
  }
  doc["solution"] = solution_json(sc, r.solution);
  emit(c, "selection.json", doc.dump(2) + "\n");

  if (!c.out.empty()) {
    std::ostringstream out;
    io::CsvWriter csv(out);
    csv.comment(m.stamp());
    csv.header({"alpha", "objective", "status", "basins", "refinement"});
    for (const auto& t : r.trace) {
      csv << t.params[0] << t.j0 << to_string(t.status) << t.basins << t.refinement;
      csv.end();
    }
    emit(c, "selection_trace.csv", out.str());
  }
  finish_manifest(c, m);
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct RaceArgs {
  std::string file;
  std::optional<double> alpha_ego, alpha_opponent;
};

int cmd_race(const RaceArgs& a, const Common& c) {
  io::RaceFile rf = io::load_race(a.file);
  io::RunManifest m = manifest("race", a.file, c);
  if (a.alpha_ego) rf.alpha_ego = *a.alpha_ego;
  if (a.alpha_opponent) rf.alpha_opponent = *a.alpha_opponent;
  if (!(rf.alpha_ego > 0.0) || !(rf.alpha_opponent > 0.0)) throw UsageError("alpha values must be positive");
  rf.scenario.solver.tol = c.tol;
  m.options["alpha_ego"] = io::format_double(rf.alpha_ego);
  m.options["alpha_opponent"] = io::format_double(rf.alpha_opponent);

  racing::RaceOutcome o;
  try {
    o = racing::simulate_closed_loop(rf.scenario, rf.alpha_ego, rf.alpha_opponent);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kInitialCollision || e.code() == ErrorCode::kDomain) throw UsageError(e.what());
    throw;
  }

  std::ostringstream out;
  io::CsvWriter csv(out);
  csv.comment(m.stamp());
  csv.header({"step", "time", "car", "s", "e", "v", "psi", "X", "Y", "a", "delta", "status", "iterations", "degraded"});
  const std::size_t M = o.trajectories.size();
  for (std::size_t k = 0; k < o.trajectories[0].size(); ++k) {
    for (std::size_t car = 0; car < M; ++car) {
      const racing::CarState& x = o.trajectories[car][k];
      csv << static_cast<int>(k) << static_cast<double>(k) * rf.scenario.race.dt << static_cast<int>(car) << x.s << x.e
          << x.v << x.psi << x.X << x.Y;
      if (k < o.steps.size()) {
        const racing::CarStepRecord& r = o.steps[k].cars[car];
        csv << r.input.a << r.input.delta << to_string(r.status) << r.iterations << r.degraded;
      } else {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        csv << nan << nan << "" << 0 << false;
      }
      csv.end();
    }
  }
  emit(c, "trajectories.csv", out.str());

  std::vector<double> ms;
  for (const auto& st : o.steps)
    for (const auto& cr : st.cars) ms.push_back(cr.solve_ms);
  std::sort(ms.begin(), ms.end());
  json doc;
  doc["race"] = rf.name;
  doc["manifest_sha256"] = m.hash();
  doc["seed"] = c.seed;
  doc["ego_wins"] = o.ego_wins;
  doc["final_s"] = o.final_s;
  doc["min_gap"] = o.min_gap;
  doc["degraded"] = o.degraded;
  doc["failed_solves"] = o.failed_solves;
  doc["median_solve_ms"] = ms.empty() ? 0.0 : ms[ms.size() / 2];
  if (c.out.empty()) {
    std::cerr << doc.dump(2) << "\n";
  } else {
    emit(c, "outcome.json", doc.dump(2) + "\n");
  }
  finish_manifest(c, m);
  return o.failed_solves == 0 ? kExitOk : kExitNumerical;
}

// ---------------------------------------------------------------------------

struct McArgs {
  std::string file;
  int runs = 100;
  int parallel = 1;
};

int cmd_mc(const McArgs& a, const Common& c) {
  io::RaceFile rf = io::load_race(a.file);
  io::RunManifest m = manifest("mc", a.file, c);
  if (rf.scenario.cars.size() != 2) throw UsageError("Monte Carlo needs an opponent and an ego car");
  if (a.runs < 0) throw UsageError("--runs must be non-negative");
  if (a.parallel < 1) throw UsageError("--parallel must be at least 1");
  rf.mc.workers = a.parallel;
  rf.mc.solver.tol = c.tol;
  m.options["runs"] = std::to_string(a.runs);
  std::string strategies;
  for (const auto& s : rf.mc.strategies) strategies += (strategies.empty() ? "" : ",") + s.name + "=" + io::format_double(s.alpha_ego);
  m.options["strategies"] = strategies;
  // worker count does not change results and stays out of the manifest

  const racing::MonteCarloResult r = racing::monte_carlo(rf.mc, a.runs, c.seed);

  std::ostringstream sum;
  io::CsvWriter s(sum);
  s.comment(m.stamp());
  s.header({"strategy", "alpha_ego", "runs", "wins", "failed", "degraded", "win_rate"});
  for (const auto& st : r.summary) {
    s << st.name << st.alpha_ego << st.runs << st.wins << st.failed << st.degraded << st.win_rate();
    s.end();
  }
  std::ostringstream map;
  io::CsvWriter v(map);
  v.comment(m.stamp());
  std::vector<std::string> cols{"run", "opponent_s", "opponent_e", "opponent_v", "ego_s", "ego_e", "ego_v"};
  for (const auto& st : rf.mc.strategies) {
    cols.push_back("verdict_" + st.name);
    cols.push_back("final_gap_" + st.name);
  }
  v.header(cols);
  for (const auto& run : r.runs) {
    v << run.index << run.sample.opponent.s << run.sample.opponent.e << run.sample.opponent.v << run.sample.ego.s
      << run.sample.ego.e << run.sample.ego.v;
    for (std::size_t k = 0; k < run.verdict.size(); ++k) v << run.verdict[k] << run.final_gap[k];
    v.end();
  }

  if (c.out.empty()) {
    std::cout << sum.str();
  } else {
    emit(c, "summary.csv", sum.str());
    emit(c, "verdicts.csv", map.str());
  }
  std::cerr << "Win percentage over " << a.runs << " paired runs (seed " << c.seed << ")\n";
  for (const auto& st : r.summary)
    std::cerr << "  " << st.name << " (alpha " << st.alpha_ego << "): " << 100.0 * st.win_rate() << "%"
              << (st.failed ? "  failed runs: " + std::to_string(st.failed) : "") << "\n";
  std::cerr << "  per-solve time: median " << r.median_solve_ms << " ms, p90 " << r.p90_solve_ms << " ms\n";
  finish_manifest(c, m);
  bool failed = false;
  for (const auto& st : r.summary) failed = failed || st.failed > 0;
  return failed ? kExitNumerical : kExitOk;
}

// ---------------------------------------------------------------------------

struct OracleArgs {
  std::string name;
  double alpha = 0.5;
};

int cmd_oracle(const OracleArgs& a, const Common&) {
  json doc;
  doc["oracle"] = a.name;
  doc["alpha"] = a.alpha;
  try {
    if (a.name == "example1") {
      const auto p = oracles::example1(a.alpha);
      doc["x"] = p.x;
      doc["y"] = p.y;
      doc["sigma"] = p.sigma;
      doc["costs"] = {p.cost1, p.cost2};
    } else if (a.name == "three_car") {
      const auto p = oracles::three_car(a.alpha);
      doc["x"] = {p.x1, p.x2, p.x3};
      doc["v"] = {p.v1, p.v2, p.v3};
      doc["sigma"] = p.sigma;
      doc["costs"] = {p.cost1, p.cost2, p.cost3};
    } else if (a.name == "harker") {
      json cands = json::array();
      for (const auto& h : oracles::harker(a.alpha)) {
        json j;
        j["branch"] = h.branch == oracles::OracleCaseId::kHarkerInterior ? "interior" : "active";
        j["x"] = {h.x1, h.x2};
        j["sigma"] = h.sigma;
        cands.push_back(j);
      }
      doc["candidates"] = cands;
    } else {
      throw UsageError("unknown oracle '" + a.name + "' (example1, three_car, harker)");
    }
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  std::cout << doc.dump(2) << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Normalized and non-normalized generalized Nash equilibria"};
  app.require_subcommand(1);
  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--out", common.out, "output directory (default: stdout)");
    sub->add_option("--tol", common.tol, "solver residual tolerance")->check(CLI::PositiveNumber);
    sub->add_option("--seed", common.seed, "random seed");
  };

  SolveArgs sa;
  auto* solve = app.add_subcommand("solve", "solve one factor assignment");
  solve->add_option("game", sa.file, "game file")->required();
  solve->add_option("--alpha", sa.alpha, "family parameter, or the full list of free factors");
  solve->add_option("--rule", sa.rule, "first-identity | sum-to-one");
  solve->add_option("--seeds", sa.seeds, "multistart seeds");
  add_common(solve);

  SweepArgs sw;
  auto* swp = app.add_subcommand("sweep", "sweep the family parameter");
  swp->add_option("game", sw.file, "game file")->required();
  swp->add_option("--grid", sw.grid, "lo:hi:step")->required();
  swp->add_option("--rule", sw.rule, "first-identity | sum-to-one");
  swp->add_flag("--cold", sw.cold, "solve every grid point from the default start");
  add_common(swp);

  SelectArgs se;
  auto* sel = app.add_subcommand("select", "bi-level equilibrium selection");
  sel->add_option("game", se.file, "game file")->required();
  sel->add_option("--rule", se.rule, "first-identity | sum-to-one");
  sel->add_option("--box", se.box, "lo,hi selection box");
  sel->add_option("--grid-points", se.grid_points, "grid density");
  sel->add_option("--seeds", se.seeds, "inner multistart seeds");
  add_common(sel);

  RaceArgs ra;
  auto* race = app.add_subcommand("race", "closed-loop race");
  race->add_option("scenario", ra.file, "race file")->required();
  race->add_option("--alpha", ra.alpha_ego, "ego aggressiveness factor");
  race->add_option("--alpha-opponent", ra.alpha_opponent, "factor the opponent assumes");
  add_common(race);

  McArgs mc;
  auto* mcs = app.add_subcommand("mc", "paired Monte Carlo study");
  mcs->add_option("scenario", mc.file, "race file")->required();
  mcs->add_option("--runs", mc.runs, "paired runs");
  mcs->add_option("--parallel", mc.parallel, "worker threads");
  add_common(mcs);

  OracleArgs oa;
  auto* ora = app.add_subcommand("oracle", "closed-form reference values");
  ora->add_option("name", oa.name, "example1 | three_car | harker")->required();
  ora->add_option("--alpha", oa.alpha, "family parameter");
  add_common(ora);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (solve->parsed()) return cmd_solve(sa, common);
    if (swp->parsed()) return cmd_sweep(sw, common);
    if (sel->parsed()) return cmd_select(se, common);
    if (race->parsed()) return cmd_race(ra, common);
    if (mcs->parsed()) return cmd_mc(mc, common);
    if (ora->parsed()) return cmd_oracle(oa, common);
  } catch (const UsageError& e) {
    spdlog::error("{}", e.what());
    return kExitInput;
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    const bool input = e.code() == ErrorCode::kParse || e.code() == ErrorCode::kIo;
    return input ? kExitInput : kExitNumerical;
  }
  return kExitInput;
}
