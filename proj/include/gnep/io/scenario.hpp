#pragma once

#include <charconv>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "gnep/explorer.hpp"
#include "gnep/polynomial.hpp"
#include "gnep/racing/monte_carlo.hpp"
#include "gnep/selector.hpp"

namespace gnep::io {

/// One meaningful line of a scenario file: the keyword, the remaining text
/// and its whitespace-separated words.
struct ScenarioLine {
  int number = 0;
  std::string keyword;
  std::string rest;
  std::vector<std::string> words;
};

class ScenarioReader {
 public:
  ScenarioReader(std::string text, std::string origin) : origin_(std::move(origin)) {
    std::istringstream in(text);
    std::string raw;
    int number = 0;
    while (std::getline(in, raw)) {
      ++number;
      if (auto h = raw.find('#'); h != std::string::npos) raw.erase(h);
      std::istringstream ws(raw);
      ScenarioLine line;
      line.number = number;
      if (!(ws >> line.keyword)) continue;
      std::getline(ws, line.rest);
      line.rest = trim(line.rest);
      std::istringstream rs(line.rest);
      for (std::string w; rs >> w;) line.words.push_back(w);
      lines_.push_back(std::move(line));
    }
  }

  const std::vector<ScenarioLine>& lines() const { return lines_; }
  const std::string& origin() const { return origin_; }

  [[noreturn]] void fail(const ScenarioLine& line, const std::string& msg) const { fail(line.number, msg); }
  [[noreturn]] void fail(int number, const std::string& msg) const {
    throw Error(ErrorCode::kParse, origin_ + ":" + std::to_string(number) + ": " + msg);
  }

  double number(const ScenarioLine& line, const std::string& word) const {
    double v = 0.0;
    const char* end = word.data() + word.size();
    auto [ptr, ec] = std::from_chars(word.data(), end, v);
    if (ec != std::errc() || ptr != end || !std::isfinite(v)) fail(line, "expected a number, got '" + word + "'");
    return v;
  }

  int integer(const ScenarioLine& line, const std::string& word) const {
    int v = 0;
    const char* end = word.data() + word.size();
    auto [ptr, ec] = std::from_chars(word.data(), end, v);
    if (ec != std::errc() || ptr != end) fail(line, "expected an integer, got '" + word + "'");
    return v;
  }

  void arity(const ScenarioLine& line, std::size_t lo, std::size_t hi) const {
    if (line.words.size() < lo || line.words.size() > hi)
      fail(line, "'" + line.keyword + "' takes " +
                     (lo == hi ? std::to_string(lo) : std::to_string(lo) + " to " + std::to_string(hi)) +
                     " arguments");
  }

  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
  }

 private:
  std::string origin_;
  std::vector<ScenarioLine> lines_;
};

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------
// Games

enum class FamilyKind { kSumToOne, kFirstIdentity, kPair };

inline const char* to_string(FamilyKind k) {
  switch (k) {
    case FamilyKind::kSumToOne: return "sum-to-one";
    case FamilyKind::kFirstIdentity: return "first-identity";
    case FamilyKind::kPair: return "pair";
  }
  return "?";
}

inline std::optional<FamilyKind> parse_family_kind(std::string_view s) {
  if (s == "sum-to-one") return FamilyKind::kSumToOne;
  if (s == "first-identity") return FamilyKind::kFirstIdentity;
  if (s == "pair") return FamilyKind::kPair;
  return std::nullopt;
}

/// α-family over factor space. Player indices are zero-based here and
/// one-based in files.
struct FamilySpec {
  FamilyKind kind = FamilyKind::kFirstIdentity;
  int player = -1;  // −1: the kind's default
  int other = -1;   // pair only
  double rest = 1.0;
};

struct GameScenario {
  std::string name;
  GameSpec game;
  std::vector<std::string> variables;
  FamilySpec family;
  int objective_player = -1;  // −1: sum of costs
  std::optional<std::pair<double, double>> box;
};

inline FactorFamily make_family(const GameScenario& sc, const FamilySpec& f) {
  const int M = sc.game.num_players(), m0 = sc.game.num_shared();
  switch (f.kind) {
    case FamilyKind::kSumToOne: return sum_to_one_family(M, m0, f.player < 0 ? 0 : f.player);
    case FamilyKind::kFirstIdentity: return first_identity_family(M, m0, f.player < 0 ? 1 : f.player);
    case FamilyKind::kPair: return pair_family(M, m0, f.player, f.other, f.rest);
  }
  throw Error(ErrorCode::kDomain, "unknown family");
}

inline Objective make_objective(const GameScenario& sc) {
  return sc.objective_player < 0 ? objective_sum_of_costs(sc.game) : objective_single_player(sc.game, sc.objective_player);
}

/// Game file grammar, one directive per line, `#` starts a comment:
///   game NAME
///   player NAME VAR...      opens a player block owning VAR...
///   cost EXPR | eq EXPR | ineq EXPR   (eq: EXPR = 0, ineq: EXPR <= 0)
///   shared EXPR             shared constraint EXPR <= 0
///   family sum-to-one [P] | first-identity [P] | pair P Q [REST]
///   objective sum | player P
///   box LO HI               selection box for the family parameter
inline GameScenario parse_game(const std::string& text, const std::string& origin = "<game>") {
  const ScenarioReader r(text, origin);
  GameScenario sc;
  struct Pending {
    int line;
    std::string name;
    std::vector<std::string> vars;
    std::optional<std::pair<int, std::string>> cost;
    std::vector<std::pair<int, std::string>> eq, ineq;
  };
  std::vector<Pending> players;
  std::vector<std::pair<int, std::string>> shared;
  std::map<std::string, int, std::less<>> index;
  const ScenarioLine* family_line = nullptr;
  const ScenarioLine* objective_line = nullptr;
  bool header = false;

  for (const auto& line : r.lines()) {
    const std::string& k = line.keyword;
    if (!header) {
      if (k != "game") r.fail(line, "file must start with 'game NAME'");
      r.arity(line, 1, 1);
      sc.name = line.words[0];
      header = true;
      continue;
    }
    if (k == "player") {
      if (line.words.size() < 2) r.fail(line, "'player' needs a name and at least one variable");
      Pending p{line.number, line.words[0], {line.words.begin() + 1, line.words.end()}, std::nullopt, {}, {}};
      for (const auto& v : p.vars) {
        if (!std::isalpha(static_cast<unsigned char>(v[0])) && v[0] != '_') r.fail(line, "bad variable name '" + v + "'");
        if (!index.emplace(v, static_cast<int>(index.size())).second) r.fail(line, "variable '" + v + "' declared twice");
      }
      players.push_back(std::move(p));
    } else if (k == "cost" || k == "eq" || k == "ineq") {
      if (players.empty()) r.fail(line, "'" + k + "' outside a player block");
      if (line.rest.empty()) r.fail(line, "missing expression");
      Pending& p = players.back();
      if (k == "cost") {
        if (p.cost) r.fail(line, "player '" + p.name + "' already has a cost");
        p.cost.emplace(line.number, line.rest);
      } else {
        (k == "eq" ? p.eq : p.ineq).emplace_back(line.number, line.rest);
      }
    } else if (k == "shared") {
      if (line.rest.empty()) r.fail(line, "missing expression");
      shared.emplace_back(line.number, line.rest);
    } else if (k == "family") {
      family_line = &line;
    } else if (k == "objective") {
      objective_line = &line;
    } else if (k == "box") {
      r.arity(line, 2, 2);
      const double lo = r.number(line, line.words[0]), hi = r.number(line, line.words[1]);
      if (!(lo < hi)) r.fail(line, "box needs LO < HI");
      sc.box.emplace(lo, hi);
    } else if (k == "game") {
      r.fail(line, "duplicate 'game' line");
    } else {
      r.fail(line, "unknown directive '" + k + "'");
    }
  }
  if (!header) throw Error(ErrorCode::kParse, origin + ": empty game file");
  if (players.empty()) throw Error(ErrorCode::kParse, origin + ": no players declared");

  auto expr = [&](const std::pair<int, std::string>& e) {
    try {
      return SmoothScalarFunction::from_polynomial(parse_polynomial(e.second, index));
    } catch (const Error& err) {
      r.fail(e.first, err.what());
    }
  };
  std::vector<PlayerSpec> specs;
  for (auto& p : players) {
    if (!p.cost) r.fail(p.line, "player '" + p.name + "' has no cost");
    PlayerSpec s{p.name, static_cast<int>(p.vars.size()), expr(*p.cost), {}, {}};
    for (const auto& e : p.eq) s.eq_constraints.push_back(expr(e));
    for (const auto& e : p.ineq) s.ineq_constraints.push_back(expr(e));
    specs.push_back(std::move(s));
    sc.variables.insert(sc.variables.end(), p.vars.begin(), p.vars.end());
  }
  std::vector<SmoothScalarFunction> sh;
  for (const auto& e : shared) sh.push_back(expr(e));
  try {
    sc.game = build_game(std::move(specs), std::move(sh));
  } catch (const Error& err) {
    throw Error(ErrorCode::kParse, origin + ": " + err.what());
  }

  const int M = sc.game.num_players();
  auto player_index = [&](const ScenarioLine& line, const std::string& w) {
    const int p = r.integer(line, w);
    if (p < 1 || p > M) r.fail(line, "player index " + w + " out of range 1.." + std::to_string(M));
    return p - 1;
  };
  if (family_line) {
    const ScenarioLine& line = *family_line;
    if (line.words.empty()) r.fail(line, "'family' needs a kind");
    const auto kind = parse_family_kind(line.words[0]);
    if (!kind) r.fail(line, "unknown family '" + line.words[0] + "'");
    sc.family.kind = *kind;
    if (*kind == FamilyKind::kPair) {
      r.arity(line, 3, 4);
      sc.family.player = player_index(line, line.words[1]);
      sc.family.other = player_index(line, line.words[2]);
      if (sc.family.player == sc.family.other) r.fail(line, "pair needs two different players");
      if (line.words.size() == 4) sc.family.rest = r.number(line, line.words[3]);
      if (!(sc.family.rest > 0.0)) r.fail(line, "REST must be positive");
    } else {
      r.arity(line, 1, 2);
      if (line.words.size() == 2) sc.family.player = player_index(line, line.words[1]);
      if (*kind == FamilyKind::kFirstIdentity && sc.family.player == 0)
        r.fail(line, "first-identity fixes player 1; pick another player");
    }
  }
  if (objective_line) {
    const ScenarioLine& line = *objective_line;
    if (line.words.size() == 1 && line.words[0] == "sum") {
      sc.objective_player = -1;
    } else if (line.words.size() == 2 && line.words[0] == "player") {
      sc.objective_player = player_index(line, line.words[1]);
    } else {
      r.fail(line, "expected 'objective sum' or 'objective player P'");
    }
  }
  return sc;
}

inline GameScenario load_game(const std::string& path) { return parse_game(read_file(path), path); }

// ---------------------------------------------------------------------------
// Races

struct RaceFile {
  std::string name;
  racing::RaceScenario scenario;
  double alpha_ego = 1.0;
  double alpha_opponent = 1.0;
  racing::MonteCarloConfig mc;
};

/// Race file grammar:
///   race NAME
///   track l-shaped [STRAIGHT RADIUS HALF_WIDTH ANGLE_DEG] | straight LENGTH HALF_WIDTH
///   horizon N | dt H | beta B | d_safe D | wheelbase L | duration T
///   car NAME key=value...    keys v_max a_max delta_max s e v psi; the first
///                            car is the opponent, the second the ego
///   alpha_ego A | alpha_opponent A
///   strategy NAME ALPHA      Monte Carlo ego strategies (replace the defaults)
///   range KEY LO HI          keys opponent_s ego_relative_s opponent_v
///                            ego_relative_v ego_e opponent_relative_e
///   max_iters N | tol T      solver settings
inline RaceFile parse_race(const std::string& text, const std::string& origin = "<race>") {
  const ScenarioReader r(text, origin);
  RaceFile rf;
  auto track = std::make_shared<const racing::Track>(racing::Track::l_shaped());
  std::vector<racing::CarParams> cars;
  std::vector<std::array<double, 4>> states;  // s e v psi
  std::vector<int> car_lines;
  std::vector<racing::Strategy> strategies;
  bool header = false;
  racing::RaceParams& rp = rf.scenario.race;
  SolverOptions& so = rf.scenario.solver;
  racing::Randomization& rnd = rf.mc.randomization;

  auto positive = [&](const ScenarioLine& line) {
    r.arity(line, 1, 1);
    const double v = r.number(line, line.words[0]);
    if (!(v > 0.0)) r.fail(line, "'" + line.keyword + "' must be positive");
    return v;
  };

  for (const auto& line : r.lines()) {
    const std::string& k = line.keyword;
    if (!header) {
      if (k != "race") r.fail(line, "file must start with 'race NAME'");
      r.arity(line, 1, 1);
      rf.name = line.words[0];
      header = true;
      continue;
    }
    if (k == "track") {
      if (line.words.empty()) r.fail(line, "'track' needs a shape");
      std::vector<double> a;
      for (std::size_t i = 1; i < line.words.size(); ++i) a.push_back(r.number(line, line.words[i]));
      try {
        if (line.words[0] == "l-shaped" && (a.empty() || a.size() == 4)) {
          track = std::make_shared<const racing::Track>(
              a.empty() ? racing::Track::l_shaped()
                        : racing::Track::l_shaped(a[0], a[1], a[2], a[3] * std::numbers::pi / 180.0));
        } else if (line.words[0] == "straight" && a.size() == 2) {
          track = std::make_shared<const racing::Track>(std::vector<racing::Segment>{{a[0], 0.0}}, a[1]);
        } else {
          r.fail(line, "expected 'l-shaped [STRAIGHT RADIUS HALF_WIDTH ANGLE_DEG]' or 'straight LENGTH HALF_WIDTH'");
        }
      } catch (const Error& e) {
        if (e.code() == ErrorCode::kParse) throw;
        r.fail(line, e.what());
      }
    } else if (k == "horizon") {
      r.arity(line, 1, 1);
      rp.horizon = r.integer(line, line.words[0]);
      if (rp.horizon < 1) r.fail(line, "horizon must be at least 1");
    } else if (k == "dt") {
      rp.dt = positive(line);
    } else if (k == "beta") {
      r.arity(line, 1, 1);
      rp.beta = r.number(line, line.words[0]);
      if (rp.beta < 0.0) r.fail(line, "beta must be non-negative");
    } else if (k == "d_safe") {
      rp.d_safe = positive(line);
    } else if (k == "wheelbase") {
      rp.wheelbase = positive(line);
    } else if (k == "duration") {
      rf.scenario.duration = positive(line);
    } else if (k == "car") {
      if (line.words.empty()) r.fail(line, "'car' needs a name");
      if (cars.size() == 2) r.fail(line, "at most two cars");
      racing::CarParams cp;
      std::array<double, 4> st{0.0, 0.0, 0.0, 0.0};
      for (std::size_t i = 1; i < line.words.size(); ++i) {
        const std::string& w = line.words[i];
        const auto eq = w.find('=');
        if (eq == std::string::npos) r.fail(line, "expected key=value, got '" + w + "'");
        const std::string key = w.substr(0, eq);
        const double v = r.number(line, w.substr(eq + 1));
        if (key == "v_max") cp.v_max = v;
        else if (key == "a_max") cp.a_max = v;
        else if (key == "delta_max") cp.delta_max = v;
        else if (key == "s") st[0] = v;
        else if (key == "e") st[1] = v;
        else if (key == "v") st[2] = v;
        else if (key == "psi") st[3] = v;
        else r.fail(line, "unknown car key '" + key + "'");
      }
      if (!(cp.v_max > 0.0) || !(cp.a_max > 0.0) || !(cp.delta_max > 0.0)) r.fail(line, "car bounds must be positive");
      if (st[2] < 0.0 || st[2] > cp.v_max) r.fail(line, "initial speed outside [0, v_max]");
      cars.push_back(cp);
      states.push_back(st);
      car_lines.push_back(line.number);
    } else if (k == "alpha_ego") {
      rf.alpha_ego = positive(line);
    } else if (k == "alpha_opponent") {
      rf.alpha_opponent = positive(line);
    } else if (k == "strategy") {
      r.arity(line, 2, 2);
      const double a = r.number(line, line.words[1]);
      if (!(a > 0.0)) r.fail(line, "strategy alpha must be positive");
      strategies.push_back({line.words[0], a});
    } else if (k == "range") {
      r.arity(line, 3, 3);
      const racing::Range range{r.number(line, line.words[1]), r.number(line, line.words[2])};
      if (range.lo > range.hi) r.fail(line, "range needs LO <= HI");
      const std::string& key = line.words[0];
      if (key == "opponent_s") rnd.opponent_s_fraction = range;
      else if (key == "ego_relative_s") rnd.ego_relative_s = range;
      else if (key == "opponent_v") rnd.opponent_v = range;
      else if (key == "ego_relative_v") rnd.ego_relative_v = range;
      else if (key == "ego_e") rnd.ego_e_fraction = range;
      else if (key == "opponent_relative_e") rnd.opponent_relative_e_fraction = range;
      else r.fail(line, "unknown range '" + key + "'");
    } else if (k == "max_iters") {
      r.arity(line, 1, 1);
      so.max_iters = r.integer(line, line.words[0]);
      if (so.max_iters < 1) r.fail(line, "max_iters must be at least 1");
    } else if (k == "tol") {
      so.tol = positive(line);
    } else if (k == "race") {
      r.fail(line, "duplicate 'race' line");
    } else {
      r.fail(line, "unknown directive '" + k + "'");
    }
  }
  if (!header) throw Error(ErrorCode::kParse, origin + ": empty race file");
  if (cars.empty()) throw Error(ErrorCode::kParse, origin + ": no cars declared");

  rf.scenario.track = track;
  rf.scenario.cars = cars;
  for (std::size_t c = 0; c < cars.size(); ++c) {
    const auto& st = states[c];
    if (std::abs(st[1]) > track->half_width()) r.fail(car_lines[c], "car starts off the track");
    rf.scenario.initial.push_back(racing::make_state(*track, st[0], st[1], st[2], st[3]));
  }
  rf.mc.track = track;
  rf.mc.race = rp;
  rf.mc.duration = rf.scenario.duration;
  rf.mc.alpha_opp_model = rf.alpha_opponent;
  rf.mc.solver = so;
  if (cars.size() == 2) {
    rf.mc.opponent = cars[0];
    rf.mc.ego = cars[1];
  }
  if (!strategies.empty()) rf.mc.strategies = strategies;
  return rf;
}

inline RaceFile load_race(const std::string& path) { return parse_race(read_file(path), path); }

}  // namespace gnep::io
