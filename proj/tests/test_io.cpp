#include <gtest/gtest.h>

#include <sstream>

#include "gnep/gnep.hpp"

namespace gnep::io {
namespace {

constexpr const char* kExample1 = R"(# comment line
game example1
player p1 x
  cost (x - 1)^2   # trailing comment
player p2 y
  cost (y - 1/2)^2
shared x + y - 1
family sum-to-one 1
)";

TEST(GameFile, ParsesExample1) {
  const GameScenario sc = parse_game(kExample1);
  EXPECT_EQ(sc.name, "example1");
  EXPECT_EQ(sc.game.num_players(), 2);
  EXPECT_EQ(sc.game.num_shared(), 1);
  EXPECT_EQ(sc.variables, (std::vector<std::string>{"x", "y"}));
  EXPECT_EQ(sc.family.kind, FamilyKind::kSumToOne);
  EXPECT_EQ(sc.family.player, 0);
  const GNESolution s = solve_equilibrium(sc.game, make_family(sc, sc.family).at(0.5));
  ASSERT_TRUE(s.converged());
  EXPECT_NEAR(s.x[0], 0.75, 1e-8);
  EXPECT_NEAR(s.x[1], 0.25, 1e-8);
}

TEST(GameFile, MatchesBuiltInReference) {
  const GameScenario sc = parse_game(R"(game harker
player p1 x1
  cost x1^2 + 8/3*x1*x2 - 34*x1
  ineq -x1
  ineq x1 - 10
player p2 x2
  cost x2^2 + 5/4*x1*x2 - 24.25*x2
  ineq -x2
  ineq x2 - 10
shared x1 + x2 - 15
)");
  const GameSpec ref = reference::harker_game();
  const Eigen::Vector2d x(3.2, 7.9);
  EXPECT_DOUBLE_EQ(sc.game.player(0).cost(x), ref.player(0).cost(x));
  EXPECT_DOUBLE_EQ(sc.game.player(1).cost(x), ref.player(1).cost(x));
  EXPECT_DOUBLE_EQ(sc.game.shared()[0](x), ref.shared()[0](x));
  EXPECT_EQ(sc.family.kind, FamilyKind::kFirstIdentity);
}

std::string parse_error(const std::string& text) {
  try {
    parse_game(text, "bad.game");
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kParse);
    return e.what();
  }
  ADD_FAILURE() << "no error for:\n" << text;
  return {};
}

TEST(GameFile, DiagnosticsNameTheLine) {
  EXPECT_NE(parse_error("game g\nplayer a x\n  cost x^2 + z\n").find("bad.game:3:"), std::string::npos);
  EXPECT_NE(parse_error("game g\nplayer a x\n  cost x^2 +\n").find("bad.game:3:"), std::string::npos);
  EXPECT_NE(parse_error("\n\ngame g\ncost x\n").find("bad.game:4: 'cost' outside"), std::string::npos);
  EXPECT_NE(parse_error("player a x\n").find("bad.game:1:"), std::string::npos);
  EXPECT_NE(parse_error("game g\nplayer a x\nplayer b x\n").find("bad.game:3: variable 'x' declared twice"),
            std::string::npos);
  EXPECT_NE(parse_error("game g\nplayer a x\n  cost x^2\nfrobnicate\n").find("bad.game:4: unknown directive"),
            std::string::npos);
  EXPECT_NE(parse_error("game g\nplayer a x\n  cost x^2\nplayer b y\n  cost y^2\nfamily pair 1 3\n")
                .find("bad.game:6:"),
            std::string::npos);
  EXPECT_NE(parse_error("game g\nplayer a x\n").find("bad.game:2: player 'a' has no cost"), std::string::npos);
  EXPECT_NE(parse_error("game g\nplayer a x\n  cost x\nbox 2 1\n").find("bad.game:4:"), std::string::npos);
}

TEST(GameFile, MissingFile) {
  try {
    load_game("/nonexistent/file.game");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIo);
  }
}

TEST(RaceFile, DefaultsAndOverrides) {
  const RaceFile rf = parse_race(R"(race duel
track l-shaped 6 1 0.5 90
car opponent v_max=2.85 s=4 e=0.05 v=1.5
car ego s=2.4 v=2.1
alpha_ego 0.05
strategy aggressive 0.05
range opponent_v 1.5 2
)");
  EXPECT_EQ(rf.name, "duel");
  ASSERT_EQ(rf.scenario.initial.size(), 2u);
  EXPECT_DOUBLE_EQ(rf.scenario.cars[0].v_max, 2.85);
  EXPECT_DOUBLE_EQ(rf.scenario.cars[1].v_max, 3.0);
  EXPECT_DOUBLE_EQ(rf.scenario.initial[0].s, 4.0);
  EXPECT_DOUBLE_EQ(rf.scenario.initial[0].Y, 0.05);
  EXPECT_DOUBLE_EQ(rf.alpha_ego, 0.05);
  EXPECT_EQ(rf.scenario.race.horizon, 10);
  EXPECT_NEAR(rf.scenario.track->length(), 12.0 + std::numbers::pi / 2, 1e-12);
  ASSERT_EQ(rf.mc.strategies.size(), 1u);
  EXPECT_EQ(rf.mc.strategies[0].name, "aggressive");
  EXPECT_DOUBLE_EQ(rf.mc.randomization.opponent_v.lo, 1.5);
  EXPECT_DOUBLE_EQ(rf.mc.opponent.v_max, 2.85);
}

TEST(RaceFile, Diagnostics) {
  auto err = [](const std::string& text) {
    try {
      parse_race(text, "r.race");
    } catch (const Error& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  EXPECT_NE(err("race r\ncar a s=1 e=0.9 v=1\n").find("r.race:2: car starts off the track"), std::string::npos);
  EXPECT_NE(err("race r\ncar a speed=1\n").find("r.race:2: unknown car key"), std::string::npos);
  EXPECT_NE(err("race r\ncar a v=1\ndt -1\n").find("r.race:3:"), std::string::npos);
  EXPECT_NE(err("race r\ntrack oval\n").find("r.race:2:"), std::string::npos);
  EXPECT_NE(err("race r\ncar a v=5\n").find("r.race:2: initial speed"), std::string::npos);
}

TEST(Csv, SeventeenDigitsAndQuoting) {
  EXPECT_EQ(format_double(0.1), "0.10000000000000001");
  EXPECT_EQ(format_double(1.0), "1");
  EXPECT_EQ(format_double(-2.0 / 3.0), "-0.66666666666666663");
  EXPECT_EQ(std::stod(format_double(1.0 / 3.0)), 1.0 / 3.0);
  std::ostringstream out;
  CsvWriter csv(out);
  csv.comment("seed=1");
  csv.header({"a", "b"});
  csv << 0.5 << "x,y";
  csv.end();
  csv << 1 << "q\"t";
  csv.end();
  EXPECT_EQ(out.str(), "# seed=1\na,b\n0.5,\"x,y\"\n1,\"q\"\"t\"\n");
  csv << 1.0;
  EXPECT_THROW(csv.end(), std::logic_error);
}

TEST(Manifest, Sha256KnownVectors) {
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Manifest, HashCoversOptionsAndSeedButNotOutputDir) {
  RunManifest a;
  a.subcommand = "sweep";
  a.scenario_path = "g.game";
  a.options["grid"] = "0.1:0.9:0.1";
  a.seed = 3;
  RunManifest b = a;
  b.output_dir = "/elsewhere";
  EXPECT_EQ(a.hash(), b.hash());
  b.seed = 4;
  EXPECT_NE(a.hash(), b.hash());
  b = a;
  b.options["grid"] = "0.1:0.9:0.2";
  EXPECT_NE(a.hash(), b.hash());
  EXPECT_NE(a.stamp().find("seed=3"), std::string::npos);
}

}  // namespace
}  // namespace gnep::io
