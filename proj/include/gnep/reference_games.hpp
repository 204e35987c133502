#pragma once

#include <map>
#include <string>

#include "gnep/game.hpp"
#include "gnep/polynomial.hpp"

namespace gnep::reference {

namespace detail {

inline SmoothScalarFunction poly(const std::string& text,
                                 const std::map<std::string, int, std::less<>>& vars) {
  return SmoothScalarFunction::from_polynomial(parse_polynomial(text, vars));
}

}  // namespace detail

/// Two scalar players: min (x-1)², min (y-1/2)², shared x + y <= 1.
inline GameSpec example1_game() {
  const std::map<std::string, int, std::less<>> v{{"x", 0}, {"y", 1}};
  std::vector<PlayerSpec> players(2);
  players[0] = {"x", 1, detail::poly("(x - 1)^2", v), {}, {}};
  players[1] = {"y", 1, detail::poly("(y - 1/2)^2", v), {}, {}};
  return build_game(std::move(players), {detail::poly("x + y - 1", v)});
}

/// One-step three-car race on two lanes: car i picks (x_i, v_i) with
/// x_i = x_i(0) + v_i·Δt (Δt = 1), cars 2 and 3 share a lane (x2 <= x3).
inline GameSpec three_car_game() {
  const std::map<std::string, int, std::less<>> v{{"x1", 0}, {"v1", 1}, {"x2", 2},
                                                  {"v2", 3}, {"x3", 4}, {"v3", 5}};
  std::vector<PlayerSpec> players(3);
  players[0] = {"car1", 2, detail::poly("-x1 + x2 + v1^2/2", v), {detail::poly("x1 - 0 - v1", v)}, {}};
  players[1] = {"car2", 2, detail::poly("-x2 + x1 + v2^2/2", v), {detail::poly("x2 - 0.5 - v2", v)}, {}};
  players[2] = {"car3", 2, detail::poly("-x1 + x2 + v3^2/2", v), {detail::poly("x3 - 0.75 - v3", v)}, {}};
  return build_game(std::move(players), {detail::poly("x2 - x3", v)});
}

/// Harker's two-player game with private bounds 0 <= x_i <= 10 and the
/// shared constraint x1 + x2 <= 15.
inline GameSpec harker_game() {
  const std::map<std::string, int, std::less<>> v{{"x1", 0}, {"x2", 1}};
  std::vector<PlayerSpec> players(2);
  players[0] = {"p1", 1, detail::poly("x1^2 + 8/3*x1*x2 - 34*x1", v), {},
                {detail::poly("-x1", v), detail::poly("x1 - 10", v)}};
  players[1] = {"p2", 1, detail::poly("x2^2 + 5/4*x1*x2 - 24.25*x2", v), {},
                {detail::poly("-x2", v), detail::poly("x2 - 10", v)}};
  return build_game(std::move(players), {detail::poly("x1 + x2 - 15", v)});
}

}  // namespace gnep::reference
