#pragma once

#include <limits>
#include <string>
#include <vector>

#include "gnep/error.hpp"

// Closed-form equilibrium families of the analytic reference games.
namespace gnep::oracles {

enum class OracleCaseId { kExample1, kThreeCar, kHarkerInterior, kHarkerActive };

/// Admissible α domain of a closed-form family: an open interval, except
/// that `upper` may be +∞.
struct OracleCase {
  OracleCaseId id;
  std::string name;
  double lower;
  double upper;

  bool contains(double alpha) const { return alpha > lower && alpha < upper; }
};

inline OracleCase oracle_case(OracleCaseId id) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  switch (id) {
    case OracleCaseId::kExample1: return {id, "example1", 0.0, 1.0};
    case OracleCaseId::kThreeCar: return {id, "three_car", 0.0, 1.0};
    case OracleCaseId::kHarkerInterior: return {id, "harker_interior", 0.0, inf};
    case OracleCaseId::kHarkerActive: return {id, "harker_active", 21.0 / 8.0, inf};
  }
  throw Error(ErrorCode::kDomain, "unknown oracle case");
}

/// Example 1 under A_1 = α, A_2 = 1 − α.
struct Example1Point {
  double x, y;
  double sigma;  // fictitious multiplier for the (α, 1 − α) scaling
  double cost1, cost2;
};

inline Example1Point example1(double alpha) {
  if (!oracle_case(OracleCaseId::kExample1).contains(alpha))
    throw Error(ErrorCode::kDomain, "example1 needs alpha in (0,1)");
  const double x = 1.0 - 0.5 * alpha;
  const double y = 0.5 * alpha;
  return {x, y, 1.0, (x - 1.0) * (x - 1.0), (y - 0.5) * (y - 0.5)};
}

/// Three-car game under A_2 = α, A_3 = 1 − α (A_1 arbitrary).
struct ThreeCarPoint {
  double x1, v1, x2, v2, x3, v3;
  double sigma;                    // fictitious multiplier for the (α, 1 − α) scaling
  double mu1, mu2, mu3;            // dynamics multipliers
  double cost1, cost2, cost3;
};

/// α = α₂ / (α₂ + α₃): the only combination of the factors the equilibrium
/// depends on.
inline double three_car_alpha(double alpha2, double alpha3) {
  if (!(alpha2 > 0.0) || !(alpha3 > 0.0)) throw Error(ErrorCode::kDomain, "factors must be positive");
  return alpha2 / (alpha2 + alpha3);
}

inline ThreeCarPoint three_car(double alpha) {
  if (!oracle_case(OracleCaseId::kThreeCar).contains(alpha))
    throw Error(ErrorCode::kDomain, "three_car needs alpha in (0,1)");
  ThreeCarPoint p{};
  p.x1 = 1.0;
  p.v1 = 1.0;
  p.v2 = 1.0 - 0.75 * alpha;
  p.v3 = 0.75 * (1.0 - alpha);
  p.x2 = 1.5 - 0.75 * alpha;
  p.x3 = p.x2;
  p.sigma = 0.75;
  p.mu1 = 1.0;
  p.mu2 = p.v2;
  p.mu3 = p.v3;
  p.cost1 = -p.x1 + p.x2 + 0.5 * p.v1 * p.v1;
  p.cost2 = -p.x2 + p.x1 + 0.5 * p.v2 * p.v2;
  p.cost3 = -p.x1 + p.x2 + 0.5 * p.v3 * p.v3;
  return p;
}

/// Harker's game under A_1 = 1, A_2 = α.
struct HarkerCandidate {
  OracleCaseId branch;
  double x1, x2, sigma;
};

inline bool harker_feasible(double x1, double x2) {
  return x1 >= 0.0 && x1 <= 10.0 && x2 >= 0.0 && x2 <= 10.0 && x1 + x2 <= 15.0 + 1e-12;
}

inline std::vector<HarkerCandidate> harker(double alpha) {
  if (!(alpha > 0.0)) throw Error(ErrorCode::kDomain, "harker needs alpha > 0");
  std::vector<HarkerCandidate> out;
  if (harker_feasible(5.0, 9.0)) out.push_back({OracleCaseId::kHarkerInterior, 5.0, 9.0, 0.0});
  const double den = 8.0 * alpha - 9.0;
  if (den > 0.0) {
    const HarkerCandidate c{OracleCaseId::kHarkerActive, (72.0 * alpha - 69.0) / den,
                            (48.0 * alpha - 66.0) / den, 8.0 / den};
    if (c.sigma > 0.0 && harker_feasible(c.x1, c.x2)) out.push_back(c);
  }
  return out;
}

}  // namespace gnep::oracles
