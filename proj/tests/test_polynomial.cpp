#include <random>

#include <gtest/gtest.h>

#include "gnep/polynomial.hpp"

namespace gnep {
namespace {

const std::map<std::string, int, std::less<>> kVars{{"x", 0}, {"y", 1}, {"z", 2}};

TEST(Polynomial, ParsesAndEvaluates) {
  const Polynomial p = parse_polynomial("x^2 + 8/3*x*y - 34*x", kVars);
  Eigen::Vector3d v(5.0, 9.0, 0.0);
  EXPECT_NEAR(p.value(v), 25.0 + 120.0 - 170.0, 1e-12);
  EXPECT_EQ(p.degree(), 2);
  EXPECT_EQ(p.variables(), (std::vector<int>{0, 1}));
}

TEST(Polynomial, ExpandsPowersOfSums) {
  const Polynomial p = parse_polynomial("(x - 1)^2 - (x^2 - 2*x + 1)", kVars);
  EXPECT_TRUE(p.terms().empty());
}

TEST(Polynomial, UnaryMinusBindsLooserThanPower) {
  const Polynomial p = parse_polynomial("-x^2", kVars);
  Eigen::Vector3d v(3.0, 0.0, 0.0);
  EXPECT_DOUBLE_EQ(p.value(v), -9.0);
}

TEST(Polynomial, DerivativesMatchFiniteDifferences) {
  const Polynomial p = parse_polynomial("x^3*y - 2*y*z^2 + (x + z)^2 + 4", kVars);
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::Vector3d v(u(rng), u(rng), u(rng));
    const Eigen::VectorXd g = p.gradient(v);
    const Eigen::MatrixXd h = p.hessian(v);
    for (int j = 0; j < 3; ++j) {
      const double step = 1e-6;
      Eigen::Vector3d vp = v, vm = v;
      vp[j] += step;
      vm[j] -= step;
      EXPECT_NEAR(g[j], (p.value(vp) - p.value(vm)) / (2 * step), 1e-6 * (1 + std::abs(g[j])));
      const Eigen::VectorXd dg = (p.gradient(vp) - p.gradient(vm)) / (2 * step);
      for (int i = 0; i < 3; ++i) EXPECT_NEAR(h(i, j), dg[i], 1e-5 * (1 + std::abs(h(i, j))));
    }
  }
}

TEST(Polynomial, ReportsColumnOnErrors) {
  try {
    parse_polynomial("x + w", kVars);
    FAIL() << "expected a parse error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kParse);
    EXPECT_NE(std::string(e.what()).find("column 5"), std::string::npos);
  }
  EXPECT_THROW(parse_polynomial("x / y", kVars), Error);
  EXPECT_THROW(parse_polynomial("(x + 1", kVars), Error);
  EXPECT_THROW(parse_polynomial("x ^ y", kVars), Error);
}

}  // namespace
}  // namespace gnep
