#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "gnep/function.hpp"

namespace gnep {
namespace {

// Central-difference gradient used as the independent reference.
VectorXd fd_gradient(const SmoothScalarFunction& f, const VectorXd& y) {
  VectorXd g(y.size());
  for (Eigen::Index j = 0; j < y.size(); ++j) {
    const double h = 1e-6 * (1.0 + std::abs(y[j]));
    VectorXd yp = y, ym = y;
    yp[j] += h;
    ym[j] -= h;
    g[j] = (f.local_value(yp) - f.local_value(ym)) / (2 * h);
  }
  return g;
}

struct Wavy {
  template <typename T>
  T operator()(const std::array<T, 3>& a) const {
    using std::cos;
    using std::sin;
    return sin(a[0]) * a[1] + cos(a[1] * a[2]) / (lift<T>(2.0) + a[0] * a[0]);
  }
};

TEST(SmoothScalarFunction, GradientMatchesCentralDifferences) {
  const std::map<std::string, int, std::less<>> vars{{"a", 2}, {"b", 5}};
  const auto poly = SmoothScalarFunction::from_polynomial(parse_polynomial("a^2*b - 3*b^3 + a", vars));
  const auto jet = SmoothScalarFunction::autodiff<3>({0, 1, 4}, Wavy{});
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  for (const auto* f : {&poly, &jet}) {
    for (int trial = 0; trial < 25; ++trial) {
      VectorXd y(f->local_size());
      for (auto& v : y) v = u(rng);
      const VectorXd g = f->local_gradient(y);
      const VectorXd ref = fd_gradient(*f, y);
      for (Eigen::Index j = 0; j < y.size(); ++j)
        EXPECT_NEAR(g[j], ref[j], 1e-5 * std::max(1.0, std::abs(ref[j])));
    }
  }
}

TEST(SmoothScalarFunction, AutodiffHessianMatchesFallback) {
  const auto jet = SmoothScalarFunction::autodiff<3>({0, 1, 2}, Wavy{});
  const SmoothScalarFunction no_hessian(
      jet.support(), [jet](const VectorXd& y) { return jet.local_value(y); },
      [jet](const VectorXd& y) { return jet.local_gradient(y); });
  EXPECT_TRUE(jet.has_hessian());
  EXPECT_FALSE(no_hessian.has_hessian());
  const Eigen::Vector3d y(0.3, -0.7, 1.1);
  EXPECT_TRUE(jet.local_hessian(y).isApprox(no_hessian.local_hessian(y), 1e-6));
}

TEST(SmoothScalarFunction, QuadraticDataReproducesPolynomial) {
  const std::map<std::string, int, std::less<>> vars{{"x", 0}, {"y", 3}};
  const auto f = SmoothScalarFunction::from_polynomial(parse_polynomial("2*x^2 - x*y + 3*y - 1", vars));
  ASSERT_TRUE(f.is_quadratic());
  const QuadraticData& q = *f.quadratic();
  const Eigen::Vector2d y(0.4, -2.0);
  EXPECT_NEAR(0.5 * y.dot(q.Q * y) + q.q.dot(y) + q.b, f.local_value(y), 1e-12);
  EXPECT_EQ(f.support(), (std::vector<int>{0, 3}));
}

TEST(SmoothScalarFunction, FullVectorViewsScatterBySupport) {
  const std::map<std::string, int, std::less<>> vars{{"x", 1}, {"y", 3}};
  const auto f = SmoothScalarFunction::from_polynomial(parse_polynomial("x*y", vars));
  VectorXd x = VectorXd::Zero(5);
  x[1] = 2.0;
  x[3] = 5.0;
  EXPECT_DOUBLE_EQ(f(x), 10.0);
  const VectorXd g = f.gradient(x);
  EXPECT_DOUBLE_EQ(g[1], 5.0);
  EXPECT_DOUBLE_EQ(g[3], 2.0);
  EXPECT_DOUBLE_EQ(g[0] + g[2] + g[4], 0.0);
  EXPECT_DOUBLE_EQ(f.hessian(x)(1, 3), 1.0);
}

}  // namespace
}  // namespace gnep
