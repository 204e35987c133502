#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <type_traits>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <ceres/jet.h>

#include "gnep/error.hpp"
#include "gnep/polynomial.hpp"

namespace gnep {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Constant of scalar type T, which may be a (nested) Jet.
template <typename T>
T lift(double c) {
  if constexpr (std::is_arithmetic_v<T>)
    return c;
  else
    return T(lift<decltype(T().a)>(c));
}

/// Real part of a scalar or (nested) Jet.
template <typename T>
double scalar_value(const T& x) {
  if constexpr (std::is_arithmetic_v<T>)
    return static_cast<double>(x);
  else
    return scalar_value(x.a);
}

/// f(y) = 0.5 yᵀQy + qᵀy + b in the function's local coordinates.
struct QuadraticData {
  MatrixXd Q;
  VectorXd q;
  double b = 0.0;
};

/// Scalar function of a designated subset ("support") of the stacked
/// decision vector. Callbacks act on the gathered local vector.
class SmoothScalarFunction {
 public:
  using ValueFn = std::function<double(const VectorXd&)>;
  using GradientFn = std::function<VectorXd(const VectorXd&)>;
  using HessianFn = std::function<MatrixXd(const VectorXd&)>;

  SmoothScalarFunction() : impl_(std::make_shared<Impl>()) {
    impl_->value = [](const VectorXd&) { return 0.0; };
    impl_->gradient = [](const VectorXd&) { return VectorXd(); };
    impl_->hessian = [](const VectorXd&) { return MatrixXd(); };
    impl_->quadratic = QuadraticData{MatrixXd(), VectorXd(), 0.0};
  }

  SmoothScalarFunction(std::vector<int> support, ValueFn value, GradientFn gradient,
                       HessianFn hessian = {})
      : impl_(std::make_shared<Impl>()) {
    impl_->support = std::move(support);
    impl_->value = std::move(value);
    impl_->gradient = std::move(gradient);
    impl_->hessian = std::move(hessian);
  }

  static SmoothScalarFunction from_polynomial(const Polynomial& p) {
    std::vector<int> support = p.variables();
    std::map<int, int> local;
    for (std::size_t k = 0; k < support.size(); ++k) local[support[k]] = static_cast<int>(k);
    auto lp = std::make_shared<const Polynomial>(p.reindexed(local));
    SmoothScalarFunction f(
        std::move(support), [lp](const VectorXd& y) { return lp->value(y); },
        [lp](const VectorXd& y) { return lp->gradient(y); },
        [lp](const VectorXd& y) { return lp->hessian(y); });
    f.impl_->polynomial = p;
    if (lp->degree() <= 2) {
      const auto m = static_cast<Eigen::Index>(f.impl_->support.size());
      const VectorXd zero = VectorXd::Zero(m);
      f.impl_->quadratic = QuadraticData{lp->hessian(zero), lp->gradient(zero), lp->value(zero)};
    }
    return f;
  }

  /// Builds value, gradient and Hessian callbacks from a functor templated on
  /// the scalar type, `T f(const std::array<T, K>&)`, by forward-mode
  /// automatic differentiation.
  template <int K, typename Functor>
  static SmoothScalarFunction autodiff(const std::array<int, K>& support, Functor f) {
    using Jet = ceres::Jet<double, K>;
    using Jet2 = ceres::Jet<Jet, K>;
    auto value = [f](const VectorXd& y) {
      std::array<double, K> a;
      for (int k = 0; k < K; ++k) a[k] = y[k];
      return static_cast<double>(f(a));
    };
    auto gradient = [f](const VectorXd& y) {
      std::array<Jet, K> a;
      for (int k = 0; k < K; ++k) a[k] = Jet(y[k], k);
      const Jet r = f(a);
      return VectorXd(r.v);
    };
    auto hessian = [f](const VectorXd& y) {
      std::array<Jet2, K> a;
      for (int k = 0; k < K; ++k) {
        a[k] = Jet2(Jet(y[k], k));
        a[k].v[k] = Jet(1.0);
      }
      const Jet2 r = f(a);
      MatrixXd h(K, K);
      for (int i = 0; i < K; ++i)
        for (int j = 0; j < K; ++j) h(i, j) = r.v[i].v[j];
      return h;
    };
    return SmoothScalarFunction(std::vector<int>(support.begin(), support.end()), value, gradient,
                                hessian);
  }

  const std::vector<int>& support() const { return impl_->support; }
  Eigen::Index local_size() const { return static_cast<Eigen::Index>(impl_->support.size()); }

  bool has_hessian() const { return static_cast<bool>(impl_->hessian); }
  bool is_quadratic() const { return impl_->quadratic.has_value(); }
  const QuadraticData* quadratic() const {
    return impl_->quadratic ? &*impl_->quadratic : nullptr;
  }
  const std::optional<Polynomial>& polynomial() const { return impl_->polynomial; }

  VectorXd gather(const VectorXd& x) const {
    VectorXd y(local_size());
    for (Eigen::Index k = 0; k < y.size(); ++k) y[k] = x[impl_->support[k]];
    return y;
  }

  double local_value(const VectorXd& y) const { return impl_->value(y); }
  VectorXd local_gradient(const VectorXd& y) const { return impl_->gradient(y); }

  /// Analytic Hessian when available, central differences of the gradient
  /// otherwise (step 1e-6·(1+|y_j|)).
  MatrixXd local_hessian(const VectorXd& y) const {
    if (impl_->hessian) return impl_->hessian(y);
    const auto m = y.size();
    MatrixXd h(m, m);
    VectorXd yp = y;
    for (Eigen::Index j = 0; j < m; ++j) {
      const double step = 1e-6 * (1.0 + std::abs(y[j]));
      yp[j] = y[j] + step;
      const VectorXd gp = impl_->gradient(yp);
      yp[j] = y[j] - step;
      const VectorXd gm = impl_->gradient(yp);
      yp[j] = y[j];
      h.col(j) = (gp - gm) / (2.0 * step);
    }
    return 0.5 * (h + h.transpose());
  }

  double operator()(const VectorXd& x) const { return local_value(gather(x)); }

  /// Gradient with respect to the full stacked vector.
  VectorXd gradient(const VectorXd& x) const {
    VectorXd g = VectorXd::Zero(x.size());
    const VectorXd gl = local_gradient(gather(x));
    for (Eigen::Index k = 0; k < gl.size(); ++k) g[impl_->support[k]] += gl[k];
    return g;
  }

  MatrixXd hessian(const VectorXd& x) const {
    MatrixXd h = MatrixXd::Zero(x.size(), x.size());
    const MatrixXd hl = local_hessian(gather(x));
    for (Eigen::Index a = 0; a < hl.rows(); ++a)
      for (Eigen::Index b = 0; b < hl.cols(); ++b)
        h(impl_->support[a], impl_->support[b]) += hl(a, b);
    return h;
  }

 private:
  struct Impl {
    std::vector<int> support;
    ValueFn value;
    GradientFn gradient;
    HessianFn hessian;
    std::optional<QuadraticData> quadratic;
    std::optional<Polynomial> polynomial;
  };
  std::shared_ptr<Impl> impl_;
};

}  // namespace gnep
