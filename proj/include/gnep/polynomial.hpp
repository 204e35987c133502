#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "gnep/error.hpp"

namespace gnep {

/// Product of variable powers, kept sorted by variable index with positive
/// exponents only.
using Monomial = std::vector<std::pair<int, int>>;

/// Sparse multivariate polynomial over globally indexed variables.
class Polynomial {
 public:
  Polynomial() = default;

  static Polynomial constant(double c) {
    Polynomial p;
    if (c != 0.0) p.terms_[{}] = c;
    return p;
  }

  static Polynomial variable(int index, double coeff = 1.0) {
    Polynomial p;
    if (coeff != 0.0) p.terms_[{{index, 1}}] = coeff;
    return p;
  }

  const std::map<Monomial, double>& terms() const { return terms_; }

  bool is_constant() const {
    return terms_.empty() || (terms_.size() == 1 && terms_.begin()->first.empty());
  }

  double constant_term() const {
    auto it = terms_.find({});
    return it == terms_.end() ? 0.0 : it->second;
  }

  int degree() const {
    int d = 0;
    for (const auto& [mono, c] : terms_) {
      int md = 0;
      for (const auto& [v, e] : mono) md += e;
      d = std::max(d, md);
    }
    return d;
  }

  /// Sorted list of variables that appear with a nonzero coefficient.
  std::vector<int> variables() const {
    std::vector<int> vars;
    for (const auto& [mono, c] : terms_)
      for (const auto& [v, e] : mono) vars.push_back(v);
    std::sort(vars.begin(), vars.end());
    vars.erase(std::unique(vars.begin(), vars.end()), vars.end());
    return vars;
  }

  /// Renames variables through `map` (old index -> new index).
  Polynomial reindexed(const std::map<int, int>& map) const {
    Polynomial out;
    for (const auto& [mono, c] : terms_) {
      Monomial m;
      for (const auto& [v, e] : mono) m.emplace_back(map.at(v), e);
      std::sort(m.begin(), m.end());
      out.add_term(std::move(m), c);
    }
    return out;
  }

  Polynomial& operator+=(const Polynomial& o) {
    for (const auto& [mono, c] : o.terms_) add_term(mono, c);
    return *this;
  }
  Polynomial& operator-=(const Polynomial& o) {
    for (const auto& [mono, c] : o.terms_) add_term(mono, -c);
    return *this;
  }
  Polynomial& operator*=(double s) {
    if (s == 0.0) {
      terms_.clear();
      return *this;
    }
    for (auto& [mono, c] : terms_) c *= s;
    return *this;
  }

  friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
  friend Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }
  friend Polynomial operator*(Polynomial a, double s) { return a *= s; }
  friend Polynomial operator*(double s, Polynomial a) { return a *= s; }
  friend Polynomial operator-(Polynomial a) { return a *= -1.0; }

  friend Polynomial operator*(const Polynomial& a, const Polynomial& b) {
    Polynomial out;
    for (const auto& [ma, ca] : a.terms_) {
      for (const auto& [mb, cb] : b.terms_) out.add_term(multiply(ma, mb), ca * cb);
    }
    return out;
  }

  Polynomial pow(int exponent) const {
    Polynomial out = constant(1.0);
    for (int k = 0; k < exponent; ++k) out = out * *this;
    return out;
  }

  /// Evaluation on a vector indexed by the polynomial's own variable indices.
  template <typename Derived>
  double value(const Eigen::MatrixBase<Derived>& x) const {
    double total = 0.0;
    for (const auto& [mono, c] : terms_) {
      double t = c;
      for (const auto& [v, e] : mono) t *= ipow(x[v], e);
      total += t;
    }
    return total;
  }

  template <typename Derived>
  Eigen::VectorXd gradient(const Eigen::MatrixBase<Derived>& x) const {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(x.size());
    for (const auto& [mono, c] : terms_) {
      for (std::size_t a = 0; a < mono.size(); ++a) {
        double t = c * mono[a].second * ipow(x[mono[a].first], mono[a].second - 1);
        for (std::size_t b = 0; b < mono.size(); ++b)
          if (b != a) t *= ipow(x[mono[b].first], mono[b].second);
        g[mono[a].first] += t;
      }
    }
    return g;
  }

  template <typename Derived>
  Eigen::MatrixXd hessian(const Eigen::MatrixBase<Derived>& x) const {
    const auto n = x.size();
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
    for (const auto& [mono, c] : terms_) {
      for (std::size_t a = 0; a < mono.size(); ++a) {
        for (std::size_t b = 0; b < mono.size(); ++b) {
          const auto [va, ea] = mono[a];
          const auto [vb, eb] = mono[b];
          double t = c;
          if (a == b) {
            if (ea < 2) continue;
            t *= ea * (ea - 1) * ipow(x[va], ea - 2);
          } else {
            t *= ea * eb * ipow(x[va], ea - 1) * ipow(x[vb], eb - 1);
          }
          for (std::size_t k = 0; k < mono.size(); ++k)
            if (k != a && k != b) t *= ipow(x[mono[k].first], mono[k].second);
          h(va, vb) += t;
        }
      }
    }
    return h;
  }

 private:
  static double ipow(double x, int e) {
    double r = 1.0;
    for (int k = 0; k < e; ++k) r *= x;
    return r;
  }

  static Monomial multiply(const Monomial& a, const Monomial& b) {
    Monomial out;
    std::size_t i = 0, j = 0;
    while (i < a.size() || j < b.size()) {
      if (j == b.size() || (i < a.size() && a[i].first < b[j].first)) {
        out.push_back(a[i++]);
      } else if (i == a.size() || b[j].first < a[i].first) {
        out.push_back(b[j++]);
      } else {
        out.emplace_back(a[i].first, a[i].second + b[j].second);
        ++i;
        ++j;
      }
    }
    return out;
  }

  void add_term(Monomial mono, double c) {
    auto [it, inserted] = terms_.try_emplace(std::move(mono), 0.0);
    it->second += c;
    if (it->second == 0.0) terms_.erase(it);
  }

  std::map<Monomial, double> terms_;
};

namespace detail {

class PolynomialParser {
 public:
  PolynomialParser(std::string_view text, const std::map<std::string, int, std::less<>>& vars)
      : text_(text), vars_(vars) {}

  Polynomial parse() {
    Polynomial p = expression();
    skip_space();
    if (pos_ != text_.size()) fail("unexpected '" + std::string(1, text_[pos_]) + "'");
    return p;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw Error(ErrorCode::kParse, "column " + std::to_string(pos_ + 1) + ": " + msg);
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  Polynomial expression() {
    Polynomial p = term();
    for (;;) {
      if (accept('+')) {
        p += term();
      } else if (accept('-')) {
        p -= term();
      } else {
        return p;
      }
    }
  }

  Polynomial term() {
    Polynomial p = unary();
    for (;;) {
      if (accept('*')) {
        p = p * unary();
      } else if (accept('/')) {
        Polynomial d = unary();
        if (!d.is_constant() || d.constant_term() == 0.0) fail("division by a non-constant or zero");
        p *= 1.0 / d.constant_term();
      } else {
        return p;
      }
    }
  }

  Polynomial unary() {
    if (accept('-')) return -unary();
    if (accept('+')) return unary();
    Polynomial base = primary();
    if (accept('^')) {
      skip_space();
      std::size_t start = pos_;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      if (start == pos_) fail("expected a non-negative integer exponent");
      base = base.pow(std::stoi(std::string(text_.substr(start, pos_ - start))));
    }
    return base;
  }

  Polynomial primary() {
    skip_space();
    if (pos_ >= text_.size()) fail("unexpected end of expression");
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      Polynomial p = expression();
      if (!accept(')')) fail("expected ')'");
      return p;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const std::string rest(text_.substr(pos_));
      char* end = nullptr;
      const double v = std::strtod(rest.c_str(), &end);
      if (end == rest.c_str()) fail("malformed number");
      pos_ += static_cast<std::size_t>(end - rest.c_str());
      return Polynomial::constant(v);
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = pos_;
      while (pos_ < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
        ++pos_;
      const std::string_view name = text_.substr(start, pos_ - start);
      auto it = vars_.find(name);
      if (it == vars_.end()) {
        pos_ = start;
        fail("unknown variable '" + std::string(name) + "'");
      }
      return Polynomial::variable(it->second);
    }
    fail("unexpected '" + std::string(1, c) + "'");
  }

  std::string_view text_;
  const std::map<std::string, int, std::less<>>& vars_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Parses expressions such as `x^2 + 8/3*x*y - 34*x` into a polynomial.
/// Supports + - * / (by constants), integer powers and parentheses.
inline Polynomial parse_polynomial(std::string_view text,
                                   const std::map<std::string, int, std::less<>>& vars) {
  return detail::PolynomialParser(text, vars).parse();
}

}  // namespace gnep
