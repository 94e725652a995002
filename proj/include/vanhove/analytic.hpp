#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace vanhove {

/// Finite sum of c * q^a * p^b with exact derivatives and brackets.
class Polynomial {
 public:
  struct Term {
    double coeff;
    int q_power;
    int p_power;
  };

  Polynomial() = default;
  explicit Polynomial(const std::vector<Term>& terms);

  static Polynomial constant(double c);
  static Polynomial monomial(double c, int q_power, int p_power);
  static Polynomial q() { return monomial(1.0, 1, 0); }
  static Polynomial p() { return monomial(1.0, 0, 1); }

  double operator()(double q, double p) const;
  Polynomial d_q() const;
  Polynomial d_p() const;
  std::vector<Term> terms() const;
  bool is_zero() const { return terms_.empty(); }
  std::string to_string() const;

  Polynomial operator+(const Polynomial& other) const;
  Polynomial operator-(const Polynomial& other) const;
  Polynomial operator*(const Polynomial& other) const;
  friend Polynomial operator*(double s, const Polynomial& poly);
  bool operator==(const Polynomial&) const = default;

 private:
  void add(double coeff, int a, int b);
  std::map<std::pair<int, int>, double> terms_;
};

// {F, G} = dF/dq dG/dp - dF/dp dG/dq.
Polynomial poisson_bracket(const Polynomial& f, const Polynomial& g);

using ScalarFn = std::function<double(double q, double p)>;

/// Closed-form description of a phase-space function. The gradient is
/// optional; rules without one fall back to numerical differentiation.
struct AnalyticRule {
  std::string name;
  ScalarFn value;
  ScalarFn d_q;
  ScalarFn d_p;
  std::optional<Polynomial> polynomial;

  bool has_gradient() const { return static_cast<bool>(d_q) && static_cast<bool>(d_p); }
  double operator()(double q, double p) const { return value(q, p); }

  static AnalyticRule from(const Polynomial& poly, std::string name = {});
};

// Bracket of two rules. Polynomial inputs give a polynomial result with a
// gradient; otherwise the result carries a value only. Both inputs need a
// gradient.
AnalyticRule analytic_bracket(const AnalyticRule& f, const AnalyticRule& g);
AnalyticRule linear_combination(double a, const AnalyticRule& f, double b, const AnalyticRule& g);
AnalyticRule square(const AnalyticRule& f);

}  // namespace vanhove
