#include "vanhove/analytic.hpp"

#include <cmath>
#include <sstream>

#include "vanhove/error.hpp"

namespace vanhove {

Polynomial::Polynomial(const std::vector<Term>& terms) {
  for (const auto& t : terms) add(t.coeff, t.q_power, t.p_power);
}

Polynomial Polynomial::constant(double c) { return monomial(c, 0, 0); }

Polynomial Polynomial::monomial(double c, int q_power, int p_power) {
  if (q_power < 0 || p_power < 0) throw PreconditionError("negative polynomial power");
  Polynomial out;
  out.add(c, q_power, p_power);
  return out;
}

void Polynomial::add(double coeff, int a, int b) {
  if (coeff == 0.0) return;
  auto [it, inserted] = terms_.try_emplace({a, b}, coeff);
  if (!inserted) {
    it->second += coeff;
    if (it->second == 0.0) terms_.erase(it);
  }
}

double Polynomial::operator()(double q, double p) const {
  double sum = 0.0;
  for (const auto& [powers, c] : terms_) {
    sum += c * std::pow(q, powers.first) * std::pow(p, powers.second);
  }
  return sum;
}

Polynomial Polynomial::d_q() const {
  Polynomial out;
  for (const auto& [powers, c] : terms_) {
    if (powers.first > 0) out.add(c * powers.first, powers.first - 1, powers.second);
  }
  return out;
}

Polynomial Polynomial::d_p() const {
  Polynomial out;
  for (const auto& [powers, c] : terms_) {
    if (powers.second > 0) out.add(c * powers.second, powers.first, powers.second - 1);
  }
  return out;
}

std::vector<Polynomial::Term> Polynomial::terms() const {
  std::vector<Term> out;
  for (const auto& [powers, c] : terms_) out.push_back({c, powers.first, powers.second});
  return out;
}

std::string Polynomial::to_string() const {
  if (terms_.empty()) return "0";
  std::ostringstream os;
  bool first = true;
  for (const auto& [powers, c] : terms_) {
    if (!first) os << " + ";
    first = false;
    os << c;
    if (powers.first > 0) os << "*q^" << powers.first;
    if (powers.second > 0) os << "*p^" << powers.second;
  }
  return os.str();
}

Polynomial Polynomial::operator+(const Polynomial& other) const {
  Polynomial out = *this;
  for (const auto& [powers, c] : other.terms_) out.add(c, powers.first, powers.second);
  return out;
}

Polynomial Polynomial::operator-(const Polynomial& other) const {
  return *this + (-1.0) * other;
}

Polynomial Polynomial::operator*(const Polynomial& other) const {
  Polynomial out;
  for (const auto& [pa, ca] : terms_) {
    for (const auto& [pb, cb] : other.terms_) {
      out.add(ca * cb, pa.first + pb.first, pa.second + pb.second);
    }
  }
  return out;
}

Polynomial operator*(double s, const Polynomial& poly) {
  Polynomial out;
  for (const auto& [powers, c] : poly.terms_) out.add(s * c, powers.first, powers.second);
  return out;
}

Polynomial poisson_bracket(const Polynomial& f, const Polynomial& g) {
  return f.d_q() * g.d_p() - f.d_p() * g.d_q();
}

AnalyticRule AnalyticRule::from(const Polynomial& poly, std::string name) {
  AnalyticRule rule;
  rule.name = name.empty() ? poly.to_string() : std::move(name);
  rule.value = [poly](double q, double p) { return poly(q, p); };
  rule.d_q = [d = poly.d_q()](double q, double p) { return d(q, p); };
  rule.d_p = [d = poly.d_p()](double q, double p) { return d(q, p); };
  rule.polynomial = poly;
  return rule;
}

AnalyticRule analytic_bracket(const AnalyticRule& f, const AnalyticRule& g) {
  if (f.polynomial && g.polynomial) {
    return AnalyticRule::from(poisson_bracket(*f.polynomial, *g.polynomial),
                              "{" + f.name + ", " + g.name + "}");
  }
  if (!f.has_gradient() || !g.has_gradient()) {
    throw PreconditionError("analytic bracket needs closed-form gradients");
  }
  AnalyticRule out;
  out.name = "{" + f.name + ", " + g.name + "}";
  out.value = [f, g](double q, double p) {
    return f.d_q(q, p) * g.d_p(q, p) - f.d_p(q, p) * g.d_q(q, p);
  };
  return out;
}

AnalyticRule linear_combination(double a, const AnalyticRule& f, double b,
                                const AnalyticRule& g) {
  if (f.polynomial && g.polynomial) {
    std::ostringstream name;
    name << a << "*(" << f.name << ") + " << b << "*(" << g.name << ")";
    return AnalyticRule::from(a * *f.polynomial + b * *g.polynomial, name.str());
  }
  AnalyticRule out;
  std::ostringstream name;
  name << a << "*(" << f.name << ") + " << b << "*(" << g.name << ")";
  out.name = name.str();
  out.value = [=](double q, double p) { return a * f.value(q, p) + b * g.value(q, p); };
  if (f.has_gradient() && g.has_gradient()) {
    out.d_q = [=](double q, double p) { return a * f.d_q(q, p) + b * g.d_q(q, p); };
    out.d_p = [=](double q, double p) { return a * f.d_p(q, p) + b * g.d_p(q, p); };
  }
  return out;
}

AnalyticRule square(const AnalyticRule& f) {
  if (f.polynomial) return AnalyticRule::from(*f.polynomial * *f.polynomial, "(" + f.name + ")^2");
  AnalyticRule out;
  out.name = "(" + f.name + ")^2";
  out.value = [f](double q, double p) {
    const double v = f.value(q, p);
    return v * v;
  };
  if (f.has_gradient()) {
    out.d_q = [f](double q, double p) { return 2.0 * f.value(q, p) * f.d_q(q, p); };
    out.d_p = [f](double q, double p) { return 2.0 * f.value(q, p) * f.d_p(q, p); };
  }
  return out;
}

}  // namespace vanhove
