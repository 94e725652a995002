#include "vanhove/operators.hpp"

#include <cmath>

namespace vanhove {

namespace {

bool is_zero(const RealField& f) {
  for (double v : f.values()) {
    if (v != 0.0) return false;
  }
  return true;
}

PhaseFunction combined(double a, const PhaseFunction& f, double b, const PhaseFunction& g) {
  require_same_grid(f.grid(), g.grid(), "linear combination");
  if (f.has_rule() && g.has_rule()) {
    return PhaseFunction::sample(f.grid(), linear_combination(a, *f.rule(), b, *g.rule()));
  }
  return PhaseFunction(combine(f.field(), g.field(), [a, b](double x, double y) { return a * x + b * y; }));
}

PhaseFunction squared(const PhaseFunction& f) {
  if (f.has_rule()) return PhaseFunction::sample(f.grid(), square(*f.rule()));
  return PhaseFunction(transform(f.field(), [](double v) { return v * v; }));
}

PhaseFunction bracket_of(const PhaseFunction& f, const PhaseFunction& g, StencilOrder order,
                         bool* analytic) {
  const bool closed_form = f.has_rule() && g.has_rule() &&
                           ((f.rule()->polynomial && g.rule()->polynomial) ||
                            (f.rule()->has_gradient() && g.rule()->has_gradient()));
  *analytic = closed_form;
  if (closed_form) return PhaseFunction::sample(f.grid(), analytic_bracket(*f.rule(), *g.rule()));
  return poisson_bracket(f, g, order);
}

double norm_of_difference(const ComplexField& a, const ComplexField& b) {
  return l2_norm(a - b);
}

}  // namespace

VanHoveOperator build_vanhove(const PhaseFunction& f, double hbar, StencilOrder order) {
  if (!(hbar > 0.0)) throw PreconditionError("hbar must be positive");
  const PhaseSpaceGrid& grid = f.grid();
  RealField dq(grid), dp(grid);
  const bool analytic = f.has_rule() && f.rule()->has_gradient();
  if (analytic) {
    const AnalyticRule& rule = *f.rule();
    dq = sample(grid, [&](double q, double p) { return rule.d_q(q, p); });
    dp = sample(grid, [&](double q, double p) { return rule.d_p(q, p); });
  } else {
    dq = partial_derivative(f.field(), AxisId::q, order);
    dp = partial_derivative(f.field(), AxisId::p, order);
  }
  RealField theta(grid), xi_q(grid), xi_p(grid);
  const auto [nq, np, nx] = grid.shape();
  for (int i = 0; i < nq; ++i) {
    for (int j = 0; j < np; ++j) {
      const std::size_t n = grid.index(i, j);
      const double p = grid.p().coord(j);
      theta[n] = f[n] - p * dp[n];
      xi_q[n] = dp[n];
      xi_p[n] = -dq[n];
    }
  }
  return VanHoveOperator{f, std::move(theta), std::move(xi_q), std::move(xi_p), hbar, analytic};
}

ComplexField apply(const VanHoveOperator& op, const ComplexField& phi, StencilOrder order) {
  const PhaseSpaceGrid& g = phi.grid();
  if (!(g.q() == op.grid().q()) || !(g.p() == op.grid().p())) {
    throw GridMismatch("apply: operator and wavefunction live on different grids");
  }
  const bool advect_q = !is_zero(op.xi_q);
  const bool advect_p = !is_zero(op.xi_p);
  const ComplexField dq = advect_q ? partial_derivative(phi, AxisId::q, order) : ComplexField(g);
  const ComplexField dp = advect_p ? partial_derivative(phi, AxisId::p, order) : ComplexField(g);
  const Complex ih(0.0, op.hbar);
  ComplexField out(g);
  const auto [nq, np, nx] = g.shape();
  std::size_t idx = 0;
  for (int i = 0; i < nq; ++i) {
    for (int j = 0; j < np; ++j) {
      const std::size_t n = op.grid().index(i, j);
      const double theta = op.theta[n], vq = op.xi_q[n], vp = op.xi_p[n];
      for (int k = 0; k < nx; ++k, ++idx) {
        Complex advect(0.0, 0.0);
        if (advect_q) advect += vq * dq[idx];
        if (advect_p) advect += vp * dp[idx];
        out[idx] = theta * phi[idx] - ih * advect;
      }
    }
  }
  return out;
}

CommutatorResidual commutator_residual(const PhaseFunction& f, const PhaseFunction& g,
                                       const ComplexField& phi, double hbar,
                                       StencilOrder order) {
  require_same_grid(f.grid(), g.grid(), "commutator_residual");
  CommutatorResidual out;
  out.boundary_mass = check_boundary_mass(phi, "commutator_residual");
  const VanHoveOperator of = build_vanhove(f, hbar, order);
  const VanHoveOperator og = build_vanhove(g, hbar, order);
  const PhaseFunction fg = bracket_of(f, g, order, &out.analytic_bracket);
  const VanHoveOperator ofg = build_vanhove(fg, hbar, order);

  const ComplexField fgphi = apply(of, apply(og, phi, order), order);
  const ComplexField gfphi = apply(og, apply(of, phi, order), order);
  const ComplexField rhs = Complex(0.0, hbar) * apply(ofg, phi, order);
  ComplexField diff = fgphi - gfphi;
  out.residual = norm_of_difference(diff, rhs);
  const double norm = l2_norm(phi);
  out.relative = norm > 0.0 ? out.residual / norm : 0.0;
  return out;
}

const RuleCheck& DiracAuditReport::rule(const std::string& name) const {
  for (const auto& r : rules) {
    if (r.rule == name) return r;
  }
  throw PreconditionError("unknown rule: " + name);
}

nlohmann::json DiracAuditReport::to_json() const {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : rules) {
    nlohmann::json entry = {{"rule", r.rule},
                            {"residual", r.residual},
                            {"relative", r.relative},
                            {"pass", r.pass},
                            {"tolerance", r.tolerance},
                            {"expected_to_hold", r.expected_to_hold}};
    if (r.rule == "poisson_bracket_commutator") entry["analytic_bracket"] = r.analytic_bracket;
    out.push_back(std::move(entry));
  }
  return out;
}

DiracAuditReport dirac_rule_audit(const PhaseFunction& f, const PhaseFunction& g,
                                  const ComplexField& phi, double a, double b, double hbar,
                                  StencilOrder order, DiracAuditTolerances tol) {
  require_same_grid(f.grid(), g.grid(), "dirac_rule_audit");
  const double norm = l2_norm(phi);
  auto rel = [norm](double r) { return norm > 0.0 ? r / norm : 0.0; };
  DiracAuditReport report;
  const VanHoveOperator of = build_vanhove(f, hbar, order);
  const VanHoveOperator og = build_vanhove(g, hbar, order);
  const ComplexField ofphi = apply(of, phi, order);

  {
    const VanHoveOperator lin = build_vanhove(combined(a, f, b, g), hbar, order);
    const ComplexField lhs = apply(lin, phi, order);
    const ComplexField rhs = a * ofphi + b * apply(og, phi, order);
    const double r = norm_of_difference(lhs, rhs);
    report.rules.push_back({"linearity", r, rel(r), tol.linearity, rel(r) <= tol.linearity, true});
  }
  {
    const VanHoveOperator osq = build_vanhove(squared(f), hbar, order);
    const double r = norm_of_difference(apply(of, ofphi, order), apply(osq, phi, order));
    bool constant = false;
    if (f.has_rule() && f.rule()->polynomial) {
      const auto terms = f.rule()->polynomial->terms();
      constant = terms.empty() || (terms.size() == 1 && terms[0].q_power == 0 && terms[0].p_power == 0);
    }
    report.rules.push_back({"power", r, rel(r), tol.power, rel(r) <= tol.power, constant});
  }
  {
    const PhaseFunction one = PhaseFunction::sample(f.grid(), AnalyticRule::from(Polynomial::constant(1.0), "1"));
    const double r = norm_of_difference(apply(build_vanhove(one, hbar, order), phi, order), phi);
    report.rules.push_back({"identity", r, rel(r), tol.identity, rel(r) <= tol.identity, true});
  }
  {
    const CommutatorResidual c = commutator_residual(f, g, phi, hbar, order);
    RuleCheck check{"poisson_bracket_commutator", c.residual, c.relative, tol.bracket,
                    c.relative <= tol.bracket, true};
    check.analytic_bracket = c.analytic_bracket;
    report.rules.push_back(check);
  }
  return report;
}

}  // namespace vanhove
