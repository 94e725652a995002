#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vanhove/phasespace.hpp"

namespace vanhove {

/// O_F = theta(F) + i hbar ({F, .}) stored as grid fields and applied
/// matrix-free. xi_q = dF/dp and xi_p = -dF/dq are the velocity components of
/// the Hamiltonian flow generated by F, so O_F phi = theta phi - i hbar
/// (xi_q dphi/dq + xi_p dphi/dp).
struct VanHoveOperator {
  PhaseFunction source;
  RealField theta;  // F - p dF/dp
  RealField xi_q;
  RealField xi_p;
  double hbar = 1.0;
  bool analytic_gradient = false;

  const PhaseSpaceGrid& grid() const { return theta.grid(); }
};

// Uses the rule's closed-form gradient when present, stencils otherwise.
VanHoveOperator build_vanhove(const PhaseFunction& f, double hbar,
                              StencilOrder order = StencilOrder::fourth);

// phi may live on the (q, p) grid of the operator or on a (q, p, x) grid
// sharing those axes; the operator acts on every x slice.
ComplexField apply(const VanHoveOperator& op, const ComplexField& phi,
                   StencilOrder order = StencilOrder::fourth);

struct CommutatorResidual {
  double residual = 0.0;  // ||([O_F, O_G] - i hbar O_{F,G}) phi||
  double relative = 0.0;  // residual / ||phi||
  bool analytic_bracket = false;
  double boundary_mass = 0.0;
};

CommutatorResidual commutator_residual(const PhaseFunction& f, const PhaseFunction& g,
                                       const ComplexField& phi, double hbar,
                                       StencilOrder order = StencilOrder::fourth);

struct RuleCheck {
  std::string rule;
  double residual = 0.0;
  double relative = 0.0;
  double tolerance = 0.0;
  bool pass = false;              // relative <= tolerance, i.e. the rule holds
  bool expected_to_hold = true;
  bool analytic_bracket = false;  // rule 4 only

  bool as_expected() const { return pass == expected_to_hold; }
};

struct DiracAuditTolerances {
  double linearity = 1e-10;
  double power = 1e-6;
  double identity = 1e-12;
  double bracket = 1e-2;
};

/// Checks the four quantization rules for van Hove operators: linearity,
/// power, identity and bracket-to-commutator. The power rule is expected to
/// fail for any non-constant F.
struct DiracAuditReport {
  std::vector<RuleCheck> rules;

  const RuleCheck& rule(const std::string& name) const;
  nlohmann::json to_json() const;
};

DiracAuditReport dirac_rule_audit(const PhaseFunction& f, const PhaseFunction& g,
                                  const ComplexField& phi, double a, double b, double hbar,
                                  StencilOrder order = StencilOrder::fourth,
                                  DiracAuditTolerances tol = {});

}  // namespace vanhove
