#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "vanhove/phasespace.hpp"

namespace vanhove {

enum class TauTermination { reached_request, incompleteness_boundary };

const char* to_string(TauTermination reason);

/// Curve generated by tau through dF = {F, tau} dlambda for the oscillator.
/// H(lambda) = E0 - lambda, so the curve ends before lambda = E0.
struct TauFlowResult {
  std::vector<double> lambda;
  std::vector<double> q;
  std::vector<double> p;
  std::vector<double> energy;
  double e0 = 0.0;
  double termination_lambda = 0.0;
  TauTermination reason = TauTermination::reached_request;
};

// RK4 in lambda with steps no longer than dlambda, shortened near H = 0.
// The flow is stopped at lambda = E0 - eps_h (default 1e-3 E0).
TauFlowResult tau_flow(double q0, double p0, double lambda_target, double dlambda,
                       double mass = 1.0, double omega = 1.0,
                       std::optional<double> eps_h = std::nullopt);

struct TimeOperatorResult {
  ComplexField value;
  std::vector<std::uint8_t> mask;  // 1 where |H| < eps_h; value is 0 there
  std::size_t masked = 0;
  double masked_mass = 0.0;  // fraction of integral |phi|^2 on masked nodes
};

/// O_tau phi = (tau + qp/2H) phi + i hbar ((p/2H) dphi/dp + (q/2H) dphi/dq)
/// for the oscillator, with tau = atan2(m omega q, p) / omega.
TimeOperatorResult apply_time_operator(const ComplexField& phi, double eps_h, double hbar = 1.0,
                                       double mass = 1.0, double omega = 1.0,
                                       StencilOrder order = StencilOrder::fourth);

}  // namespace vanhove
