#include "vanhove/timeop.hpp"

#include <algorithm>
#include <cmath>

namespace vanhove {

const char* to_string(TauTermination reason) {
  return reason == TauTermination::reached_request ? "reached_request" : "incompleteness_boundary";
}

TauFlowResult tau_flow(double q0, double p0, double lambda_target, double dlambda, double mass,
                       double omega, std::optional<double> eps_h) {
  if (!(dlambda > 0.0)) throw PreconditionError("tau_flow: dlambda must be positive");
  if (!(lambda_target >= 0.0)) throw PreconditionError("tau_flow: lambda_target must be >= 0");
  const Hamiltonian h = Hamiltonian::harmonic_oscillator(mass, omega);
  const double e0 = h(q0, p0);
  if (!(e0 > 0.0)) throw PreconditionError("flow undefined at H = 0");
  const double cutoff = eps_h.value_or(1e-3 * e0);
  if (!(cutoff > 0.0) || cutoff >= e0) throw PreconditionError("tau_flow: eps_h must lie in (0, E0)");

  TauFlowResult out;
  out.e0 = e0;
  double stop = lambda_target;
  if (lambda_target > e0 - cutoff) {
    stop = e0 - cutoff;
    out.reason = TauTermination::incompleteness_boundary;
  }

  // dq/dlambda = {q, tau} = -q / 2H and dp/dlambda = {p, tau} = -p / 2H.
  auto rhs = [&h](double q, double p, double& dq, double& dp) {
    const double e = h(q, p);
    dq = -q / (2.0 * e);
    dp = -p / (2.0 * e);
  };
  double lambda = 0.0, q = q0, p = p0;
  auto push = [&] {
    out.lambda.push_back(lambda);
    out.q.push_back(q);
    out.p.push_back(p);
    out.energy.push_back(h(q, p));
  };
  push();
  while (stop - lambda > 1e-14 * e0) {
    const double step = std::min({dlambda, stop - lambda, 0.02 * h(q, p)});
    double k1q, k1p, k2q, k2p, k3q, k3p, k4q, k4p;
    rhs(q, p, k1q, k1p);
    rhs(q + 0.5 * step * k1q, p + 0.5 * step * k1p, k2q, k2p);
    rhs(q + 0.5 * step * k2q, p + 0.5 * step * k2p, k3q, k3p);
    rhs(q + step * k3q, p + step * k3p, k4q, k4p);
    q += step / 6.0 * (k1q + 2.0 * k2q + 2.0 * k3q + k4q);
    p += step / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
    lambda += step;
    if (!std::isfinite(q) || !std::isfinite(p)) throw NumericalError("tau_flow diverged");
    push();
  }
  out.termination_lambda = lambda;
  return out;
}

TimeOperatorResult apply_time_operator(const ComplexField& phi, double eps_h, double hbar,
                                       double mass, double omega, StencilOrder order) {
  if (!(eps_h > 0.0)) throw PreconditionError("apply_time_operator: eps_h must be positive");
  const PhaseSpaceGrid& grid = phi.grid();
  if (grid.has_x()) throw PreconditionError("apply_time_operator works on (q, p) grids");
  const Hamiltonian h = Hamiltonian::harmonic_oscillator(mass, omega);
  const ComplexField dq = partial_derivative(phi, AxisId::q, order);
  const ComplexField dp = partial_derivative(phi, AxisId::p, order);
  const Complex ih(0.0, hbar);

  TimeOperatorResult out{ComplexField(grid), std::vector<std::uint8_t>(grid.size(), 0), 0, 0.0};
  RealField density(grid), masked_density(grid);
  for (int i = 0; i < grid.q().n; ++i) {
    const double q = grid.q().coord(i);
    for (int j = 0; j < grid.p().n; ++j) {
      const double p = grid.p().coord(j);
      const std::size_t n = grid.index(i, j);
      const double e = h(q, p);
      density[n] = std::norm(phi[n]);
      if (std::abs(e) < eps_h) {
        out.mask[n] = 1;
        ++out.masked;
        masked_density[n] = density[n];
        continue;
      }
      const double tau = std::atan2(mass * omega * q, p) / omega;
      const double a = p / (2.0 * e), b = q / (2.0 * e);
      out.value[n] = (tau + q * p / (2.0 * e)) * phi[n] + ih * (a * dp[n] + b * dq[n]);
    }
  }
  if (out.masked == grid.size()) throw NumericalError("apply_time_operator: every node is masked");
  const double total = quadrature(density);
  out.masked_mass = total > 0.0 ? quadrature(masked_density) / total : 0.0;
  return out;
}

}  // namespace vanhove
