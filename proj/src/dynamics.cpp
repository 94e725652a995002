#include "vanhove/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "vanhove/operators.hpp"

namespace vanhove {

void EvolutionConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw PreconditionError("dt must be positive");
  if (!(t_final >= 0.0) || !std::isfinite(t_final)) throw PreconditionError("t_final must be >= 0");
  if (!(renormalize_threshold >= 0.0)) throw PreconditionError("renormalize_threshold must be >= 0");
}

namespace {

void require_normalized(const ClassicalWavefunction& state, const char* context) {
  const double mass = state.norm();
  if (!(std::abs(mass - 1.0) < 1e-4)) {
    std::ostringstream msg;
    msg << context << ": state is not normalized (mass " << mass << ")";
    throw PreconditionError(msg.str());
  }
}

}  // namespace

ClassicalWavefunction liouville_step(const ClassicalWavefunction& state, const Hamiltonian& h,
                                     const EvolutionConfig& config, StepStats* stats) {
  config.validate();
  if (config.integrator == Integrator::verlet && !h.is_separable()) {
    throw PreconditionError("verlet integration needs a separable Hamiltonian");
  }
  const PhaseSpaceGrid& grid = state.grid();
  if (grid.has_x()) throw PreconditionError("liouville_step works on (q, p) grids");
  const GridInterpolator rho_at(state.rho.field(), config.interpolation);
  const GridInterpolator sigma_at(state.sigma.field(), config.interpolation);
  const double dt = config.dt;
  const double hq = grid.q().spacing(), hp = grid.p().spacing();

  RealField rho(grid), sigma(grid);
  StepStats local;
  for (int i = 0; i < grid.q().n; ++i) {
    for (int j = 0; j < grid.p().n; ++j) {
      const std::size_t n = grid.index(i, j);
      const PhasePoint z{grid.q().coord(i), grid.p().coord(j)};
      const PhasePoint back = flow_point(h, z, -dt, dt, config.integrator);
      const PhasePoint mid = flow_point(h, z, -0.5 * dt, 0.5 * dt, config.integrator);
      local.max_displacement_cells =
          std::max(local.max_displacement_cells, std::hypot((back.q - z.q) / hq, (back.p - z.p) / hp));
      const double action = h.lagrangian(mid.q, mid.p) * dt;
      sigma[n] = sigma_at(back.q, back.p) + action;
      if (rho_at.contains(back.q, back.p)) {
        rho[n] = rho_at(back.q, back.p);
      } else {
        rho[n] = 0.0;
        ++local.exited_nodes;
      }
    }
  }
  if (local.max_displacement_cells > 5.0) {
    std::ostringstream msg;
    msg << "liouville_step: backtrace moved " << local.max_displacement_cells
        << " cells in one step; interpolation accuracy degrades";
    warn(msg.str());
  }
  if (!all_finite(rho) || !all_finite(sigma)) throw NumericalError("liouville_step produced non-finite values");

  local.mass_before = quadrature(rho);
  local.deficit = 1.0 - local.mass_before;
  if (!(local.mass_before > 0.0)) throw NumericalError("liouville_step: all mass left the grid");
  if (std::abs(local.deficit) > config.renormalize_threshold) {
    for (double& r : rho.values()) r /= local.mass_before;
    local.renormalized = true;
  }
  if (stats) *stats = local;
  return ClassicalWavefunction{PhaseFunction(std::move(rho)), PhaseFunction(std::move(sigma)), state.hbar,
                               state.t + dt};
}

namespace {

// sigma_c(z, t1) - sigma_c(z0, t0) with the tau difference brought into one period.
double sigma_difference(const SigmaSpec& spec, PhasePoint z, double t1, PhasePoint z0, double t0) {
  const double tau_ref = spec.tau_reference();
  const double tau1 = spec.tau(z.q, z.p), tau0 = spec.tau(z0.q, z0.p);
  const double h1 = spec.hamiltonian(z.q, z.p), h0 = spec.hamiltonian(z0.q, z0.p);
  double shift = 0.0;
  if (spec.tau_period) {
    const double period = *spec.tau_period;
    shift = period * std::round((tau1 - tau0 - (t1 - t0)) / period);
  }
  return spec.eta(z.q, z.p) - spec.eta(z0.q, z0.p) + h1 * (tau1 - shift - tau_ref - t1) -
         h0 * (tau0 - tau_ref - t0);
}

}  // namespace

ClassicalWavefunction propagator_apply(const ClassicalWavefunction& state0, const Hamiltonian& h,
                                       const SigmaSpec& spec, double t, double dt,
                                       Interpolation interpolation) {
  if (!(dt > 0.0)) throw PreconditionError("propagator_apply: dt must be positive");
  const PhaseSpaceGrid& grid = state0.grid();
  if (grid.has_x()) throw PreconditionError("propagator_apply works on (q, p) grids");
  if (t == 0.0) return state0;
  const GridInterpolator rho_at(state0.rho.field(), interpolation);
  const GridInterpolator sigma_at(state0.sigma.field(), interpolation);
  const Integrator integrator = default_integrator(h);
  const double t0 = state0.t;

  RealField rho(grid), sigma(grid);
  std::size_t exited = 0;
  for (int i = 0; i < grid.q().n; ++i) {
    for (int j = 0; j < grid.p().n; ++j) {
      const std::size_t n = grid.index(i, j);
      const PhasePoint z{grid.q().coord(i), grid.p().coord(j)};
      const PhasePoint origin = flow_point(h, z, -t, dt, integrator);
      sigma[n] = sigma_at(origin.q, origin.p) + sigma_difference(spec, z, t0 + t, origin, t0);
      if (rho_at.contains(origin.q, origin.p)) {
        rho[n] = rho_at(origin.q, origin.p);
      } else {
        rho[n] = 0.0;
        ++exited;
      }
    }
  }
  if (!all_finite(rho) || !all_finite(sigma)) throw NumericalError("propagator_apply produced non-finite values");
  const double deficit = 1.0 - quadrature(rho) / state0.norm();
  if (exited > 0 && std::abs(deficit) > 1e-8) {
    std::ostringstream msg;
    msg << "propagator_apply: " << exited << " nodes trace back outside the grid, mass deficit " << deficit;
    warn(msg.str());
  }
  return ClassicalWavefunction{PhaseFunction(std::move(rho)), PhaseFunction(std::move(sigma)), state0.hbar,
                               t0 + t};
}

double phase_increment(const Hamiltonian& h, const SigmaSpec& spec, PhasePoint start, double t,
                       double dt) {
  const PhasePoint end = flow_point(h, start, t, dt, default_integrator(h));
  return sigma_difference(spec, end, spec.t + t, start, spec.t);
}

ExpectationResult expectation(const PhaseFunction& f, const ClassicalWavefunction& state,
                              StencilOrder order) {
  require_same_grid(f.grid(), state.grid(), "expectation");
  const ComplexField phi = state.compose();
  const VanHoveOperator op = build_vanhove(f, state.hbar, order);
  const Complex value = inner_product(phi, apply(op, phi, order));
  ExpectationResult out;
  out.operator_value = value.real();
  out.imaginary_leakage = std::abs(value.imag());
  const RealField weighted = combine(state.rho.field(), f.field(), [](double r, double v) { return r * v; });
  out.classical_average = quadrature(weighted);
  out.absolute = std::abs(out.operator_value - out.classical_average);
  out.relative = std::abs(out.classical_average) > 0.0 ? out.absolute / std::abs(out.classical_average)
                                                        : out.absolute;
  return out;
}

namespace {

TimeSample record(const ClassicalWavefunction& state, const Hamiltonian& h, const PhaseFunction& h_field,
                  const EvolveOptions& options) {
  TimeSample s;
  s.t = state.t;
  s.norm = state.norm();
  s.energy = expectation(h_field, state, options.constraints.order).operator_value;
  const ConstraintReport report = verify_constraints(state, h, std::nullopt, options.constraints, false);
  s.r1 = report.r1;
  s.r2 = report.r2;
  for (const PhaseFunction& f : options.observables) {
    s.discrepancies.push_back(expectation(f, state, options.constraints.order).absolute);
  }
  return s;
}

}  // namespace

EvolutionResult evolve(const ClassicalWavefunction& state, const Hamiltonian& h,
                       const EvolutionConfig& config, const EvolveOptions& options) {
  config.validate();
  require_normalized(state, "evolve");
  const PhaseFunction h_field = h.sample(state.grid());
  const std::size_t steps = static_cast<std::size_t>(std::llround(config.t_final / config.dt));
  EvolutionResult out{state, {}, 0.0, 0.0, 0, steps};
  out.series.push_back(record(state, h, h_field, options));
  for (std::size_t s = 1; s <= steps; ++s) {
    StepStats stats;
    out.state = liouville_step(out.state, h, config, &stats);
    out.cumulative_deficit += stats.deficit;
    out.worst_deficit = std::max(out.worst_deficit, std::abs(stats.deficit));
    if (stats.renormalized) ++out.renormalizations;
    const bool last = s == steps;
    if (last || (options.record_every > 0 && s % static_cast<std::size_t>(options.record_every) == 0)) {
      out.series.push_back(record(out.state, h, h_field, options));
    }
  }
  return out;
}

}  // namespace vanhove
