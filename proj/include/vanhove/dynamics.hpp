#pragma once

#include <cstddef>
#include <vector>

#include "vanhove/interpolation.hpp"
#include "vanhove/states.hpp"

namespace vanhove {

struct EvolutionConfig {
  double dt = 1e-2;
  double t_final = 0.0;
  Integrator integrator = Integrator::verlet;
  Interpolation interpolation = Interpolation::cubic;
  // rho is rescaled to unit mass when |1 - mass| exceeds this.
  double renormalize_threshold = 1e-8;

  void validate() const;
};

struct StepStats {
  double mass_before = 1.0;  // quadrature(rho) after transport, before renormalization
  double deficit = 0.0;      // 1 - mass_before
  bool renormalized = false;
  double max_displacement_cells = 0.0;
  std::size_t exited_nodes = 0;  // backtraced outside the grid; rho set to 0
};

/// One semi-Lagrangian step: rho(z, t + dt) = rho(z_back, t),
/// sigma(z, t + dt) = sigma(z_back, t) + L(z_mid) dt.
ClassicalWavefunction liouville_step(const ClassicalWavefunction& state, const Hamiltonian& h,
                                     const EvolutionConfig& config, StepStats* stats = nullptr);

/// Transports rho along the time-t flow map and adds the phase increment
/// sigma_c(z, t0 + t) - sigma_c(z', t0), where sigma_c is the phase constructed
/// from `spec`. `dt` is the trajectory integration step.
ClassicalWavefunction propagator_apply(const ClassicalWavefunction& state0, const Hamiltonian& h,
                                       const SigmaSpec& spec, double t, double dt,
                                       Interpolation interpolation = Interpolation::cubic);

// sigma_c(z(t), t0 + t) - sigma_c(z0, t0) along one trajectory. Multiples of
// the tau period are removed, so for the oscillator this is d(qp/2).
double phase_increment(const Hamiltonian& h, const SigmaSpec& spec, PhasePoint start, double t,
                       double dt);

struct ExpectationResult {
  double operator_value = 0.0;     // Re <phi|O_F|phi>
  double classical_average = 0.0;  // integral of rho F
  double absolute = 0.0;
  double relative = 0.0;
  double imaginary_leakage = 0.0;  // |Im <phi|O_F|phi>|
};

ExpectationResult expectation(const PhaseFunction& f, const ClassicalWavefunction& state,
                              StencilOrder order = StencilOrder::fourth);

struct TimeSample {
  double t = 0.0;
  double norm = 0.0;
  double energy = 0.0;
  double r1 = 0.0;
  double r2 = 0.0;
  std::vector<double> discrepancies;  // one per observable
};

struct EvolutionResult {
  ClassicalWavefunction state;
  std::vector<TimeSample> series;
  double cumulative_deficit = 0.0;  // sum of per-step deficits
  double worst_deficit = 0.0;       // largest |deficit| of a single step
  std::size_t renormalizations = 0;
  std::size_t steps = 0;
};

struct EvolveOptions {
  std::vector<PhaseFunction> observables;
  ConstraintOptions constraints;
  int record_every = 0;  // 0 records only the first and last state
};

EvolutionResult evolve(const ClassicalWavefunction& state, const Hamiltonian& h,
                       const EvolutionConfig& config, const EvolveOptions& options = {});

}  // namespace vanhove
