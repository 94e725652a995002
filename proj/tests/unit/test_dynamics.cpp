#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "vanhove/dynamics.hpp"

using namespace vanhove;

namespace {

struct Bundle {
  PhaseSpaceGrid grid;
  SigmaSpec spec;
  ClassicalWavefunction state;
};

Bundle oscillator(int n, PhasePoint c, double w) {
  const PhaseSpaceGrid grid({-5, 5, n}, {-5, 5, n});
  RealField rho = gaussian_density(grid, c, w, w);
  SigmaSpec spec = oscillator_sigma_spec(1.0, 1.0, centroid(rho));
  const RealField sigma = construct_sigma(spec, grid).sigma.field();
  return {grid, std::move(spec), make_wavefunction(std::move(rho), sigma, 1.0)};
}

}  // namespace

TEST(Liouville, FreeTranslationOfDensity) {
  const PhaseSpaceGrid g({-3, 5, 128}, {0.5, 3.5, 96});
  const RealField rho = gaussian_density(g, {-1.0, 2.0}, 0.2, 0.2);
  const ClassicalWavefunction s0 = make_wavefunction(rho, RealField(g, 0.0), 1.0);
  EvolutionConfig cfg;
  cfg.dt = 0.02;
  cfg.t_final = 1.0;
  const EvolutionResult res = evolve(s0, Hamiltonian::free_particle(1.0), cfg);
  const PhasePoint c = centroid(res.state.rho.field());
  EXPECT_NEAR(c.q, 1.0, 1e-3);
  EXPECT_NEAR(c.p, 2.0, 1e-3);
  // Exact oracle: rho(q, p, t) = rho0(q - p t, p).
  RealField shifted = sample(g, [&](double q, double p) {
    const double a = (q - p - (-1.0)) / 0.2, b = (p - 2.0) / 0.2;
    return std::exp(-0.5 * (a * a + b * b));
  });
  const double mass = quadrature(shifted);
  for (double& v : shifted.values()) v /= mass;
  EXPECT_LT(l1_distance(res.state.rho.field(), shifted), 5e-3);
}

TEST(Liouville, PhaseIncrementIsLagrangianForFreeParticle) {
  const PhaseSpaceGrid g({-3, 5, 64}, {0.5, 3.5, 64});
  const ClassicalWavefunction s0 =
      make_wavefunction(gaussian_density(g, {0.0, 2.0}, 0.3, 0.3), RealField(g, 0.0), 1.0);
  EvolutionConfig cfg;
  cfg.dt = 0.1;
  cfg.t_final = 0.1;
  const ClassicalWavefunction s1 = liouville_step(s0, Hamiltonian::free_particle(1.0), cfg);
  // L = p^2 / 2 along free lines, sigma0 = 0.
  for (int i = 10; i < 50; i += 7) {
    for (int j = 5; j < 60; j += 11) {
      const double p = g.p().coord(j);
      EXPECT_NEAR(s1.sigma.field().at(i, j), 0.5 * p * p * 0.1, 1e-12);
    }
  }
}

TEST(Liouville, OnePeriodReturn) {
  const Bundle s = oscillator(128, {2.0, 0.0}, 0.3);
  EvolutionConfig cfg;
  cfg.t_final = 2.0 * std::numbers::pi;
  cfg.dt = cfg.t_final / 200;
  const EvolutionResult res = evolve(s.state, s.spec.hamiltonian, cfg);
  EXPECT_LT(l1_distance(res.state.rho.field(), s.state.rho.field()), 1e-2);
  EXPECT_LT(std::abs(res.cumulative_deficit), 1e-4);
  EXPECT_LT(std::abs(res.series.back().energy - res.series.front().energy) / res.series.front().energy, 1e-3);
}

TEST(Liouville, StepStatsAndRenormalization) {
  const Bundle s = oscillator(64, {1.0, 0.0}, 0.4);
  EvolutionConfig cfg;
  cfg.dt = 0.05;
  cfg.t_final = 0.05;
  StepStats st;
  const ClassicalWavefunction out = liouville_step(s.state, s.spec.hamiltonian, cfg, &st);
  EXPECT_NEAR(st.deficit, 1.0 - st.mass_before, 0.0);
  // Corner nodes rotate in from outside the box; the bundle itself stays inside.
  EXPECT_LT(st.exited_nodes, 4u * 64u);
  EXPECT_GT(st.max_displacement_cells, 0.0);
  EXPECT_NEAR(out.norm(), 1.0, 1e-8);
}

TEST(Liouville, ConfigValidation) {
  EvolutionConfig cfg;
  cfg.dt = -1.0;
  EXPECT_THROW(cfg.validate(), PreconditionError);
  const Bundle s = oscillator(32, {1.0, 0.0}, 0.4);
  ClassicalWavefunction unnormalized = s.state;
  RealField rho = unnormalized.rho.field();
  for (double& v : rho.values()) v *= 2.0;
  unnormalized = make_wavefunction(rho, s.state.sigma.field(), 1.0);
  EvolutionConfig ok;
  ok.t_final = 0.1;
  EXPECT_THROW(evolve(unnormalized, s.spec.hamiltonian, ok), PreconditionError);
}

TEST(Propagator, AgreesWithSteppingOverQuarterPeriod) {
  const Bundle s = oscillator(128, {2.0, 0.0}, 0.3);
  EvolutionConfig cfg;
  cfg.t_final = 0.5 * std::numbers::pi;
  cfg.dt = cfg.t_final / 125;
  const EvolutionResult res = evolve(s.state, s.spec.hamiltonian, cfg);
  const ClassicalWavefunction prop = propagator_apply(s.state, s.spec.hamiltonian, s.spec, cfg.t_final, cfg.dt);
  EXPECT_LT(l1_distance(prop.rho.field(), res.state.rho.field()), 1e-2);
}

TEST(Propagator, PhaseIncrementOverFullPeriodVanishes) {
  // d(qp/2) returns to zero after one period once the tau jump is removed.
  const SigmaSpec spec = oscillator_sigma_spec(1.0, 1.0, {1.0, 0.5});
  const double inc = phase_increment(spec.hamiltonian, spec, {1.0, 0.5}, 2.0 * std::numbers::pi, 1e-3);
  EXPECT_NEAR(inc, 0.0, 1e-5);
  // Quarter period from (1, 0): ends at (0, -1), so d(qp/2) = 0 as well.
  EXPECT_NEAR(phase_increment(spec.hamiltonian, spec, {1.0, 0.0}, 0.5 * std::numbers::pi, 1e-3), 0.0, 1e-5);
}

TEST(Expectation, IdentityOnConstrainedBundle) {
  const PhaseSpaceGrid g({-0.8, 0.8, 128}, {4.2, 5.8, 128});
  RealField rho = gaussian_density(g, {0.0, 5.0}, 0.1, 0.1);
  const SigmaSpec spec = oscillator_sigma_spec(1.0, 1.0, centroid(rho));
  const ClassicalWavefunction s = make_wavefunction(rho, construct_sigma(spec, g).sigma.field(), 1.0);
  const ExpectationResult e = expectation(spec.hamiltonian.sample(g), s);
  EXPECT_LT(e.relative, 1e-3);
  // Oracle: integral of rho H for a Gaussian = (q0^2 + p0^2 + wq^2 + wp^2) / 2.
  EXPECT_NEAR(e.classical_average, 0.5 * (25.0 + 0.01 + 0.01), 1e-6);
}

TEST(Expectation, DefectSweepIsMonotone) {
  const PhaseSpaceGrid g({-0.8, 0.8, 128}, {4.2, 5.8, 128});
  RealField rho = gaussian_density(g, {0.0, 5.0}, 0.1, 0.1);
  const SigmaSpec spec = oscillator_sigma_spec(1.0, 1.0, centroid(rho));
  const RealField sigma = construct_sigma(spec, g).sigma.field();
  const PhaseFunction h = spec.hamiltonian.sample(g);
  double prev = -1.0;
  for (double lambda : {0.0, 0.1, 0.2}) {
    const RealField s = sample(g, [&](double q, double p) { return lambda * q * p; }) + sigma;
    const double d = expectation(h, make_wavefunction(rho, s, 1.0)).relative;
    EXPECT_GT(d, prev);
    prev = d;
  }
}
