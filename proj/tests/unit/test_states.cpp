#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "vanhove/dynamics.hpp"
#include "vanhove/states.hpp"

using namespace vanhove;

namespace {

// Narrow bundle sitting on the p axis, where tau is smooth across the support.
struct Bundle {
  PhaseSpaceGrid grid;
  SigmaSpec spec;
  ClassicalWavefunction state;
};

Bundle oscillator_bundle() {
  const PhaseSpaceGrid grid({-0.8, 0.8, 128}, {4.2, 5.8, 128});
  RealField rho = gaussian_density(grid, {0.0, 5.0}, 0.1, 0.1);
  SigmaSpec spec = oscillator_sigma_spec(1.0, 1.0, centroid(rho));
  const RealField sigma = construct_sigma(spec, grid).sigma.field();
  return {grid, std::move(spec), make_wavefunction(std::move(rho), sigma, 1.0)};
}

}  // namespace

TEST(Madelung, RoundTrip) {
  const PhaseSpaceGrid g({-2, 2, 48}, {-2, 2, 48});
  const RealField rho = gaussian_density(g, {0.1, -0.2}, 0.6, 0.5);
  const RealField sigma = sample(g, [](double q, double p) { return 0.3 * q * p + 0.2 * q; });
  const ClassicalWavefunction w = make_wavefunction(rho, sigma, 0.5);
  const ClassicalWavefunction back = madelung_split(w.compose(), 0.5, 0.0, true);
  for (std::size_t n = 0; n < rho.size(); ++n) {
    EXPECT_NEAR(back.rho[n], rho[n], 1e-13 * (1.0 + rho[n]));
    EXPECT_NEAR(back.sigma[n], sigma[n], 1e-10);
  }
}

TEST(Madelung, WrappedPhaseWithoutUnwrap) {
  const PhaseSpaceGrid g({-2, 2, 16}, {-2, 2, 16});
  const ComplexField phi = sample<Complex>(g, [](double q, double) { return std::polar(1.0, 4.0 * q); });
  const ClassicalWavefunction w = madelung_split(phi, 1.0, 0.0, false);
  for (double s : w.sigma.values()) {
    EXPECT_LE(s, std::numbers::pi + 1e-12);
    EXPECT_GE(s, -std::numbers::pi - 1e-12);
  }
}

TEST(Tau, BracketWithHamiltonianIsOne) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (auto [m, w] : {std::pair{1.0, 1.0}, std::pair{2.0, 0.5}}) {
    const AnalyticRule tau = oscillator_tau(m, w);
    const Hamiltonian h = Hamiltonian::harmonic_oscillator(m, w);
    for (int k = 0; k < 50; ++k) {
      const double q = u(rng), p = u(rng);
      EXPECT_NEAR(tau.d_q(q, p) * h.d_p(q, p) - tau.d_p(q, p) * h.d_q(q, p), 1.0, 1e-12);
    }
  }
  const SigmaSpec free = free_particle_sigma_spec(1.5, {0.0, 1.0});
  for (double q : {-1.0, 2.0}) {
    for (double p : {0.5, 3.0}) {
      const double b = free.tau.d_q(q, p) * free.hamiltonian.d_p(q, p) - free.tau.d_p(q, p) * free.hamiltonian.d_q(q, p);
      EXPECT_NEAR(b, 1.0, 1e-12);
    }
  }
}

TEST(Sigma, TimeDerivativeIsMinusH) {
  const Bundle b = oscillator_bundle();
  const RealField dsdt = sigma_time_derivative(b.spec, b.grid);
  const PhaseFunction h = b.spec.hamiltonian.sample(b.grid);
  for (std::size_t n = 0; n < dsdt.size(); ++n) EXPECT_DOUBLE_EQ(dsdt[n], -h[n]);
  // Central difference in t of the constructed phase.
  const double dt = 1e-3;
  for (PhasePoint z : {PhasePoint{0.1, 5.0}, PhasePoint{-0.3, 4.5}}) {
    const double fd = (sigma_value(b.spec, z, dt) - sigma_value(b.spec, z, -dt)) / (2 * dt);
    EXPECT_NEAR(fd, -b.spec.hamiltonian(z.q, z.p), 1e-9);
  }
}

TEST(Sigma, SingularNodesAreFlagged) {
  const PhaseSpaceGrid g({-1, 1, 9}, {-1, 1, 9});
  const SigmaField s = construct_sigma(oscillator_sigma_spec(1.0, 1.0, {1.0, 0.0}), g);
  EXPECT_EQ(s.singular_count, 1u);
  EXPECT_EQ(s.singular[g.index(4, 4)], 1);
  EXPECT_EQ(s.sigma.field().at(4, 4), 0.0);
}

TEST(Constraints, BundlePasses) {
  const Bundle b = oscillator_bundle();
  const ConstraintReport r = verify_constraints(b.state, b.spec.hamiltonian);
  EXPECT_LT(r.r1, 1e-3);
  EXPECT_LT(r.r2, 1e-3);
  EXPECT_TRUE(r.r3_evaluated);
  EXPECT_TRUE(r.pass());
}

TEST(Constraints, DefectRaisesR1) {
  const Bundle b = oscillator_bundle();
  RealField sigma = b.state.sigma.field();
  for (int i = 0; i < b.grid.q().n; ++i)
    for (int j = 0; j < b.grid.p().n; ++j) sigma.at(i, j) += 0.5 * b.grid.q().coord(i) * b.grid.p().coord(j);
  const ClassicalWavefunction bad = make_wavefunction(b.state.rho.field(), sigma, 1.0);
  // d(0.5 qp)/dq = p/2 so r1 = 1/4 exactly in the continuum.
  EXPECT_NEAR(verify_constraints(bad, b.spec.hamiltonian).r1, 0.25, 1e-3);
}

TEST(Constraints, ZeroPhaseFreeParticleGivesUnitR1) {
  const PhaseSpaceGrid g({-2, 2, 64}, {0.5, 3.5, 64});
  const ClassicalWavefunction w = make_wavefunction(gaussian_density(g, {0.0, 2.0}, 0.4, 0.3), RealField(g, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(verify_constraints(w, Hamiltonian::free_particle(1.0), std::nullopt, {}, false).r1, 1.0);
}

TEST(Constraints, MeasuredTimeDerivative) {
  const Bundle b = oscillator_bundle();
  RealField wrong = sigma_time_derivative(b.spec, b.grid);
  EXPECT_LT(verify_constraints(b.state, b.spec.hamiltonian, wrong).r3, 1e-12);
  for (double& v : wrong.values()) v *= 0.5;
  EXPECT_GT(verify_constraints(b.state, b.spec.hamiltonian, wrong).r3, 0.1);
}

TEST(Mollifier, NormalizedGaussian) {
  double s = 0.0;
  const double h = 1e-3;
  for (int k = -5000; k <= 5000; ++k) s += h * mollified_delta(k * h, 0.1);
  EXPECT_NEAR(s, 1.0, 1e-12);
  EXPECT_NEAR(mollified_delta(0.0, 0.2), 1.0 / (std::sqrt(std::numbers::pi) * 0.2), 1e-14);
}

TEST(Eigenstate, EnergyShellExpectation) {
  const PhaseSpaceGrid g({-2.5, 2.5, 160}, {-2.5, 2.5, 160});
  const SigmaSpec spec = oscillator_sigma_spec(1.0, 1.0, {std::sqrt(2.0), 0.0});
  const LevelSetState shell = energy_eigenstate(g, spec, 1.0);
  EXPECT_NEAR(shell.state.norm(), 1.0, 1e-12);
  EXPECT_LT(shell.off_shell_fraction, 1e-6);
  const ExpectationResult e = expectation(spec.hamiltonian.sample(g), shell.state);
  EXPECT_NEAR(e.operator_value, 1.0, 1e-3);
  EXPECT_LT(e.relative, 1e-3);
}

TEST(Eigenstate, ObservableMatchesEnergyDensity) {
  const PhaseSpaceGrid g({-2.5, 2.5, 96}, {-2.5, 2.5, 96});
  const SigmaSpec spec = oscillator_sigma_spec(1.0, 1.0, {std::sqrt(2.0), 0.0});
  const LevelSetState a = energy_eigenstate(g, spec, 1.0);
  const LevelSetState b = observable_eigenstate(spec.hamiltonian.sample(g), 1.0, spec);
  EXPECT_EQ(a.eps, b.eps);
  EXPECT_EQ(a.state.rho.field().data(), b.state.rho.field().data());
}

TEST(Eigenstate, EmptyShellThrows) {
  const PhaseSpaceGrid g({-1, 1, 32}, {-1, 1, 32});
  const SigmaSpec spec = oscillator_sigma_spec(1.0, 1.0, {1.0, 0.0});
  EXPECT_THROW(energy_eigenstate(g, spec, 50.0, std::nullopt, 0.01), NumericalError);
  EXPECT_THROW(energy_eigenstate(g, spec, 0.2, std::nullopt, -1.0), PreconditionError);
}

TEST(Superposition, IdenticalStatesScaleDensity) {
  const Bundle b = oscillator_bundle();
  const SuperpositionResult same = superposition_diagnostic(b.state, b.state, 1.0, 1.0, b.spec.hamiltonian);
  // psi + psi = 2 psi: rho scales by 4, sigma and the residuals are unchanged.
  const ConstraintReport single = verify_constraints(b.state, b.spec.hamiltonian, std::nullopt, {}, false);
  EXPECT_NEAR(same.report.r1, single.r1, 1e-6);
  EXPECT_NEAR(same.state.norm(), 4.0, 1e-10);
  EXPECT_DOUBLE_EQ(same.fringe.contrast, 0.0);  // coincident centroids, no fringes
  for (std::size_t n = 0; n < b.state.rho.size(); ++n) EXPECT_NEAR(same.state.rho[n], 4.0 * b.state.rho[n], 1e-9);
}

TEST(Superposition, ZeroWeightReturnsFirstState) {
  const Bundle b = oscillator_bundle();
  RealField rho2 = gaussian_density(b.grid, {0.3, 5.0}, 0.1, 0.1);
  const ClassicalWavefunction s2 = make_wavefunction(rho2, b.state.sigma.field(), 1.0);
  const SuperpositionResult r = superposition_diagnostic(b.state, s2, 1.0, 0.0, b.spec.hamiltonian);
  for (std::size_t n = 0; n < r.state.rho.size(); ++n) EXPECT_NEAR(r.state.rho[n], b.state.rho[n], 1e-12);
}

TEST(Superposition, DisplacedBundlesInterfere) {
  const PhaseSpaceGrid g({-2.3, 2.3, 128}, {3.3, 6.7, 128});
  const double dq = 5.0 * std::tan(std::numbers::pi / 25.0);
  auto make = [&](double q0) {
    RealField rho = gaussian_density(g, {q0, 5.0}, 0.3158, 0.3158);
    const SigmaSpec s = oscillator_sigma_spec(1.0, 1.0, centroid(rho));
    return make_wavefunction(std::move(rho), construct_sigma(s, g).sigma.field(), 1.0);
  };
  const Hamiltonian h = Hamiltonian::harmonic_oscillator(1.0, 1.0);
  const ClassicalWavefunction a = make(-dq), b = make(dq);
  const SuperpositionResult r = superposition_diagnostic(a, b, 1.0, 1.0, h);
  EXPECT_GT(r.fringe.contrast, 0.5);
  EXPECT_LT(r.fringe.incoherent_contrast, r.fringe.contrast);
  const double base = std::max(verify_constraints(a, h, std::nullopt, {}, false).r1,
                               verify_constraints(b, h, std::nullopt, {}, false).r1);
  EXPECT_GT(r.report.r1, 10.0 * base);
}

TEST(Gaussian, NormalizedWithCentroid) {
  const PhaseSpaceGrid g({-6, 6, 121}, {-6, 6, 121});
  const RealField rho = gaussian_density(g, {0.5, -1.0}, 0.5, 0.7);
  EXPECT_NEAR(quadrature(rho), 1.0, 1e-14);
  const PhasePoint c = centroid(rho);
  EXPECT_NEAR(c.q, 0.5, 1e-9);
  EXPECT_NEAR(c.p, -1.0, 1e-9);
}
