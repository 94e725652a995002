#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "vanhove/hybrid.hpp"
#include "vanhove/states.hpp"

using namespace vanhove;

namespace {

std::vector<Complex> gaussian_chi(const Axis& x, double x0, double s0, double k0) {
  std::vector<Complex> chi(x.n);
  for (int k = 0; k < x.n; ++k) {
    const double d = x.coord(k) - x0;
    chi[k] = std::polar(std::pow(2 * std::numbers::pi * s0 * s0, -0.25) * std::exp(-d * d / (4 * s0 * s0)), k0 * x.coord(k));
  }
  return chi;
}

ComplexField classical_phi(const PhaseSpaceGrid& plane, PhasePoint c, double w) {
  const RealField rho = gaussian_density(plane, c, w, w);
  ComplexField phi(plane);
  for (int i = 0; i < plane.q().n; ++i)
    for (int j = 0; j < plane.p().n; ++j)
      phi.at(i, j) = std::polar(std::sqrt(rho.at(i, j)), c.p * plane.q().coord(i));
  return phi;
}

HybridStateContinuous make_state(const PhaseSpaceGrid& grid, HybridPotential v, double s0 = 1.0) {
  HybridStateContinuous s{product_state(classical_phi(grid.phase_plane(), {1.0, 1.0}, 0.7), grid.x(),
                                        gaussian_chi(grid.x(), 0.0, s0, 0.0)),
                          1.0, 1.0, 1.0, std::move(v), 0.0};
  const double n = s.norm();
  for (Complex& z : s.psi.values()) z /= std::sqrt(n);
  return s;
}

double x_width(const HybridMarginals& m) {
  double mean = 0.0, second = 0.0;
  const double h = m.x.spacing();
  for (int k = 0; k < m.x.n; ++k) {
    const double w = (k == 0 || k == m.x.n - 1) ? 0.5 * h : h;
    mean += w * m.x.coord(k) * m.rho_q[k];
    second += w * m.x.coord(k) * m.x.coord(k) * m.rho_q[k];
  }
  mean /= m.mass_q;
  return std::sqrt(second / m.mass_q - mean * mean);
}

ComplexField random_state(const PhaseSpaceGrid& grid, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double cq = u(rng), cp = u(rng), cx = u(rng), k = u(rng);
  ComplexField psi = sample<Complex>(grid, [&](double q, double p, double x) {
    const double a = q - cq, b = p - cp, d = x - cx;
    return std::polar(std::exp(-0.3 * (a * a + b * b + d * d) - 0.1 * a * d), k * (q + p + x));
  });
  const double n = l2_norm(psi);
  for (Complex& z : psi.values()) z /= n;
  return psi;
}

const PhaseSpaceGrid kGrid({-6, 6, 32}, {-6, 6, 32}, {-8, 8, 64});

}  // namespace

TEST(Hybrid, ProductMarginalsEqualFactors) {
  const HybridStateContinuous s = make_state(kGrid, HybridPotential::none());
  const HybridMarginals m = hybrid_marginals(s);
  EXPECT_NEAR(m.mass_c, 1.0, 1e-6);
  EXPECT_NEAR(m.mass_q, 1.0, 1e-6);
  const RealField rho = gaussian_density(kGrid.phase_plane(), {1.0, 1.0}, 0.7, 0.7);
  const auto chi = gaussian_chi(kGrid.x(), 0.0, 1.0, 0.0);
  // Each marginal is the factor times the other factor's mass.
  double chi_mass = 0.0;
  for (int k = 0; k < kGrid.x().n; ++k) {
    chi_mass += ((k == 0 || k == kGrid.x().n - 1) ? 0.5 : 1.0) * kGrid.x().spacing() * std::norm(chi[k]);
  }
  for (std::size_t n = 0; n < rho.size(); ++n) EXPECT_NEAR(m.rho_c[n], rho[n] / m.mass_q * m.mass_c, 1e-6);
  for (int k = 0; k < kGrid.x().n; ++k) EXPECT_NEAR(m.rho_q[k], std::norm(chi[k]) / chi_mass, 1e-6);
  EXPECT_LT(factorization_residual(s.psi), 1e-12);
}

TEST(Hybrid, FreeEvolutionKeepsProductAndSpreads) {
  const HybridStateContinuous s0 = make_state(kGrid, HybridPotential::none());
  const HybridStateContinuous s1 = hybrid_evolve(s0, 0.01, 100);
  EXPECT_NEAR(s1.t, 1.0, 1e-12);
  EXPECT_LT(factorization_residual(s1.psi), 1e-6);
  // sigma(t) = sigma0 sqrt(1 + (hbar t / 2 m sigma0^2)^2)
  EXPECT_NEAR(x_width(hybrid_marginals(s1)), std::sqrt(1.25), 1e-3);
}

TEST(Hybrid, FreeClassicalSectorTranslates) {
  const HybridStateContinuous s0 = make_state(kGrid, HybridPotential::none());
  const HybridStateContinuous s1 = hybrid_evolve(s0, 0.01, 50);
  // <O_q> moves with the bundle momentum p0 = 1.
  EXPECT_NEAR(mean_vanhove_q(s1) - mean_vanhove_q(s0), 0.5, 1e-3);
}

TEST(Hybrid, CoupledConservation) {
  const HybridStateContinuous s0 = make_state(kGrid, HybridPotential::harmonic_coupling(1.0));
  const double e0 = hybrid_energy(s0);
  HybridStateContinuous s = s0;
  const HybridPropagator prop(kGrid, settings_of(s), 1e-3);
  for (int k = 0; k < 100; ++k) prop.step(s.psi);
  EXPECT_NEAR(s.norm(), s0.norm(), 1e-4);
  EXPECT_LT(std::abs(hybrid_energy(s) - e0) / std::abs(e0), 1e-3);
  const HybridMarginals m = hybrid_marginals(s);
  EXPECT_NEAR(m.mass_c, 1.0, 1e-4);
  EXPECT_NEAR(m.mass_q, 1.0, 1e-4);
  EXPECT_GT(factorization_residual(s.psi), 1e-8);  // coupling entangles the sectors
}

TEST(Hybrid, PropagatorMatchesRepeatedStepCalls) {
  const HybridStateContinuous s0 = make_state(kGrid, HybridPotential::harmonic_coupling(0.5));
  const HybridStateContinuous a = hybrid_evolve(s0, 0.01, 3);
  const HybridStateContinuous b = hybrid_step(hybrid_step(hybrid_step(s0, 0.01), 0.01), 0.01);
  EXPECT_EQ(a.psi.data(), b.psi.data());
}

TEST(Hybrid, SeparabilityIndependentOfState) {
  std::mt19937_64 rng(5);
  const PhaseSpaceGrid plane = kGrid.phase_plane();
  const PhaseFunction q = PhaseFunction::sample(plane, AnalyticRule::from(Polynomial::q()));
  const PhaseFunction p = PhaseFunction::sample(plane, AnalyticRule::from(Polynomial::p()));
  const PhaseFunction h = PhaseFunction::sample(plane, AnalyticRule::from(Polynomial({{0.5, 2, 0}, {0.5, 0, 2}})));
  for (int k = 0; k < 3; ++k) {
    const ComplexField psi = random_state(kGrid, rng);
    EXPECT_LT(separability_check(q, QuantumObservable::position(), psi, 1.0), 1e-12);
    EXPECT_LT(separability_check(p, QuantumObservable::momentum(1.0), psi, 1.0), 1e-10);
    EXPECT_LT(separability_check(h, QuantumObservable::position_squared(), psi, 1.0), 1e-6);
  }
}

// Boosting first and then evolving shifts <O_q> and <x> by v t relative to
// evolving the unboosted state.
TEST(Hybrid, GalileanCovariance) {
  const PhaseSpaceGrid g({-7, 7, 48}, {-6, 6, 48}, {-9, 9, 64});
  const HybridStateContinuous s0 = make_state(g, HybridPotential::harmonic_coupling(1.0));
  const double v = 0.5, t = 0.5;
  const int steps = 50;
  const HybridStateContinuous plain = hybrid_evolve(s0, t / steps, steps);
  const HybridStateContinuous boosted = hybrid_evolve(galilean_boost(s0, v), t / steps, steps);
  EXPECT_NEAR(mean_vanhove_q(boosted), mean_vanhove_q(plain) + v * t, 1e-2);
  EXPECT_NEAR(mean_x(boosted), mean_x(plain) + v * t, 1e-2);
}

TEST(Hybrid, HamiltonianIsHermitian) {
  std::mt19937_64 rng(9);
  const ComplexField a = random_state(kGrid, rng), b = random_state(kGrid, rng);
  HybridSettings st;
  st.potential = HybridPotential::harmonic_coupling(1.0);
  // Periodic spectral derivatives make <a|Hb> = conj(<b|Ha>) up to round-off
  // once the trapezoid end weights are negligible.
  const Complex ab = inner_product(a, hybrid_hamiltonian(b, st));
  const Complex ba = inner_product(b, hybrid_hamiltonian(a, st));
  EXPECT_NEAR(std::abs(ab - std::conj(ba)), 0.0, 1e-6);
}

TEST(Spectral, DerivativeOfPeriodicFunction) {
  const PhaseSpaceGrid g({0, 2 * std::numbers::pi * 31.0 / 32.0, 32}, {0, 1, 8});
  const ComplexField f = sample<Complex>(g, [](double q, double) { return Complex(std::sin(3 * q), 0.0); });
  const ComplexField d1 = spectral_derivative(f, AxisId::q, 1);
  const ComplexField d2 = spectral_derivative(f, AxisId::q, 2);
  for (int i = 0; i < 32; ++i) {
    const double q = g.q().coord(i);
    EXPECT_NEAR(d1.at(i, 1).real(), 3 * std::cos(3 * q), 1e-12);
    EXPECT_NEAR(d2.at(i, 1).real(), -9 * std::sin(3 * q), 1e-11);
  }
}
