#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "vanhove/phasespace.hpp"

using namespace vanhove;

namespace {

PhaseSpaceGrid square(double lo, double hi, int n) { return PhaseSpaceGrid({lo, hi, n}, {lo, hi, n}); }

double max_abs_error(const RealField& f, const std::function<double(double, double)>& exact) {
  double e = 0.0;
  const auto& g = f.grid();
  for (int i = 0; i < g.q().n; ++i) {
    for (int j = 0; j < g.p().n; ++j) {
      e = std::max(e, std::abs(f.at(i, j) - exact(g.q().coord(i), g.p().coord(j))));
    }
  }
  return e;
}

}  // namespace

TEST(Grid, IndexingAndRefinement) {
  const PhaseSpaceGrid g({-1, 1, 9}, {0, 2, 8}, {-4, 4, 10});
  EXPECT_EQ(g.size(), 9u * 8u * 10u);
  EXPECT_EQ(g.index(1, 2, 3), (1u * 8 + 2) * 10 + 3);
  EXPECT_EQ(g.stride(AxisId::q), 80u);
  EXPECT_EQ(g.stride(AxisId::x), 1u);
  EXPECT_DOUBLE_EQ(g.q().spacing(), 0.25);
  EXPECT_EQ(g.refined(2.0).q().n, 17);  // nested: (n - 1) * 2 + 1
  EXPECT_THROW(PhaseSpaceGrid({-1, 1, 5}, {0, 1, 8}), PreconditionError);
  EXPECT_FALSE(g.phase_plane().has_x());
}

TEST(Stencils, ExactOnQuartics) {
  const PhaseSpaceGrid g = square(-1.0, 2.0, 17);
  auto f = [](double q, double p) { return q * q * q * q - 2.0 * q * p * p + p * p * p; };
  const RealField field = sample(g, f);
  const RealField dq = partial_derivative(field, AxisId::q, StencilOrder::fourth);
  const RealField dp = partial_derivative(field, AxisId::p, StencilOrder::fourth);
  const RealField dpp = second_derivative(field, AxisId::p, StencilOrder::fourth);
  EXPECT_LT(max_abs_error(dq, [](double q, double p) { return 4 * q * q * q - 2 * p * p; }), 1e-10);
  EXPECT_LT(max_abs_error(dp, [](double q, double p) { return -4 * q * p + 3 * p * p; }), 1e-10);
  EXPECT_LT(max_abs_error(dpp, [](double q, double p) { return -4 * q + 6 * p; }), 1e-9);
}

// Error ratio under halving h gives the observed order; the boundary stencils
// are included in the max norm.
TEST(Stencils, ConvergenceOrder) {
  auto f = [](double q, double p) { return std::sin(1.3 * q) * std::cos(0.7 * p); };
  auto fq = [](double q, double p) { return 1.3 * std::cos(1.3 * q) * std::cos(0.7 * p); };
  for (auto [order, expected] : {std::pair{StencilOrder::second, 2.0}, std::pair{StencilOrder::fourth, 4.0}}) {
    double prev = 0.0;
    for (int n : {33, 65}) {
      const double e = max_abs_error(partial_derivative(sample(square(-2, 2, n), f), AxisId::q, order), fq);
      if (prev > 0.0) EXPECT_GT(std::log2(prev / e), expected - 0.3);
      prev = e;
    }
  }
}

TEST(Quadrature, GaussianIntegrals) {
  const PhaseSpaceGrid g = square(-8, 8, 161);
  // Integral of exp(-(q^2 + p^2)/2) = 2 pi; second moment in q = 2 pi.
  const RealField gauss = sample(g, [](double q, double p) { return std::exp(-0.5 * (q * q + p * p)); });
  EXPECT_NEAR(quadrature(gauss), 2.0 * std::numbers::pi, 1e-10);
  const RealField moment = sample(g, [](double q, double p) { return q * q * std::exp(-0.5 * (q * q + p * p)); });
  EXPECT_NEAR(quadrature(moment), 2.0 * std::numbers::pi, 1e-10);
  // Trapezoid weights are exact for a linear function.
  const RealField lin = sample(square(0, 1, 9), [](double q, double p) { return q + 2 * p; });
  EXPECT_NEAR(quadrature(lin), 1.5, 1e-14);
}

TEST(Quadrature, BoundaryMass) {
  const PhaseSpaceGrid g = square(-1, 1, 21);
  RealField f(g, 0.0);
  f.at(10, 10) = 3.0;
  f.at(0, 5) = 1.0;
  EXPECT_DOUBLE_EQ(boundary_mass(f), 0.25);
  EXPECT_DOUBLE_EQ(boundary_mass(RealField(g, 0.0)), 0.0);
}

TEST(Bracket, NumericalMatchesClosedForm) {
  const PhaseSpaceGrid g = square(-2, 2, 41);
  const PhaseFunction f = PhaseFunction::sample(g, AnalyticRule::from(Polynomial({{1.0, 2, 1}})));
  const PhaseFunction h = PhaseFunction::sample(g, AnalyticRule::from(Polynomial({{0.5, 0, 2}, {0.5, 2, 0}})));
  const PhaseFunction b = poisson_bracket(f, h);
  // {q^2 p, H} = 2 q p^2 - q^3
  EXPECT_LT(max_abs_error(b.field(), [](double q, double p) { return 2 * q * p * p - q * q * q; }), 1e-9);
}

TEST(Flow, OscillatorTrajectoryMatchesRotation) {
  const Hamiltonian h = Hamiltonian::harmonic_oscillator(1.0, 2.0);
  const double t = 1.1;
  for (Integrator integ : {Integrator::verlet, Integrator::rk4}) {
    const PhasePoint z = flow_point(h, {1.0, 0.5}, t, 1e-3, integ);
    // q(t) = q0 cos wt + p0/(m w) sin wt, p(t) = p0 cos wt - m w q0 sin wt
    EXPECT_NEAR(z.q, std::cos(2.2) + 0.25 * std::sin(2.2), 1e-5);
    EXPECT_NEAR(z.p, 0.5 * std::cos(2.2) - 2.0 * std::sin(2.2), 1e-5);
  }
}

TEST(Flow, BackwardUndoesForward) {
  const Hamiltonian h = Hamiltonian::harmonic_oscillator(1.0, 1.0);
  const PhasePoint a = flow_point(h, {0.3, -1.2}, 0.8, 0.01, Integrator::verlet);
  const PhasePoint b = flow_point(h, a, -0.8, 0.01, Integrator::verlet);
  EXPECT_NEAR(b.q, 0.3, 1e-12);
  EXPECT_NEAR(b.p, -1.2, 1e-12);
}

TEST(Flow, FreeAndLinearPotential) {
  const PhasePoint z = flow_point(Hamiltonian::free_particle(2.0), {1.0, 3.0}, 0.5, 0.1, Integrator::verlet);
  EXPECT_NEAR(z.q, 1.75, 1e-13);
  EXPECT_NEAR(z.p, 3.0, 1e-13);
  // V = m g q: p(t) = p0 - m g t, q(t) = q0 + p0 t / m - g t^2 / 2 (Verlet is exact here).
  const PhasePoint w = flow_point(Hamiltonian::linear_potential(1.0, 9.8), {0.0, 5.0}, 0.4, 0.01, Integrator::verlet);
  EXPECT_NEAR(w.p, 5.0 - 9.8 * 0.4, 1e-10);
  EXPECT_NEAR(w.q, 5.0 * 0.4 - 0.5 * 9.8 * 0.16, 1e-10);
}

TEST(Flow, VerletConservesEnergyOverManyPeriods) {
  const Hamiltonian h = Hamiltonian::harmonic_oscillator(1.0, 1.0);
  const PhasePoint z = flow_point(h, {2.0, 0.0}, 100.0 * 2.0 * std::numbers::pi, 0.05, Integrator::verlet);
  EXPECT_NEAR(h(z.q, z.p), 2.0, 2e-3);
}

TEST(Flow, MapFlagsExitedTrajectories) {
  const PhaseSpaceGrid g = square(-1, 1, 9);
  const std::vector<PhasePoint> pts{{0.0, 0.0}, {0.9, 0.9}};
  const FlowMap map = hamiltonian_flow_map(Hamiltonian::free_particle(1.0), pts, 1.0, 0.1, std::nullopt, &g);
  EXPECT_FALSE(map.exited[0]);
  EXPECT_TRUE(map.exited[1]);
  EXPECT_EQ(map.exited_count(), 1u);
}

TEST(Constants, Validation) {
  PhysicalConstants c;
  EXPECT_NO_THROW(c.validate());
  c.hbar = 0.0;
  EXPECT_THROW(c.validate(), PreconditionError);
}
