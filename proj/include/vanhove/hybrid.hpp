#pragma once

#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "vanhove/phasespace.hpp"
#include "vanhove/spectral.hpp"

namespace vanhove {

/// Potential V(q, x) felt by the classical particle; x is the quantum
/// coordinate (0 on grids without an x axis).
struct HybridPotential {
  std::string name = "none";
  std::function<double(double q, double x)> value;
  std::function<double(double q, double x)> d_q;
  bool zero = true;

  static HybridPotential none();
  // V = k (q - x)^2 / 2.
  static HybridPotential harmonic_coupling(double k);
  // V = V_C(q), no dependence on x.
  static HybridPotential classical(std::function<double(double)> v, std::function<double(double)> dv,
                                   std::string name);
};

/// psi(q, p, x) for one classical particle and one quantum particle.
struct HybridStateContinuous {
  ComplexField psi;
  double mass_c = 1.0;
  double mass_q = 1.0;
  double hbar = 1.0;
  HybridPotential potential;
  double t = 0.0;

  const PhaseSpaceGrid& grid() const { return psi.grid(); }
  double norm() const;
};

struct HybridSettings {
  double mass_c = 1.0;
  double mass_q = 1.0;
  double hbar = 1.0;
  HybridPotential potential;
  double drift = 0.0;             // extra q velocity u, generated by -i hbar u d/dq
  bool classical_kinetic = true;  // include the p/m_C advection and -p^2/2m_C phase
  bool quantum_kinetic = true;    // include -hbar^2/2m_Q d^2/dx^2 (needs an x axis)
};

/// Strang splitting A(dt/2) B(dt/2) C(dt) B(dt/2) A(dt/2), every factor exact
/// and unitary on the periodic grid:
///   A: q -> q - (p/m_C + u) dt in k_q space, phase exp(i p^2 dt / 2 m_C hbar)
///   B: p -> p + dV/dq dt in k_p space, phase exp(-i V dt / hbar)
///   C: exp(-i hbar k_x^2 dt / 2 m_Q) in k_x space
class HybridPropagator {
 public:
  HybridPropagator(const PhaseSpaceGrid& grid, HybridSettings settings, double dt);

  void step(ComplexField& psi) const;
  double dt() const { return dt_; }
  const HybridSettings& settings() const { return settings_; }

 private:
  void shift_q(ComplexField& psi) const;
  void shift_p(ComplexField& psi) const;
  void kinetic_x(ComplexField& psi) const;

  PhaseSpaceGrid grid_;
  HybridSettings settings_;
  double dt_;
  std::unique_ptr<AxisTransform> fft_q_;
  std::unique_ptr<AxisTransform> fft_p_;
  std::unique_ptr<AxisTransform> fft_x_;
  std::vector<Complex> factor_q_;  // (k_q, p) for a half step, normalization folded in
  std::vector<Complex> factor_p_;  // (q, k_p, x)
  std::vector<Complex> factor_x_;  // (k_x)
};

HybridSettings settings_of(const HybridStateContinuous& state);

HybridStateContinuous hybrid_step(const HybridStateContinuous& state, double dt);
// Runs `steps` steps with one propagator.
HybridStateContinuous hybrid_evolve(const HybridStateContinuous& state, double dt, int steps);

// H psi with spectral derivatives: (V - p^2/2m_C) psi + i hbar (dV/dq dpsi/dp -
// (p/m_C) dpsi/dq) - hbar^2/2m_Q d^2psi/dx^2, plus -i hbar u dpsi/dq.
ComplexField hybrid_hamiltonian(const ComplexField& psi, const HybridSettings& settings);
// Re <psi|H|psi> / <psi|psi>.
double hybrid_energy(const HybridStateContinuous& state);

struct HybridMarginals {
  RealField rho_c;             // on the (q, p) plane
  std::vector<double> rho_q;   // on the x axis
  Axis x;
  double mass_c = 0.0;
  double mass_q = 0.0;
};

HybridMarginals hybrid_marginals(const HybridStateContinuous& state);

// psi(q, p, x) = phi(q, p) chi(x).
ComplexField product_state(const ComplexField& phi, const Axis& x, const std::vector<Complex>& chi);

/// Standard operator on the quantum coordinate.
struct QuantumObservable {
  std::string name;
  std::function<ComplexField(const ComplexField&)> apply;

  static QuantumObservable position();
  static QuantumObservable position_squared();
  static QuantumObservable momentum(double hbar, StencilOrder order = StencilOrder::fourth);
};

// ||[O_F, G] psi|| / ||psi||.
double separability_check(const PhaseFunction& f, const QuantumObservable& g, const ComplexField& psi,
                          double hbar, StencilOrder order = StencilOrder::fourth);

// 1 - lambda_max / trace of the x-x Gram matrix of psi; 0 for a product state.
double factorization_residual(const ComplexField& psi);

// Expectation <x> and Re <O_q> = <q> + i hbar <dpsi/dp> on a hybrid state.
double mean_x(const HybridStateContinuous& state);
double mean_vanhove_q(const HybridStateContinuous& state);

// psi(q, p - m_C v, x) exp(i (m_C v q + m_Q v x) / hbar), sampled spectrally.
HybridStateContinuous galilean_boost(const HybridStateContinuous& state, double v);

// ---------------------------------------------------------------------------
// Qubit measured by a classical pointer.

struct MeasurementConfig {
  double kappa = 1.0;  // pointer velocity per sigma_3 eigenvalue
  double time = 2.0;   // interaction time T; K = kappa T
  double b0 = 0.0;
  double w_plus = 0.5;
  double epsilon = 0.05;
  double hbar = 1.0;
  double mass = 1.0;
  // Full equation: keeps V_C, the pointer's own motion and the B0 phase.
  bool full_hamiltonian = false;
  std::function<double(double)> v_c;
  std::function<double(double)> dv_c;
  int steps = 20;

  double displacement() const { return kappa * time; }
  double w_minus() const { return 1.0 - w_plus; }
  void validate() const;
};

struct QubitHybridState {
  ComplexField plus;
  ComplexField minus;
  double hbar = 1.0;
  double t = 0.0;

  const PhaseSpaceGrid& grid() const { return plus.grid(); }
  double norm() const;
};

struct ConditionalDensityOperator {
  Eigen::Matrix2cd rho;

  double hermiticity_error() const;
  double trace() const;
  double min_eigenvalue() const;
  double offdiag_magnitude() const { return std::abs(rho(0, 1)); }
};

// psi_+- = sqrt(w_+- delta_eps(q) delta_eps(p)) with sigma = 0, each
// normalized on the grid to mass w_+-.
QubitHybridState pointer_initial_state(const PhaseSpaceGrid& grid, const MeasurementConfig& config);

ConditionalDensityOperator conditional_density(const QubitHybridState& state);

// P(q) = integral dp (rho_+ + rho_-) on the q axis.
std::vector<double> pointer_density(const QubitHybridState& state);
// Mass of P on q > 0 (the q = 0 node counts half).
double pointer_mass_positive(const QubitHybridState& state);

struct MeasurementResult {
  QubitHybridState initial;
  QubitHybridState final_state;
  std::vector<double> pointer_initial;
  std::vector<double> pointer_final;
  std::vector<std::pair<double, double>> offdiag_series;  // (t, |rho_+-|)
  std::vector<ConditionalDensityOperator> rho_series;
  double pointer_mass_positive = 0.0;
  double pointer_mass_negative = 0.0;
  MeasurementConfig config;

  nlohmann::json report() const;
};

MeasurementResult qubit_measurement_run(const PhaseSpaceGrid& grid, const MeasurementConfig& config);

}  // namespace vanhove
