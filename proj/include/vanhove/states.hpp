#pragma once

#include <functional>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "vanhove/phasespace.hpp"

namespace vanhove {

/// phi = sqrt(rho) exp(i sigma / hbar) in Madelung variables.
struct ClassicalWavefunction {
  PhaseFunction rho;
  PhaseFunction sigma;
  double hbar = 1.0;
  double t = 0.0;

  const PhaseSpaceGrid& grid() const { return rho.grid(); }
  ComplexField compose() const;
  double norm() const { return quadrature(rho); }
};

ClassicalWavefunction make_wavefunction(RealField rho, RealField sigma, double hbar, double t = 0.0);

// sigma = hbar arg(phi). With unwrap, jumps larger than pi hbar are removed
// line by line (along p, then the first p node along q).
ClassicalWavefunction madelung_split(const ComplexField& phi, double hbar, double t,
                                     bool unwrap = false);

/// Ingredients of sigma(q, p, t) = eta + H [tau - tau(q', p') - t], with
/// {eta, H} = L and {tau, H} = 1.
struct SigmaSpec {
  Hamiltonian hamiltonian;
  AnalyticRule eta;
  AnalyticRule tau;
  PhasePoint reference;
  double t = 0.0;
  // tau is multivalued with this period when set (2 pi / omega for the oscillator).
  std::optional<double> tau_period;
  // Nodes where tau is undefined.
  std::function<bool(double, double)> singular;

  double tau_reference() const { return tau(reference.q, reference.p); }
};

// eta = qp/2, tau = atan2(m omega q, p) / omega.
SigmaSpec oscillator_sigma_spec(double mass, double omega, PhasePoint reference, double t = 0.0);
// eta = qp/2, tau = m q / p.
SigmaSpec free_particle_sigma_spec(double mass, PhasePoint reference, double t = 0.0);

AnalyticRule oscillator_tau(double mass, double omega);

struct SigmaField {
  PhaseFunction sigma;
  std::vector<std::uint8_t> singular;  // 1 where tau is undefined; sigma set to 0
  std::size_t singular_count = 0;
};

SigmaField construct_sigma(const SigmaSpec& spec, const PhaseSpaceGrid& grid);
// Uses `energy` in place of H (energy eigenstates).
SigmaField construct_sigma(const SigmaSpec& spec, const PhaseSpaceGrid& grid, double energy);
double sigma_value(const SigmaSpec& spec, PhasePoint z, double t);
// d sigma / dt of the constructed phase, which is -H identically.
RealField sigma_time_derivative(const SigmaSpec& spec, const PhaseSpaceGrid& grid);

struct ConstraintOptions {
  double tolerance = 1e-3;
  // Characteristic time; r2 is normalized by (timescale / m)^2 <p^2>.
  double timescale = 1.0;
  // Nodes with rho below this fraction of max rho are outside the support.
  double support_threshold = 1e-6;
  // Differentiate exp(i sigma / hbar) instead of sigma so 2 pi hbar jumps are harmless.
  bool wrapped_phase = false;
  StencilOrder order = StencilOrder::fourth;
};

/// rho-weighted residuals of grad_q sigma = p, grad_p sigma = 0 and
/// d sigma / dt = -H.
struct ConstraintReport {
  double r1 = 0.0;
  double r2 = 0.0;
  double r3 = 0.0;
  bool r3_evaluated = false;
  double boundary_mass = 0.0;
  double tolerance = 1e-3;
  bool r1_pass = false;
  bool r2_pass = false;
  bool r3_pass = false;

  bool pass() const { return r1_pass && r2_pass && r3_pass; }
  nlohmann::json to_json() const;
};

// Without dsigma_dt, r3 is evaluated against the analytic derivative -H of a
// constructed phase (r3 = 0). Pass evaluate_r3 = false to skip it.
ConstraintReport verify_constraints(const ClassicalWavefunction& state, const Hamiltonian& h,
                                    const std::optional<RealField>& dsigma_dt = std::nullopt,
                                    const ConstraintOptions& options = {},
                                    bool evaluate_r3 = true);

/// delta_eps(x) = exp(-x^2/eps^2) / (sqrt(pi) eps).
double mollified_delta(double x, double eps);

struct LevelSetState {
  ClassicalWavefunction state;
  double eps = 0.0;
  double off_shell_fraction = 0.0;  // mass with |F - f| > 4 eps
};

// Default eps: four grid spacings measured in F-value units near the level set.
double default_level_set_width(const PhaseFunction& f, double level);

LevelSetState energy_eigenstate(const PhaseSpaceGrid& grid, const SigmaSpec& spec, double energy,
                                const std::optional<RealField>& weight = std::nullopt,
                                std::optional<double> eps = std::nullopt, double hbar = 1.0);

LevelSetState observable_eigenstate(const PhaseFunction& observable, double value,
                                    const SigmaSpec& spec,
                                    const std::optional<RealField>& weight = std::nullopt,
                                    std::optional<double> eps = std::nullopt, double hbar = 1.0);

struct FringeReport {
  double contrast = 0.0;             // (max - min) / (max + min) of rho on the centroid segment
  double incoherent_contrast = 0.0;  // same for w1^2 rho1 + w2^2 rho2
  double max = 0.0;
  double min = 0.0;
  PhasePoint centroid1;
  PhasePoint centroid2;
  std::vector<double> profile;
};

struct SuperpositionResult {
  ClassicalWavefunction state;
  ConstraintReport report;
  FringeReport fringe;
};

SuperpositionResult superposition_diagnostic(const ClassicalWavefunction& s1,
                                             const ClassicalWavefunction& s2, double w1,
                                             double w2, const Hamiltonian& h,
                                             ConstraintOptions options = {});

// Gaussian bundle rho centred at `center` with standard deviations (wq, wp), normalized.
RealField gaussian_density(const PhaseSpaceGrid& grid, PhasePoint center, double wq, double wp);
PhasePoint centroid(const RealField& rho);

}  // namespace vanhove
