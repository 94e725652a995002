#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "vanhove/hybrid.hpp"
#include "vanhove/states.hpp"

namespace vanhove {

void MeasurementConfig::validate() const {
  if (!(w_plus >= 0.0 && w_plus <= 1.0)) throw PreconditionError("w_plus must lie in [0, 1]");
  if (!(kappa > 0.0) || !(time > 0.0) || !(epsilon > 0.0)) {
    throw PreconditionError("kappa, interaction time and epsilon must be positive");
  }
  if (!(hbar > 0.0) || !(mass > 0.0)) throw PreconditionError("hbar and mass must be positive");
  if (steps < 1) throw PreconditionError("measurement needs at least one step");
  if (full_hamiltonian && static_cast<bool>(v_c) != static_cast<bool>(dv_c)) {
    throw PreconditionError("V_C needs both a value and a gradient");
  }
}

double QubitHybridState::norm() const {
  auto mass = [](const ComplexField& f) {
    return quadrature(transform(f, [](const Complex& z) { return std::norm(z); }));
  };
  return mass(plus) + mass(minus);
}

double ConditionalDensityOperator::hermiticity_error() const {
  return (rho - rho.adjoint()).cwiseAbs().maxCoeff();
}

double ConditionalDensityOperator::trace() const { return rho.trace().real(); }

double ConditionalDensityOperator::min_eigenvalue() const {
  const Eigen::Matrix2cd h = 0.5 * (rho + rho.adjoint());
  return Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd>(h, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
}

QubitHybridState pointer_initial_state(const PhaseSpaceGrid& grid, const MeasurementConfig& config) {
  config.validate();
  if (grid.has_x()) throw PreconditionError("the pointer lives on a (q, p) grid");
  const double eps = config.epsilon;
  RealField delta = sample(grid, [eps](double q, double p) { return mollified_delta(q, eps) * mollified_delta(p, eps); });
  const double mass = quadrature(delta);
  if (!(mass > 0.0)) throw NumericalError("pointer density vanishes on the grid");
  auto component = [&](double w) {
    return transform(delta, [w, mass](double d) { return Complex(std::sqrt(w * d / mass), 0.0); });
  };
  return {component(config.w_plus), component(config.w_minus()), config.hbar, 0.0};
}

ConditionalDensityOperator conditional_density(const QubitHybridState& state) {
  require_same_grid(state.plus.grid(), state.minus.grid(), "conditional_density");
  ConditionalDensityOperator out;
  out.rho(0, 0) = inner_product(state.plus, state.plus);
  out.rho(1, 1) = inner_product(state.minus, state.minus);
  // rho_+- = integral psi_+ conj(psi_-) = sqrt(rho_+ rho_-) exp(i (sigma_+ - sigma_-) / hbar).
  out.rho(0, 1) = inner_product(state.minus, state.plus);
  out.rho(1, 0) = inner_product(state.plus, state.minus);
  return out;
}

std::vector<double> pointer_density(const QubitHybridState& state) {
  const PhaseSpaceGrid& grid = state.grid();
  const int nq = grid.q().n, np = grid.p().n;
  const double hp = grid.p().spacing();
  std::vector<double> out(nq, 0.0);
  for (int i = 0; i < nq; ++i) {
    for (int j = 0; j < np; ++j) {
      const double w = (j == 0 || j == np - 1) ? 0.5 * hp : hp;
      out[i] += w * (std::norm(state.plus.at(i, j)) + std::norm(state.minus.at(i, j)));
    }
  }
  return out;
}

double pointer_mass_positive(const QubitHybridState& state) {
  const Axis& q = state.grid().q();
  const std::vector<double> density = pointer_density(state);
  const double h = q.spacing();
  double mass = 0.0;
  for (int i = 0; i < q.n; ++i) {
    const double c = q.coord(i);
    double w = (i == 0 || i == q.n - 1) ? 0.5 * h : h;
    if (std::abs(c) < 1e-12 * h) {
      w *= 0.5;
    } else if (c < 0.0) {
      continue;
    }
    mass += w * density[i];
  }
  return mass;
}

namespace {

nlohmann::json complex_pair(const Complex& z) { return nlohmann::json::array({z.real(), z.imag()}); }

}  // namespace

nlohmann::json MeasurementResult::report() const {
  const ConditionalDensityOperator& rho = rho_series.back();
  nlohmann::json series = nlohmann::json::array();
  for (const auto& [t, v] : offdiag_series) series.push_back({t, v});
  return {{"w_plus", config.w_plus},
          {"w_minus", config.w_minus()},
          {"K", config.displacement()},
          {"epsilon", config.epsilon},
          {"full_hamiltonian", config.full_hamiltonian},
          {"pointer_mass_positive", pointer_mass_positive},
          {"pointer_mass_negative", pointer_mass_negative},
          {"rho_QC",
           {complex_pair(rho.rho(0, 0)), complex_pair(rho.rho(0, 1)), complex_pair(rho.rho(1, 0)),
            complex_pair(rho.rho(1, 1))}},
          {"offdiag_magnitude_series", series}};
}

MeasurementResult qubit_measurement_run(const PhaseSpaceGrid& grid, const MeasurementConfig& config) {
  config.validate();
  const double reach = config.displacement() + 4.0 * config.epsilon;
  if (reach > grid.q().max || -reach < grid.q().min) {
    std::ostringstream msg;
    msg << "pointer displacement K = " << config.displacement() << " is within 4 eps of the grid boundary";
    throw PreconditionError(msg.str());
  }
  MeasurementResult out{pointer_initial_state(grid, config), pointer_initial_state(grid, config), {}, {}, {}, {},
                        0.0, 0.0, config};
  out.pointer_initial = pointer_density(out.initial);

  const double dt = config.time / config.steps;
  auto settings = [&](double sign) {
    HybridSettings s;
    s.mass_c = config.mass;
    s.hbar = config.hbar;
    s.drift = sign * config.kappa;
    s.classical_kinetic = config.full_hamiltonian;
    s.quantum_kinetic = false;
    s.potential = config.full_hamiltonian && config.v_c
                      ? HybridPotential::classical(config.v_c, config.dv_c, "V_C")
                      : HybridPotential::none();
    return s;
  };
  const HybridPropagator plus(grid, settings(+1.0), dt);
  const HybridPropagator minus(grid, settings(-1.0), dt);
  // B0 sigma_3 only rotates the relative phase.
  const Complex b0_phase = std::polar(1.0, -config.b0 * dt / config.hbar);

  QubitHybridState& state = out.final_state;
  auto record = [&] {
    out.rho_series.push_back(conditional_density(state));
    out.offdiag_series.emplace_back(state.t, out.rho_series.back().offdiag_magnitude());
  };
  record();
  for (int s = 1; s <= config.steps; ++s) {
    plus.step(state.plus);
    minus.step(state.minus);
    if (config.full_hamiltonian && config.b0 != 0.0) {
      for (Complex& z : state.plus.values()) z *= b0_phase;
      for (Complex& z : state.minus.values()) z *= std::conj(b0_phase);
    }
    state.t = s * dt;
    record();
  }
  if (!all_finite(state.plus) || !all_finite(state.minus)) throw NumericalError("measurement run diverged");
  out.pointer_final = pointer_density(state);
  out.pointer_mass_positive = vanhove::pointer_mass_positive(state);
  out.pointer_mass_negative = state.norm() - out.pointer_mass_positive;
  return out;
}

}  // namespace vanhove
