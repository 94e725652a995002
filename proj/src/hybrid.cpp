#include "vanhove/hybrid.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "vanhove/operators.hpp"

namespace vanhove {

HybridPotential HybridPotential::none() {
  return {"none", [](double, double) { return 0.0; }, [](double, double) { return 0.0; }, true};
}

HybridPotential HybridPotential::harmonic_coupling(double k) {
  if (!std::isfinite(k)) throw PreconditionError("coupling constant must be finite");
  return {"harmonic_coupling",
          [k](double q, double x) { return 0.5 * k * (q - x) * (q - x); },
          [k](double q, double x) { return k * (q - x); },
          k == 0.0};
}

HybridPotential HybridPotential::classical(std::function<double(double)> v,
                                           std::function<double(double)> dv, std::string name) {
  if (!v || !dv) throw PreconditionError("classical potential needs a value and a gradient");
  return {std::move(name), [v](double q, double) { return v(q); }, [dv](double q, double) { return dv(q); },
          false};
}

double HybridStateContinuous::norm() const {
  return quadrature(transform(psi, [](const Complex& z) { return std::norm(z); }));
}

HybridSettings settings_of(const HybridStateContinuous& state) {
  HybridSettings s;
  s.mass_c = state.mass_c;
  s.mass_q = state.mass_q;
  s.hbar = state.hbar;
  s.potential = state.potential;
  return s;
}

namespace {

double x_coord(const PhaseSpaceGrid& grid, int k) { return grid.has_x() ? grid.x().coord(k) : 0.0; }

bool has_advection_q(const HybridSettings& s) { return s.classical_kinetic || s.drift != 0.0; }

}  // namespace

HybridPropagator::HybridPropagator(const PhaseSpaceGrid& grid, HybridSettings settings, double dt)
    : grid_(grid), settings_(std::move(settings)), dt_(dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw PreconditionError("hybrid step: dt must be positive");
  if (!(settings_.mass_c > 0.0) || !(settings_.mass_q > 0.0) || !(settings_.hbar > 0.0)) {
    throw PreconditionError("hybrid step: masses and hbar must be positive");
  }
  if (!settings_.potential.value) settings_.potential = HybridPotential::none();
  const auto [nq, np, nx] = grid.shape();
  const double hbar = settings_.hbar, m = settings_.mass_c;
  const double half = 0.5 * dt;

  if (has_advection_q(settings_)) {
    fft_q_ = std::make_unique<AxisTransform>(grid.shape(), AxisId::q);
    const std::vector<double> kq = wavenumbers(grid.q());
    factor_q_.resize(static_cast<std::size_t>(nq) * np);
    for (int i = 0; i < nq; ++i) {
      for (int j = 0; j < np; ++j) {
        const double p = grid.p().coord(j);
        const double velocity = (settings_.classical_kinetic ? p / m : 0.0) + settings_.drift;
        const double phase = settings_.classical_kinetic ? p * p * half / (2.0 * m * hbar) : 0.0;
        factor_q_[static_cast<std::size_t>(i) * np + j] = std::polar(1.0 / nq, phase - kq[i] * velocity * half);
      }
    }
  }
  if (!settings_.potential.zero) {
    fft_p_ = std::make_unique<AxisTransform>(grid.shape(), AxisId::p);
    const std::vector<double> kp = wavenumbers(grid.p());
    factor_p_.resize(grid.size());
    for (int i = 0; i < nq; ++i) {
      const double q = grid.q().coord(i);
      for (int k = 0; k < nx; ++k) {
        const double x = x_coord(grid, k);
        const double v = settings_.potential.value(q, x), dv = settings_.potential.d_q(q, x);
        for (int j = 0; j < np; ++j) {
          factor_p_[grid.index(i, j, k)] = std::polar(1.0 / np, kp[j] * dv * half - v * half / hbar);
        }
      }
    }
  }
  if (grid.has_x() && settings_.quantum_kinetic) {
    fft_x_ = std::make_unique<AxisTransform>(grid.shape(), AxisId::x);
    std::vector<double> kx = wavenumbers(grid.x());
    if (nx % 2 == 0) kx[nx / 2] = std::numbers::pi / grid.x().spacing();
    factor_x_.resize(nx);
    for (int k = 0; k < nx; ++k) {
      factor_x_[k] = std::polar(1.0 / nx, -hbar * kx[k] * kx[k] * dt / (2.0 * settings_.mass_q));
    }
  }
}

void HybridPropagator::shift_q(ComplexField& psi) const {
  if (!fft_q_) return;
  const auto [nq, np, nx] = grid_.shape();
  fft_q_->forward(psi.values().data());
  std::size_t idx = 0;
  for (int i = 0; i < nq; ++i) {
    for (int j = 0; j < np; ++j) {
      const Complex f = factor_q_[static_cast<std::size_t>(i) * np + j];
      for (int k = 0; k < nx; ++k, ++idx) psi[idx] *= f;
    }
  }
  fft_q_->backward(psi.values().data());
}

void HybridPropagator::shift_p(ComplexField& psi) const {
  if (!fft_p_) return;
  fft_p_->forward(psi.values().data());
  for (std::size_t idx = 0; idx < psi.size(); ++idx) psi[idx] *= factor_p_[idx];
  fft_p_->backward(psi.values().data());
}

void HybridPropagator::kinetic_x(ComplexField& psi) const {
  if (!fft_x_) return;
  const int nx = grid_.nx();
  fft_x_->forward(psi.values().data());
  for (std::size_t idx = 0; idx < psi.size(); ++idx) psi[idx] *= factor_x_[idx % nx];
  fft_x_->backward(psi.values().data());
}

void HybridPropagator::step(ComplexField& psi) const {
  require_same_grid(psi.grid(), grid_, "hybrid step");
  shift_q(psi);
  shift_p(psi);
  kinetic_x(psi);
  shift_p(psi);
  shift_q(psi);
}

HybridStateContinuous hybrid_step(const HybridStateContinuous& state, double dt) {
  return hybrid_evolve(state, dt, 1);
}

HybridStateContinuous hybrid_evolve(const HybridStateContinuous& state, double dt, int steps) {
  if (steps < 0) throw PreconditionError("hybrid_evolve: negative step count");
  const HybridPropagator prop(state.grid(), settings_of(state), dt);
  HybridStateContinuous out = state;
  for (int s = 0; s < steps; ++s) prop.step(out.psi);
  if (!all_finite(out.psi)) throw NumericalError("hybrid evolution produced non-finite values");
  out.t += dt * steps;
  return out;
}

ComplexField hybrid_hamiltonian(const ComplexField& psi, const HybridSettings& s) {
  const PhaseSpaceGrid& grid = psi.grid();
  const auto [nq, np, nx] = grid.shape();
  const Complex ih(0.0, s.hbar);
  const ComplexField dq = spectral_derivative(psi, AxisId::q);
  const ComplexField dp = spectral_derivative(psi, AxisId::p);
  ComplexField out(grid);
  const HybridPotential pot = s.potential.value ? s.potential : HybridPotential::none();
  std::size_t idx = 0;
  for (int i = 0; i < nq; ++i) {
    const double q = grid.q().coord(i);
    for (int j = 0; j < np; ++j) {
      const double p = grid.p().coord(j);
      for (int k = 0; k < nx; ++k, ++idx) {
        const double x = x_coord(grid, k);
        const double velocity = (s.classical_kinetic ? p / s.mass_c : 0.0) + s.drift;
        const double theta = pot.value(q, x) - (s.classical_kinetic ? p * p / (2.0 * s.mass_c) : 0.0);
        out[idx] = theta * psi[idx] + ih * (pot.d_q(q, x) * dp[idx] - velocity * dq[idx]);
      }
    }
  }
  if (grid.has_x() && s.quantum_kinetic) {
    const ComplexField dxx = spectral_derivative(psi, AxisId::x, 2);
    const double c = s.hbar * s.hbar / (2.0 * s.mass_q);
    for (std::size_t n = 0; n < out.size(); ++n) out[n] -= c * dxx[n];
  }
  return out;
}

double hybrid_energy(const HybridStateContinuous& state) {
  const Complex value = inner_product(state.psi, hybrid_hamiltonian(state.psi, settings_of(state)));
  return value.real() / inner_product(state.psi, state.psi).real();
}

namespace {

// Trapezoid weights along one axis.
std::vector<double> weights(const Axis& axis) {
  std::vector<double> w(axis.n, axis.spacing());
  w.front() *= 0.5;
  w.back() *= 0.5;
  return w;
}

}  // namespace

HybridMarginals hybrid_marginals(const HybridStateContinuous& state) {
  const PhaseSpaceGrid& grid = state.grid();
  if (!grid.has_x()) throw PreconditionError("hybrid_marginals needs a (q, p, x) grid");
  const auto [nq, np, nx] = grid.shape();
  const std::vector<double> wq = weights(grid.q()), wp = weights(grid.p()), wx = weights(grid.x());
  HybridMarginals out{RealField(grid.phase_plane()), std::vector<double>(nx, 0.0), grid.x(), 0.0, 0.0};
  std::size_t idx = 0;
  for (int i = 0; i < nq; ++i) {
    for (int j = 0; j < np; ++j) {
      for (int k = 0; k < nx; ++k, ++idx) {
        const double r = std::norm(state.psi[idx]);
        out.rho_c.at(i, j) += wx[k] * r;
        out.rho_q[k] += wq[i] * wp[j] * r;
      }
    }
  }
  out.mass_c = quadrature(out.rho_c);
  for (int k = 0; k < nx; ++k) out.mass_q += wx[k] * out.rho_q[k];
  return out;
}

ComplexField product_state(const ComplexField& phi, const Axis& x, const std::vector<Complex>& chi) {
  const PhaseSpaceGrid& plane = phi.grid();
  if (plane.has_x()) throw PreconditionError("product_state: phi must live on a (q, p) grid");
  if (static_cast<int>(chi.size()) != x.n) throw PreconditionError("product_state: chi does not match the x axis");
  const PhaseSpaceGrid grid(plane.q(), plane.p(), x);
  ComplexField out(grid);
  for (std::size_t n = 0; n < phi.size(); ++n) {
    for (int k = 0; k < x.n; ++k) out[n * x.n + k] = phi[n] * chi[k];
  }
  return out;
}

QuantumObservable QuantumObservable::position() {
  return {"x", [](const ComplexField& psi) {
            const PhaseSpaceGrid& g = psi.grid();
            ComplexField out = psi;
            for (std::size_t n = 0; n < out.size(); ++n) out[n] *= g.x().coord(static_cast<int>(n % g.nx()));
            return out;
          }};
}

QuantumObservable QuantumObservable::position_squared() {
  return {"x^2", [](const ComplexField& psi) {
            const PhaseSpaceGrid& g = psi.grid();
            ComplexField out = psi;
            for (std::size_t n = 0; n < out.size(); ++n) {
              const double x = g.x().coord(static_cast<int>(n % g.nx()));
              out[n] *= x * x;
            }
            return out;
          }};
}

QuantumObservable QuantumObservable::momentum(double hbar, StencilOrder order) {
  return {"-i hbar d/dx", [hbar, order](const ComplexField& psi) {
            return Complex(0.0, -hbar) * partial_derivative(psi, AxisId::x, order);
          }};
}

double separability_check(const PhaseFunction& f, const QuantumObservable& g, const ComplexField& psi,
                          double hbar, StencilOrder order) {
  if (!psi.grid().has_x()) throw PreconditionError("separability_check needs a (q, p, x) state");
  const VanHoveOperator op = build_vanhove(f, hbar, order);
  const ComplexField fg = apply(op, g.apply(psi), order);
  const ComplexField gf = g.apply(apply(op, psi, order));
  return l2_norm(fg - gf) / l2_norm(psi);
}

double factorization_residual(const ComplexField& psi) {
  const PhaseSpaceGrid& grid = psi.grid();
  const int nx = grid.nx();
  const Eigen::Index rows = static_cast<Eigen::Index>(psi.size() / nx);
  // Row-major storage: each (q, p) node holds nx consecutive x values.
  Eigen::Map<const Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> m(
      psi.values().data(), rows, nx);
  const Eigen::MatrixXcd gram = m.adjoint() * m;
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(gram, Eigen::EigenvaluesOnly);
  const double trace = gram.trace().real();
  if (!(trace > 0.0)) throw NumericalError("factorization_residual of a zero state");
  return 1.0 - solver.eigenvalues().maxCoeff() / trace;
}

double mean_x(const HybridStateContinuous& state) {
  const Complex num = inner_product(state.psi, QuantumObservable::position().apply(state.psi));
  return num.real() / inner_product(state.psi, state.psi).real();
}

double mean_vanhove_q(const HybridStateContinuous& state) {
  const PhaseSpaceGrid& grid = state.grid();
  const ComplexField dp = spectral_derivative(state.psi, AxisId::p);
  ComplexField oq(grid);
  const int nx = grid.nx(), np = grid.p().n;
  const Complex ih(0.0, state.hbar);
  for (std::size_t n = 0; n < oq.size(); ++n) {
    const int i = static_cast<int>(n / (static_cast<std::size_t>(np) * nx));
    oq[n] = grid.q().coord(i) * state.psi[n] + ih * dp[n];
  }
  return inner_product(state.psi, oq).real() / inner_product(state.psi, state.psi).real();
}

HybridStateContinuous galilean_boost(const HybridStateContinuous& state, double v) {
  const PhaseSpaceGrid& grid = state.grid();
  const auto [nq, np, nx] = grid.shape();
  HybridStateContinuous out = state;
  // p -> p - m_C v: shift by +m_C v along p.
  const AxisTransform fft(grid.shape(), AxisId::p);
  const std::vector<double> kp = wavenumbers(grid.p());
  const double shift = state.mass_c * v;
  fft.forward(out.psi.values().data());
  std::size_t idx = 0;
  for (int i = 0; i < nq; ++i) {
    for (int j = 0; j < np; ++j) {
      const Complex f = std::polar(1.0 / np, -kp[j] * shift);
      for (int k = 0; k < nx; ++k, ++idx) out.psi[idx] *= f;
    }
  }
  fft.backward(out.psi.values().data());
  idx = 0;
  for (int i = 0; i < nq; ++i) {
    const double q = grid.q().coord(i);
    for (int j = 0; j < np; ++j) {
      for (int k = 0; k < nx; ++k, ++idx) {
        const double x = x_coord(grid, k);
        out.psi[idx] *= std::polar(1.0, (state.mass_c * v * q + state.mass_q * v * x) / state.hbar);
      }
    }
  }
  return out;
}

}  // namespace vanhove
