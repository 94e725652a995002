#include "vanhove/states.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "vanhove/interpolation.hpp"

namespace vanhove {

ComplexField ClassicalWavefunction::compose() const {
  ComplexField out(grid());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = std::polar(std::sqrt(std::max(rho[i], 0.0)), sigma[i] / hbar);
  }
  return out;
}

ClassicalWavefunction make_wavefunction(RealField rho, RealField sigma, double hbar, double t) {
  if (!(hbar > 0.0)) throw PreconditionError("hbar must be positive");
  require_same_grid(rho.grid(), sigma.grid(), "make_wavefunction");
  return ClassicalWavefunction{PhaseFunction(std::move(rho)), PhaseFunction(std::move(sigma)), hbar, t};
}

namespace {

double unwrap_step(double prev, double value, double period) {
  const double jump = value - prev;
  return value - period * std::round(jump / period);
}

}  // namespace

ClassicalWavefunction madelung_split(const ComplexField& phi, double hbar, double t, bool unwrap) {
  const PhaseSpaceGrid& grid = phi.grid();
  RealField rho(grid), sigma(grid);
  for (std::size_t i = 0; i < phi.size(); ++i) {
    rho[i] = std::norm(phi[i]);
    sigma[i] = hbar * std::arg(phi[i]);
  }
  if (unwrap) {
    const double period = 2.0 * std::numbers::pi * hbar;
    const int nq = grid.q().n, np = grid.p().n;
    for (int i = 0; i < nq; ++i) {
      for (int j = 1; j < np; ++j) {
        sigma.at(i, j) = unwrap_step(sigma.at(i, j - 1), sigma.at(i, j), period);
      }
    }
    for (int i = 1; i < nq; ++i) {
      const double shifted = unwrap_step(sigma.at(i - 1, 0), sigma.at(i, 0), period);
      const double offset = shifted - sigma.at(i, 0);
      if (offset != 0.0) {
        for (int j = 0; j < np; ++j) sigma.at(i, j) += offset;
      }
    }
  }
  return make_wavefunction(std::move(rho), std::move(sigma), hbar, t);
}

AnalyticRule oscillator_tau(double mass, double omega) {
  AnalyticRule tau;
  tau.name = "tau_oscillator";
  const double mw = mass * omega;
  tau.value = [mw, omega](double q, double p) { return std::atan2(mw * q, p) / omega; };
  tau.d_q = [mass, mw](double q, double p) { return mass * p / (p * p + mw * mw * q * q); };
  tau.d_p = [mass, mw](double q, double p) { return -mass * q / (p * p + mw * mw * q * q); };
  return tau;
}

SigmaSpec oscillator_sigma_spec(double mass, double omega, PhasePoint reference, double t) {
  SigmaSpec spec{Hamiltonian::harmonic_oscillator(mass, omega),
                 AnalyticRule::from(Polynomial::monomial(0.5, 1, 1), "qp/2"),
                 oscillator_tau(mass, omega),
                 reference,
                 t,
                 2.0 * std::numbers::pi / omega,
                 [](double q, double p) { return q == 0.0 && p == 0.0; }};
  return spec;
}

SigmaSpec free_particle_sigma_spec(double mass, PhasePoint reference, double t) {
  AnalyticRule tau;
  tau.name = "tau_free";
  tau.value = [mass](double q, double p) { return mass * q / p; };
  tau.d_q = [mass](double, double p) { return mass / p; };
  tau.d_p = [mass](double q, double p) { return -mass * q / (p * p); };
  SigmaSpec spec{Hamiltonian::free_particle(mass),
                 AnalyticRule::from(Polynomial::monomial(0.5, 1, 1), "qp/2"),
                 tau,
                 reference,
                 t,
                 std::nullopt,
                 [](double, double p) { return p == 0.0; }};
  return spec;
}

namespace {

SigmaField build_sigma(const SigmaSpec& spec, const PhaseSpaceGrid& grid,
                       std::optional<double> energy) {
  const PhaseSpaceGrid plane = grid.phase_plane();
  const double tau_ref = spec.tau_reference();
  SigmaField out{PhaseFunction(RealField(plane)), std::vector<std::uint8_t>(plane.size(), 0), 0};
  RealField sigma(plane);
  std::size_t idx = 0;
  for (int i = 0; i < plane.q().n; ++i) {
    const double q = plane.q().coord(i);
    for (int j = 0; j < plane.p().n; ++j, ++idx) {
      const double p = plane.p().coord(j);
      const bool singular = spec.singular && spec.singular(q, p);
      const double tau = singular ? 0.0 : spec.tau(q, p);
      const double h = energy ? *energy : spec.hamiltonian(q, p);
      const double value = spec.eta(q, p) + h * (tau - tau_ref - spec.t);
      if (singular || !std::isfinite(value)) {
        out.singular[idx] = 1;
        ++out.singular_count;
        sigma[idx] = 0.0;
      } else {
        sigma[idx] = value;
      }
    }
  }
  out.sigma = PhaseFunction(std::move(sigma));
  return out;
}

}  // namespace

SigmaField construct_sigma(const SigmaSpec& spec, const PhaseSpaceGrid& grid) {
  return build_sigma(spec, grid, std::nullopt);
}

SigmaField construct_sigma(const SigmaSpec& spec, const PhaseSpaceGrid& grid, double energy) {
  return build_sigma(spec, grid, energy);
}

double sigma_value(const SigmaSpec& spec, PhasePoint z, double t) {
  return spec.eta(z.q, z.p) +
         spec.hamiltonian(z.q, z.p) * (spec.tau(z.q, z.p) - spec.tau_reference() - t);
}

RealField sigma_time_derivative(const SigmaSpec& spec, const PhaseSpaceGrid& grid) {
  const Hamiltonian& h = spec.hamiltonian;
  return sample(grid.phase_plane(), [&h](double q, double p) { return -h(q, p); });
}

nlohmann::json ConstraintReport::to_json() const {
  return {{"r1", r1},
          {"r2", r2},
          {"r3", r3},
          {"r3_evaluated", r3_evaluated},
          {"boundary_mass", boundary_mass},
          {"tolerance", tolerance},
          {"r1_pass", r1_pass},
          {"r2_pass", r2_pass},
          {"r3_pass", r3_pass}};
}

namespace {

// Gradient of sigma from exp(i sigma / hbar), insensitive to 2 pi hbar jumps.
RealField wrapped_gradient(const PhaseFunction& sigma, double hbar, AxisId axis, StencilOrder order) {
  const ComplexField u = transform(sigma.field(), [hbar](double s) { return std::polar(1.0, s / hbar); });
  const ComplexField du = partial_derivative(u, axis, order);
  RealField out(sigma.grid());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = hbar * (std::conj(u[i]) * du[i]).imag();
  return out;
}

}  // namespace

ConstraintReport verify_constraints(const ClassicalWavefunction& state, const Hamiltonian& h,
                                    const std::optional<RealField>& dsigma_dt,
                                    const ConstraintOptions& options, bool evaluate_r3) {
  const PhaseSpaceGrid& grid = state.grid();
  ConstraintReport report;
  report.tolerance = options.tolerance;
  report.boundary_mass = check_boundary_mass(state.rho.field(), "verify_constraints");

  const RealField sq = options.wrapped_phase
                           ? wrapped_gradient(state.sigma, state.hbar, AxisId::q, options.order)
                           : partial_derivative(state.sigma.field(), AxisId::q, options.order);
  const RealField sp = options.wrapped_phase
                           ? wrapped_gradient(state.sigma, state.hbar, AxisId::p, options.order)
                           : partial_derivative(state.sigma.field(), AxisId::p, options.order);

  RealField res_q(grid), res_p(grid), norm_p(grid);
  for (int i = 0; i < grid.q().n; ++i) {
    for (int j = 0; j < grid.p().n; ++j) {
      const std::size_t n = grid.index(i, j);
      const double p = grid.p().coord(j);
      const double rho = std::max(state.rho[n], 0.0);
      res_q[n] = rho * (sq[n] - p) * (sq[n] - p);
      res_p[n] = rho * sp[n] * sp[n];
      norm_p[n] = rho * p * p;
    }
  }
  const double denom = quadrature(norm_p);
  if (!(denom > 0.0)) throw NumericalError("verify_constraints: <p^2> vanishes on the support");
  const double scale = options.timescale / h.mass();
  report.r1 = quadrature(res_q) / denom;
  report.r2 = quadrature(res_p) / (denom * scale * scale);

  if (evaluate_r3) {
    report.r3_evaluated = true;
    if (dsigma_dt) {
      require_same_grid(dsigma_dt->grid(), grid, "verify_constraints");
      double rho_max = 0.0;
      for (double r : state.rho.values()) rho_max = std::max(rho_max, r);
      const double cutoff = options.support_threshold * rho_max;
      for (int i = 0; i < grid.q().n; ++i) {
        for (int j = 0; j < grid.p().n; ++j) {
          const std::size_t n = grid.index(i, j);
          if (state.rho[n] <= cutoff) continue;
          const double hv = h(grid.q().coord(i), grid.p().coord(j));
          const double r = std::abs((*dsigma_dt)[n] + hv) / (std::abs(hv) + 1e-12);
          report.r3 = std::max(report.r3, r);
        }
      }
    }
  }
  report.r1_pass = report.r1 < options.tolerance;
  report.r2_pass = report.r2 < options.tolerance;
  report.r3_pass = !report.r3_evaluated || report.r3 < options.tolerance;
  return report;
}

double mollified_delta(double x, double eps) {
  return std::exp(-(x * x) / (eps * eps)) / (std::sqrt(std::numbers::pi) * eps);
}

double default_level_set_width(const PhaseFunction& f, double level) {
  const PhaseSpaceGrid& grid = f.grid();
  const RealField fq = partial_derivative(f.field(), AxisId::q);
  const RealField fp = partial_derivative(f.field(), AxisId::p);
  const double hq = grid.q().spacing(), hp = grid.p().spacing();
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t n = 0; n < f.size(); ++n) {
    const double local = std::hypot(hq * fq[n], hp * fp[n]);
    if (local > 0.0 && std::abs(f[n] - level) <= local) {
      sum += local;
      ++count;
    }
  }
  if (count == 0) throw NumericalError("level set does not cross the grid");
  return 4.0 * sum / static_cast<double>(count);
}

namespace {

LevelSetState level_set_state(const PhaseFunction& f, double level,
                              const std::optional<RealField>& weight, double eps,
                              PhaseFunction sigma, double hbar, double t) {
  const PhaseSpaceGrid& grid = f.grid();
  if (!(eps > 0.0)) throw PreconditionError("mollifier width must be positive");
  if (weight) {
    require_same_grid(weight->grid(), grid, "level set weight");
    for (double w : weight->values()) {
      if (w < 0.0) throw PreconditionError("level set weight must be non-negative");
    }
  }
  bool any = false;
  RealField rho(grid);
  for (std::size_t n = 0; n < rho.size(); ++n) {
    const double d = f[n] - level;
    if (std::abs(d) < 4.0 * eps) any = true;
    rho[n] = (weight ? (*weight)[n] : 1.0) * mollified_delta(d, eps);
  }
  if (!any) throw NumericalError("empty shell: no node within 4 eps of the level set");
  const double mass = quadrature(rho);
  if (!(mass > 0.0)) throw NumericalError("empty shell: zero mass after weighting");
  for (double& r : rho.values()) r /= mass;
  RealField off(grid);
  for (std::size_t n = 0; n < rho.size(); ++n) off[n] = std::abs(f[n] - level) > 4.0 * eps ? rho[n] : 0.0;
  LevelSetState out{ClassicalWavefunction{PhaseFunction(std::move(rho)), std::move(sigma), hbar, t}, eps,
                    quadrature(off)};
  return out;
}

}  // namespace

LevelSetState energy_eigenstate(const PhaseSpaceGrid& grid, const SigmaSpec& spec, double energy,
                                const std::optional<RealField>& weight, std::optional<double> eps,
                                double hbar) {
  const PhaseFunction h = spec.hamiltonian.sample(grid);
  const double width = eps.value_or(default_level_set_width(h, energy));
  return level_set_state(h, energy, weight, width, construct_sigma(spec, grid, energy).sigma, hbar,
                         spec.t);
}

LevelSetState observable_eigenstate(const PhaseFunction& observable, double value,
                                    const SigmaSpec& spec, const std::optional<RealField>& weight,
                                    std::optional<double> eps, double hbar) {
  const double width = eps.value_or(default_level_set_width(observable, value));
  return level_set_state(observable, value, weight, width,
                         construct_sigma(spec, observable.grid()).sigma, hbar, spec.t);
}

RealField gaussian_density(const PhaseSpaceGrid& grid, PhasePoint center, double wq, double wp) {
  RealField rho = sample(grid.phase_plane(), [&](double q, double p) {
    const double a = (q - center.q) / wq, b = (p - center.p) / wp;
    return std::exp(-0.5 * (a * a + b * b));
  });
  const double mass = quadrature(rho);
  for (double& r : rho.values()) r /= mass;
  return rho;
}

PhasePoint centroid(const RealField& rho) {
  const PhaseSpaceGrid& grid = rho.grid();
  RealField wq(grid), wp(grid);
  for (int i = 0; i < grid.q().n; ++i) {
    for (int j = 0; j < grid.p().n; ++j) {
      const std::size_t n = grid.index(i, j);
      wq[n] = grid.q().coord(i) * rho[n];
      wp[n] = grid.p().coord(j) * rho[n];
    }
  }
  const double mass = quadrature(rho);
  if (!(mass > 0.0)) throw NumericalError("centroid of an empty density");
  return {quadrature(wq) / mass, quadrature(wp) / mass};
}

SuperpositionResult superposition_diagnostic(const ClassicalWavefunction& s1,
                                             const ClassicalWavefunction& s2, double w1,
                                             double w2, const Hamiltonian& h,
                                             ConstraintOptions options) {
  require_same_grid(s1.grid(), s2.grid(), "superposition_diagnostic");
  if (s1.hbar != s2.hbar) throw PreconditionError("superposed states use different hbar");
  const double hbar = s1.hbar;

  auto scaled = [&](const ClassicalWavefunction& s, double w) {
    RealField rho = transform(s.rho.field(), [w](double r) { return w * w * r; });
    return ClassicalWavefunction{PhaseFunction(std::move(rho)), s.sigma, s.hbar, s.t};
  };

  SuperpositionResult out{s1, {}, {}};
  const bool only_first = w2 == 0.0;
  const bool only_second = w1 == 0.0;
  if (only_first || only_second) {
    out.state = only_first ? scaled(s1, w1) : scaled(s2, w2);
    out.report = verify_constraints(out.state, h, std::nullopt, options, false);
  } else {
    const ComplexField phi = w1 * s1.compose() + w2 * s2.compose();
    out.state = madelung_split(phi, hbar, s1.t, true);
    options.wrapped_phase = true;
    out.report = verify_constraints(out.state, h, std::nullopt, options, false);
  }

  FringeReport& fringe = out.fringe;
  fringe.centroid1 = centroid(s1.rho.field());
  fringe.centroid2 = centroid(s2.rho.field());
  const GridInterpolator coherent(out.state.rho.field(), Interpolation::cubic);
  const RealField mixture = combine(s1.rho.field(), s2.rho.field(),
                                    [w1, w2](double a, double b) { return w1 * w1 * a + w2 * w2 * b; });
  const GridInterpolator incoherent(mixture, Interpolation::linear);
  constexpr int samples = 201;
  double imax = 0.0, imin = std::numeric_limits<double>::max();
  fringe.min = std::numeric_limits<double>::max();
  for (int s = 0; s < samples; ++s) {
    const double a = static_cast<double>(s) / (samples - 1);
    const double q = fringe.centroid1.q + a * (fringe.centroid2.q - fringe.centroid1.q);
    const double p = fringe.centroid1.p + a * (fringe.centroid2.p - fringe.centroid1.p);
    const double v = std::max(coherent(q, p), 0.0);
    fringe.profile.push_back(v);
    fringe.max = std::max(fringe.max, v);
    fringe.min = std::min(fringe.min, v);
    const double m = std::max(incoherent(q, p), 0.0);
    imax = std::max(imax, m);
    imin = std::min(imin, m);
  }
  fringe.contrast = fringe.max + fringe.min > 0.0 ? (fringe.max - fringe.min) / (fringe.max + fringe.min) : 0.0;
  fringe.incoherent_contrast = imax + imin > 0.0 ? (imax - imin) / (imax + imin) : 0.0;
  return out;
}

}  // namespace vanhove
