#include "vanhove/phasespace.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace vanhove {

void PhysicalConstants::validate() const {
  if (!(hbar > 0.0)) throw PreconditionError("hbar must be positive");
  if (!(mass > 0.0) || !(mass_quantum > 0.0)) throw PreconditionError("masses must be positive");
  if (!(omega > 0.0)) throw PreconditionError("omega must be positive");
}

PhaseFunction::PhaseFunction(RealField values) : values_(std::move(values)) {
  if (values_.grid().rank() != 2) throw PreconditionError("phase functions live on (q, p) grids");
  if (!all_finite(values_)) throw NumericalError("phase function has non-finite values");
}

PhaseFunction::PhaseFunction(RealField values, AnalyticRule rule)
    : PhaseFunction(std::move(values)) {
  rule_ = std::move(rule);
}

PhaseFunction PhaseFunction::sample(const PhaseSpaceGrid& grid, AnalyticRule rule) {
  if (!rule.value) throw PreconditionError("analytic rule has no evaluator");
  RealField values = vanhove::sample(grid.phase_plane(),
                                     [&](double q, double p) { return rule.value(q, p); });
  return PhaseFunction(std::move(values), std::move(rule));
}

namespace {

// Applies `kernel(line_values, n, stride, out)` on every grid line along an axis.
template <typename T, typename Kernel>
Field<T> along_axis(const Field<T>& f, AxisId axis, Kernel kernel) {
  const PhaseSpaceGrid& grid = f.grid();
  if (static_cast<int>(axis) >= grid.rank()) {
    throw PreconditionError("axis out of range for this grid");
  }
  const auto shape = grid.shape();
  const int n = shape[static_cast<int>(axis)];
  const std::size_t stride = grid.stride(axis);
  const std::size_t lines = grid.size() / n;
  Field<T> out(grid);
  const T* in = f.values().data();
  T* res = out.values().data();
  for (std::size_t line = 0; line < lines; ++line) {
    // Decompose line into (outer, inner) relative to the axis stride.
    const std::size_t outer = line / stride;
    const std::size_t inner = line % stride;
    const std::size_t base = outer * stride * n + inner;
    kernel(in + base, n, stride, res + base);
  }
  return out;
}

template <typename T>
void first_derivative_line(const T* f, int n, std::size_t s, T* out, double h, int order) {
  auto at = [&](int i) -> const T& { return f[i * s]; };
  if (order == 2) {
    const double c = 1.0 / (2.0 * h);
    out[0] = c * (4.0 * (at(1) - at(0)) - (at(2) - at(0)));
    for (int i = 1; i < n - 1; ++i) out[i * s] = c * (at(i + 1) - at(i - 1));
    const int e = n - 1;
    out[e * s] = -c * (4.0 * (at(e - 1) - at(e)) - (at(e - 2) - at(e)));
    return;
  }
  const double c = 1.0 / (12.0 * h);
  out[0] = c * (48.0 * (at(1) - at(0)) - 36.0 * (at(2) - at(0)) + 16.0 * (at(3) - at(0)) -
                3.0 * (at(4) - at(0)));
  out[s] = c * (-3.0 * (at(0) - at(1)) + 18.0 * (at(2) - at(1)) - 6.0 * (at(3) - at(1)) +
                (at(4) - at(1)));
  for (int i = 2; i < n - 2; ++i) {
    out[i * s] = c * (8.0 * (at(i + 1) - at(i - 1)) - (at(i + 2) - at(i - 2)));
  }
  const int e = n - 1;
  out[e * s] = -c * (48.0 * (at(e - 1) - at(e)) - 36.0 * (at(e - 2) - at(e)) +
                     16.0 * (at(e - 3) - at(e)) - 3.0 * (at(e - 4) - at(e)));
  const int d = n - 2;
  out[d * s] = -c * (-3.0 * (at(e) - at(d)) + 18.0 * (at(d - 1) - at(d)) -
                     6.0 * (at(d - 2) - at(d)) + (at(d - 3) - at(d)));
}

template <typename T>
void second_derivative_line(const T* f, int n, std::size_t s, T* out, double h, int order) {
  auto at = [&](int i) -> const T& { return f[i * s]; };
  const int e = n - 1;
  if (order == 2) {
    const double c = 1.0 / (h * h);
    out[0] = c * (2.0 * at(0) - 5.0 * at(1) + 4.0 * at(2) - at(3));
    for (int i = 1; i < e; ++i) out[i * s] = c * (at(i + 1) - 2.0 * at(i) + at(i - 1));
    out[e * s] = c * (2.0 * at(e) - 5.0 * at(e - 1) + 4.0 * at(e - 2) - at(e - 3));
    return;
  }
  const double c = 1.0 / (12.0 * h * h);
  out[0] = c * (45.0 * at(0) - 154.0 * at(1) + 214.0 * at(2) - 156.0 * at(3) + 61.0 * at(4) -
                10.0 * at(5));
  out[s] = c * (10.0 * at(0) - 15.0 * at(1) - 4.0 * at(2) + 14.0 * at(3) - 6.0 * at(4) + at(5));
  for (int i = 2; i < e - 1; ++i) {
    out[i * s] = c * (-at(i + 2) + 16.0 * at(i + 1) - 30.0 * at(i) + 16.0 * at(i - 1) - at(i - 2));
  }
  out[(e - 1) * s] = c * (10.0 * at(e) - 15.0 * at(e - 1) - 4.0 * at(e - 2) + 14.0 * at(e - 3) -
                          6.0 * at(e - 4) + at(e - 5));
  out[e * s] = c * (45.0 * at(e) - 154.0 * at(e - 1) + 214.0 * at(e - 2) - 156.0 * at(e - 3) +
                    61.0 * at(e - 4) - 10.0 * at(e - 5));
}

int checked_order(StencilOrder order) {
  const int o = static_cast<int>(order);
  if (o != 2 && o != 4) throw PreconditionError("stencil order must be 2 or 4");
  return o;
}

template <typename T>
double magnitude(const T& v) {
  return std::abs(v);
}

}  // namespace

template <typename T>
Field<T> partial_derivative(const Field<T>& f, AxisId axis, StencilOrder order) {
  const int o = checked_order(order);
  if (static_cast<int>(axis) >= f.grid().rank()) {
    throw PreconditionError("axis out of range for this grid");
  }
  const double h = f.grid().axis(axis).spacing();
  return along_axis(f, axis, [&](const T* in, int n, std::size_t s, T* out) {
    first_derivative_line(in, n, s, out, h, o);
  });
}

template <typename T>
Field<T> second_derivative(const Field<T>& f, AxisId axis, StencilOrder order) {
  const int o = checked_order(order);
  if (static_cast<int>(axis) >= f.grid().rank()) {
    throw PreconditionError("axis out of range for this grid");
  }
  const double h = f.grid().axis(axis).spacing();
  return along_axis(f, axis, [&](const T* in, int n, std::size_t s, T* out) {
    second_derivative_line(in, n, s, out, h, o);
  });
}

template RealField partial_derivative(const RealField&, AxisId, StencilOrder);
template ComplexField partial_derivative(const ComplexField&, AxisId, StencilOrder);
template RealField second_derivative(const RealField&, AxisId, StencilOrder);
template ComplexField second_derivative(const ComplexField&, AxisId, StencilOrder);

PhaseFunction partial_derivative(const PhaseFunction& f, AxisId axis, StencilOrder order) {
  return PhaseFunction(partial_derivative(f.field(), axis, order));
}

PhaseFunction poisson_bracket(const PhaseFunction& f, const PhaseFunction& g,
                              StencilOrder order) {
  require_same_grid(f.grid(), g.grid(), "poisson_bracket");
  const RealField fq = partial_derivative(f.field(), AxisId::q, order);
  const RealField fp = partial_derivative(f.field(), AxisId::p, order);
  const RealField gq = partial_derivative(g.field(), AxisId::q, order);
  const RealField gp = partial_derivative(g.field(), AxisId::p, order);
  RealField out(f.grid());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fq[i] * gp[i] - fp[i] * gq[i];
  return PhaseFunction(std::move(out));
}

namespace {

std::vector<double> trapezoid_weights(const Axis& a) {
  std::vector<double> w(a.n, a.spacing());
  w.front() *= 0.5;
  w.back() *= 0.5;
  return w;
}

}  // namespace

template <typename T>
T quadrature(const Field<T>& f) {
  const PhaseSpaceGrid& grid = f.grid();
  const auto wq = trapezoid_weights(grid.q());
  const auto wp = trapezoid_weights(grid.p());
  const std::vector<double> wx = grid.has_x() ? trapezoid_weights(grid.x()) : std::vector<double>{1.0};
  const auto [nq, np, nx] = grid.shape();
  T total{};
  std::size_t idx = 0;
  for (int i = 0; i < nq; ++i) {
    T plane{};
    for (int j = 0; j < np; ++j) {
      T line{};
      for (int k = 0; k < nx; ++k, ++idx) line += wx[k] * f[idx];
      plane += wp[j] * line;
    }
    total += wq[i] * plane;
  }
  return total;
}

template double quadrature(const RealField&);
template Complex quadrature(const ComplexField&);

double quadrature(const PhaseFunction& f) { return quadrature(f.field()); }

Complex inner_product(const ComplexField& a, const ComplexField& b) {
  return quadrature(combine(a, b, [](const Complex& x, const Complex& y) { return std::conj(x) * y; }));
}

double l2_norm(const ComplexField& f) {
  return std::sqrt(quadrature(transform(f, [](const Complex& v) { return std::norm(v); })));
}

double l1_distance(const RealField& a, const RealField& b) {
  return quadrature(combine(a, b, [](double x, double y) { return std::abs(x - y); }));
}

template <typename T>
double boundary_mass(const Field<T>& f, int width) {
  const auto [nq, np, nx] = f.grid().shape();
  const bool has_x = f.grid().has_x();
  double edge = 0.0, total = 0.0;
  std::size_t idx = 0;
  auto near = [width](int i, int n) { return i < width || i >= n - width; };
  for (int i = 0; i < nq; ++i) {
    for (int j = 0; j < np; ++j) {
      for (int k = 0; k < nx; ++k, ++idx) {
        const double m = magnitude(f[idx]);
        total += m;
        if (near(i, nq) || near(j, np) || (has_x && near(k, nx))) edge += m;
      }
    }
  }
  return total > 0.0 ? edge / total : 0.0;
}

template double boundary_mass(const RealField&, int);
template double boundary_mass(const ComplexField&, int);

template <typename T>
double check_boundary_mass(const Field<T>& f, std::string_view context, double threshold) {
  const double m = boundary_mass(f);
  if (m > threshold) {
    std::ostringstream os;
    os << context << ": boundary mass " << m << " exceeds " << threshold;
    warn(os.str());
  }
  return m;
}

template double check_boundary_mass(const RealField&, std::string_view, double);
template double check_boundary_mass(const ComplexField&, std::string_view, double);

Hamiltonian Hamiltonian::separable(double mass, Potential potential, Potential force_gradient,
                                   std::string name, std::optional<Polynomial> potential_poly) {
  if (!(mass > 0.0)) throw PreconditionError("mass must be positive");
  Hamiltonian h;
  h.separable_ = true;
  h.mass_ = mass;
  h.potential_ = potential;
  h.gradient_ = force_gradient;
  if (potential_poly) {
    h.rule_ = AnalyticRule::from(Polynomial::monomial(0.5 / mass, 0, 2) + *potential_poly, name);
  } else {
    h.rule_.name = name;
    h.rule_.value = [mass, potential](double q, double p) { return 0.5 * p * p / mass + potential(q); };
    h.rule_.d_q = [force_gradient](double q, double) { return force_gradient(q); };
    h.rule_.d_p = [mass](double, double p) { return p / mass; };
  }
  return h;
}

Hamiltonian Hamiltonian::harmonic_oscillator(double mass, double omega) {
  const double k = mass * omega * omega;
  return separable(
      mass, [k](double q) { return 0.5 * k * q * q; }, [k](double q) { return k * q; },
      "harmonic_oscillator", Polynomial::monomial(0.5 * k, 2, 0));
}

Hamiltonian Hamiltonian::free_particle(double mass) {
  return separable(
      mass, [](double) { return 0.0; }, [](double) { return 0.0; }, "free_particle",
      Polynomial());
}

Hamiltonian Hamiltonian::linear_potential(double mass, double g) {
  return separable(
      mass, [mass, g](double q) { return mass * g * q; }, [mass, g](double) { return mass * g; },
      "linear_potential", Polynomial::monomial(mass * g, 1, 0));
}

Hamiltonian Hamiltonian::generic(AnalyticRule rule) {
  if (!rule.value || !rule.has_gradient()) {
    throw PreconditionError("generic Hamiltonian needs a value and gradient");
  }
  Hamiltonian h;
  h.separable_ = false;
  h.rule_ = std::move(rule);
  return h;
}

double Hamiltonian::potential(double q) const {
  if (!separable_) throw PreconditionError("potential() needs a separable Hamiltonian");
  return potential_(q);
}

double Hamiltonian::potential_gradient(double q) const {
  if (!separable_) throw PreconditionError("potential_gradient() needs a separable Hamiltonian");
  return gradient_(q);
}

double Hamiltonian::lagrangian(double q, double p) const {
  return 0.5 * p * p / mass() - potential(q);
}

PhaseFunction Hamiltonian::lagrangian_field(const PhaseSpaceGrid& grid) const {
  AnalyticRule rule;
  rule.name = "L[" + name() + "]";
  if (rule_.polynomial) {
    const Polynomial kinetic = Polynomial::monomial(0.5 / mass_, 0, 2);
    const Polynomial pot = *rule_.polynomial - kinetic;
    rule = AnalyticRule::from(kinetic - pot, rule.name);
  } else {
    Hamiltonian self = *this;
    rule.value = [self](double q, double p) { return self.lagrangian(q, p); };
  }
  return PhaseFunction::sample(grid, rule);
}

std::size_t FlowMap::exited_count() const {
  return static_cast<std::size_t>(std::count(exited.begin(), exited.end(), true));
}

namespace {

PhasePoint verlet_step(const Hamiltonian& h, PhasePoint z, double dt) {
  const double m = h.mass();
  double p = z.p - 0.5 * dt * h.potential_gradient(z.q);
  const double q = z.q + dt * p / m;
  p -= 0.5 * dt * h.potential_gradient(q);
  return {q, p};
}

PhasePoint rk4_step(const Hamiltonian& h, PhasePoint z, double dt) {
  auto rhs = [&h](PhasePoint s) { return PhasePoint{h.d_p(s.q, s.p), -h.d_q(s.q, s.p)}; };
  const PhasePoint k1 = rhs(z);
  const PhasePoint k2 = rhs({z.q + 0.5 * dt * k1.q, z.p + 0.5 * dt * k1.p});
  const PhasePoint k3 = rhs({z.q + 0.5 * dt * k2.q, z.p + 0.5 * dt * k2.p});
  const PhasePoint k4 = rhs({z.q + dt * k3.q, z.p + dt * k3.p});
  return {z.q + dt / 6.0 * (k1.q + 2.0 * k2.q + 2.0 * k3.q + k4.q),
          z.p + dt / 6.0 * (k1.p + 2.0 * k2.p + 2.0 * k3.p + k4.p)};
}

bool outside(const PhaseSpaceGrid& g, PhasePoint z) {
  return z.q < g.q().min || z.q > g.q().max || z.p < g.p().min || z.p > g.p().max;
}

PhasePoint integrate(const Hamiltonian& h, PhasePoint z, double t, double dt,
                     Integrator integrator, const PhaseSpaceGrid* bounds, bool* exited) {
  if (!(dt > 0.0)) throw PreconditionError("dt must be positive");
  if (integrator == Integrator::verlet && !h.is_separable()) {
    throw PreconditionError("Verlet stepping needs a separable Hamiltonian");
  }
  if (t == 0.0) return z;
  const long steps = std::max(1L, static_cast<long>(std::ceil(std::abs(t) / dt - 1e-9)));
  const double step = t / steps;
  for (long s = 0; s < steps; ++s) {
    z = integrator == Integrator::verlet ? verlet_step(h, z, step) : rk4_step(h, z, step);
    if (bounds && exited && outside(*bounds, z)) *exited = true;
  }
  return z;
}

}  // namespace

PhasePoint flow_point(const Hamiltonian& h, PhasePoint start, double t, double dt,
                      Integrator integrator) {
  return integrate(h, start, t, dt, integrator, nullptr, nullptr);
}

FlowMap hamiltonian_flow_map(const Hamiltonian& h, std::span<const PhasePoint> initial,
                             double t, double dt, std::optional<Integrator> integrator,
                             const PhaseSpaceGrid* bounds) {
  const Integrator method = integrator.value_or(default_integrator(h));
  FlowMap map;
  map.t = t;
  map.initial.assign(initial.begin(), initial.end());
  map.q.resize(initial.size());
  map.p.resize(initial.size());
  map.exited.assign(initial.size(), false);
  for (std::size_t i = 0; i < initial.size(); ++i) {
    bool exited = false;
    const PhasePoint end = integrate(h, initial[i], t, dt, method, bounds, &exited);
    map.q[i] = end.q;
    map.p[i] = end.p;
    map.exited[i] = exited;
  }
  return map;
}

}  // namespace vanhove
