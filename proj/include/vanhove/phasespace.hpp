#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vanhove/analytic.hpp"
#include "vanhove/field.hpp"

namespace vanhove {

/// Natural units by default (hbar = m = omega = 1).
struct PhysicalConstants {
  double hbar = 1.0;
  double mass = 1.0;       // classical particle / pointer
  double mass_quantum = 1.0;
  double omega = 1.0;

  void validate() const;
};

/// Scalar field F(q, p) on a 2D grid, optionally tied to a closed form.
class PhaseFunction {
 public:
  explicit PhaseFunction(RealField values);
  PhaseFunction(RealField values, AnalyticRule rule);

  static PhaseFunction sample(const PhaseSpaceGrid& grid, AnalyticRule rule);

  const RealField& field() const { return values_; }
  const PhaseSpaceGrid& grid() const { return values_.grid(); }
  std::span<const double> values() const { return values_.values(); }
  double operator[](std::size_t i) const { return values_[i]; }
  std::size_t size() const { return values_.size(); }

  const std::optional<AnalyticRule>& rule() const { return rule_; }
  bool has_rule() const { return rule_.has_value(); }
  std::string name() const { return rule_ ? rule_->name : std::string("<sampled>"); }

 private:
  RealField values_;
  std::optional<AnalyticRule> rule_;
};

enum class StencilOrder : int { second = 2, fourth = 4 };

/// Central differences in the interior, one-sided stencils of matching order
/// on the first and last nodes. Works on 2D and 3D fields.
template <typename T>
Field<T> partial_derivative(const Field<T>& f, AxisId axis,
                            StencilOrder order = StencilOrder::fourth);
PhaseFunction partial_derivative(const PhaseFunction& f, AxisId axis,
                                 StencilOrder order = StencilOrder::fourth);

/// Second derivative along one axis (used for closed-form checks).
template <typename T>
Field<T> second_derivative(const Field<T>& f, AxisId axis,
                           StencilOrder order = StencilOrder::fourth);

/// Nodewise dF/dq dG/dp - dF/dp dG/dq with numerical stencils.
PhaseFunction poisson_bracket(const PhaseFunction& f, const PhaseFunction& g,
                              StencilOrder order = StencilOrder::fourth);

/// Trapezoidal rule over every axis of the grid.
template <typename T>
T quadrature(const Field<T>& f);
double quadrature(const PhaseFunction& f);

// Trapezoid-weighted inner product <a|b> = sum w conj(a) b.
Complex inner_product(const ComplexField& a, const ComplexField& b);
double l2_norm(const ComplexField& f);
double l1_distance(const RealField& a, const RealField& b);

/// Fraction of sum |f| carried by nodes within `width` nodes of any edge.
template <typename T>
double boundary_mass(const Field<T>& f, int width = 3);

// Emits a warning when the boundary mass exceeds the threshold.
template <typename T>
double check_boundary_mass(const Field<T>& f, std::string_view context,
                           double threshold = 1e-6);

struct PhasePoint {
  double q = 0.0;
  double p = 0.0;
};

/// Hamiltonian for trajectory integration. Separable ones (p^2/2m + V(q))
/// use Stoermer-Verlet; generic ones use RK4.
class Hamiltonian {
 public:
  using Potential = std::function<double(double)>;

  static Hamiltonian separable(double mass, Potential potential, Potential force_gradient,
                               std::string name,
                               std::optional<Polynomial> potential_poly = std::nullopt);
  static Hamiltonian harmonic_oscillator(double mass, double omega);
  static Hamiltonian free_particle(double mass);
  // V(q) = m g q.
  static Hamiltonian linear_potential(double mass, double g);
  static Hamiltonian generic(AnalyticRule rule);

  bool is_separable() const { return separable_; }
  double mass() const { return mass_; }
  const std::string& name() const { return rule_.name; }

  double operator()(double q, double p) const { return rule_.value(q, p); }
  double d_q(double q, double p) const { return rule_.d_q(q, p); }
  double d_p(double q, double p) const { return rule_.d_p(q, p); }
  double potential(double q) const;
  double potential_gradient(double q) const;
  // L = p^2/2m - V(q); separable only.
  double lagrangian(double q, double p) const;

  const AnalyticRule& rule() const { return rule_; }
  PhaseFunction sample(const PhaseSpaceGrid& grid) const {
    return PhaseFunction::sample(grid, rule_);
  }
  PhaseFunction lagrangian_field(const PhaseSpaceGrid& grid) const;

 private:
  Hamiltonian() = default;
  bool separable_ = false;
  double mass_ = 1.0;
  Potential potential_;
  Potential gradient_;
  AnalyticRule rule_;
};

enum class Integrator { verlet, rk4 };

/// Trajectory endpoints Q(q', p', t), P(q', p', t) for a set of initial points.
struct FlowMap {
  std::vector<PhasePoint> initial;
  std::vector<double> q;
  std::vector<double> p;
  double t = 0.0;
  // Set when a trajectory left the supplied bounds at any step.
  std::vector<bool> exited;

  std::size_t exited_count() const;
};

// Integrates from `start` over time t (negative t runs backward) in
// ceil(|t|/dt) equal steps.
PhasePoint flow_point(const Hamiltonian& h, PhasePoint start, double t, double dt,
                      Integrator integrator);

FlowMap hamiltonian_flow_map(const Hamiltonian& h, std::span<const PhasePoint> initial,
                             double t, double dt,
                             std::optional<Integrator> integrator = std::nullopt,
                             const PhaseSpaceGrid* bounds = nullptr);

inline Integrator default_integrator(const Hamiltonian& h) {
  return h.is_separable() ? Integrator::verlet : Integrator::rk4;
}

}  // namespace vanhove
