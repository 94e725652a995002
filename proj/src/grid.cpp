#include "vanhove/grid.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <mutex>
#include <string>

#include "vanhove/error.hpp"

namespace vanhove {

namespace {

void validate_axis(const Axis& axis, const char* name) {
  if (axis.n < 8) {
    throw PreconditionError(std::string("axis ") + name + " needs at least 8 nodes");
  }
  if (!std::isfinite(axis.min) || !std::isfinite(axis.max)) {
    throw PreconditionError(std::string("axis ") + name + " has non-finite extent");
  }
  if (!(axis.max > axis.min)) {
    throw PreconditionError(std::string("axis ") + name + " needs max > min");
  }
}

std::mutex& warning_mutex() {
  static std::mutex m;
  return m;
}

WarningHandler& warning_handler() {
  static WarningHandler handler = [](std::string_view msg) {
    std::cerr << "warning: " << msg << '\n';
  };
  return handler;
}

}  // namespace

void set_warning_handler(WarningHandler handler) {
  std::lock_guard lock(warning_mutex());
  warning_handler() = std::move(handler);
}

void warn(std::string_view message) {
  std::lock_guard lock(warning_mutex());
  if (warning_handler()) warning_handler()(message);
}

PhaseSpaceGrid::PhaseSpaceGrid(Axis q, Axis p) : q_(q), p_(p) {
  validate_axis(q_, "q");
  validate_axis(p_, "p");
}

PhaseSpaceGrid::PhaseSpaceGrid(Axis q, Axis p, Axis x) : q_(q), p_(p), x_(x) {
  validate_axis(q_, "q");
  validate_axis(p_, "p");
  validate_axis(*x_, "x");
}

const Axis& PhaseSpaceGrid::x() const {
  if (!x_) throw PreconditionError("grid has no x axis");
  return *x_;
}

const Axis& PhaseSpaceGrid::axis(AxisId id) const {
  switch (id) {
    case AxisId::q:
      return q_;
    case AxisId::p:
      return p_;
    case AxisId::x:
      return x();
  }
  throw PreconditionError("axis out of range");
}

std::size_t PhaseSpaceGrid::size() const {
  return static_cast<std::size_t>(q_.n) * p_.n * nx();
}

std::array<int, 3> PhaseSpaceGrid::shape() const { return {q_.n, p_.n, nx()}; }

std::size_t PhaseSpaceGrid::stride(AxisId id) const {
  switch (id) {
    case AxisId::q:
      return static_cast<std::size_t>(p_.n) * nx();
    case AxisId::p:
      return static_cast<std::size_t>(nx());
    case AxisId::x:
      if (!x_) throw PreconditionError("axis out of range: grid has no x axis");
      return 1;
  }
  throw PreconditionError("axis out of range");
}

PhaseSpaceGrid PhaseSpaceGrid::refined(double factor) const {
  if (!(factor > 0.0)) throw PreconditionError("grid scale factor must be positive");
  auto scale = [factor](Axis a) {
    a.n = std::max(8, static_cast<int>(std::lround((a.n - 1) * factor)) + 1);
    return a;
  };
  if (x_) return PhaseSpaceGrid(scale(q_), scale(p_), scale(*x_));
  return PhaseSpaceGrid(scale(q_), scale(p_));
}

double PhaseSpaceGrid::cell_volume() const {
  double v = q_.spacing() * p_.spacing();
  if (x_) v *= x_->spacing();
  return v;
}

}  // namespace vanhove
