#pragma once

#include <cmath>
#include <complex>
#include <span>
#include <type_traits>
#include <string_view>
#include <utility>
#include <vector>

#include "vanhove/error.hpp"
#include "vanhove/grid.hpp"

namespace vanhove {

using Complex = std::complex<double>;

/// Values sampled on every node of a PhaseSpaceGrid.
template <typename T>
class Field {
 public:
  using value_type = T;

  explicit Field(PhaseSpaceGrid grid, T fill = T{})
      : grid_(std::move(grid)), values_(grid_.size(), fill) {}

  Field(PhaseSpaceGrid grid, std::vector<T> values)
      : grid_(std::move(grid)), values_(std::move(values)) {
    if (values_.size() != grid_.size()) {
      throw PreconditionError("field size does not match grid");
    }
  }

  const PhaseSpaceGrid& grid() const { return grid_; }
  std::size_t size() const { return values_.size(); }

  std::span<const T> values() const { return values_; }
  std::span<T> values() { return values_; }
  const std::vector<T>& data() const { return values_; }

  T& operator[](std::size_t i) { return values_[i]; }
  const T& operator[](std::size_t i) const { return values_[i]; }
  T& at(int i, int j, int k = 0) { return values_[grid_.index(i, j, k)]; }
  const T& at(int i, int j, int k = 0) const { return values_[grid_.index(i, j, k)]; }

 private:
  PhaseSpaceGrid grid_;
  std::vector<T> values_;
};

using RealField = Field<double>;
using ComplexField = Field<Complex>;

inline void require_same_grid(const PhaseSpaceGrid& a, const PhaseSpaceGrid& b,
                              std::string_view context) {
  if (!(a == b)) {
    throw GridMismatch(std::string(context) + ": fields live on different grids");
  }
}

/// Calls fn(q, p) on 2D grids or fn(q, p, x) on 3D grids for every node.
template <typename T = double, typename Fn>
Field<T> sample(const PhaseSpaceGrid& grid, Fn&& fn) {
  Field<T> out(grid);
  const auto [nq, np, nx] = grid.shape();
  std::size_t idx = 0;
  for (int i = 0; i < nq; ++i) {
    const double q = grid.q().coord(i);
    for (int j = 0; j < np; ++j) {
      const double p = grid.p().coord(j);
      for (int k = 0; k < nx; ++k, ++idx) {
        if constexpr (std::is_invocable_v<Fn, double, double, double>) {
          out[idx] = fn(q, p, grid.x().coord(k));
        } else {
          out[idx] = fn(q, p);
        }
      }
    }
  }
  return out;
}

template <typename T, typename U, typename Op>
auto combine(const Field<T>& a, const Field<U>& b, Op op) {
  require_same_grid(a.grid(), b.grid(), "combine");
  using R = decltype(op(a[0], b[0]));
  Field<R> out(a.grid());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = op(a[i], b[i]);
  return out;
}

template <typename T, typename Op>
auto transform(const Field<T>& a, Op op) {
  using R = decltype(op(a[0]));
  Field<R> out(a.grid());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = op(a[i]);
  return out;
}

template <typename T>
Field<T> operator+(const Field<T>& a, const Field<T>& b) {
  return combine(a, b, [](const T& x, const T& y) { return x + y; });
}
template <typename T>
Field<T> operator-(const Field<T>& a, const Field<T>& b) {
  return combine(a, b, [](const T& x, const T& y) { return x - y; });
}
template <typename T, typename S>
Field<T> operator*(S s, const Field<T>& a) {
  return transform(a, [s](const T& x) -> T { return s * x; });
}

// Pointwise product of a real field with a complex or real one.
template <typename T>
Field<T> multiply(const RealField& a, const Field<T>& b) {
  return combine(a, b, [](double x, const T& y) -> T { return x * y; });
}

inline bool all_finite(const RealField& f) {
  for (double v : f.values()) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

inline bool all_finite(const ComplexField& f) {
  for (const Complex& v : f.values()) {
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
  }
  return true;
}

}  // namespace vanhove
