#pragma once

#include <array>
#include <cstddef>
#include <optional>

namespace vanhove {

enum class AxisId : int { q = 0, p = 1, x = 2 };

/// Uniformly spaced nodes min, min + h, ..., max (inclusive).
struct Axis {
  double min = 0.0;
  double max = 1.0;
  int n = 8;

  double spacing() const { return (max - min) / (n - 1); }
  double coord(int i) const { return min + (max - min) * i / (n - 1); }
  bool operator==(const Axis&) const = default;
};

/// Tensor grid over (q, p) or (q, p, x). Storage is row-major with q slowest,
/// then p, then x.
class PhaseSpaceGrid {
 public:
  PhaseSpaceGrid(Axis q, Axis p);
  PhaseSpaceGrid(Axis q, Axis p, Axis x);

  int rank() const { return x_ ? 3 : 2; }
  bool has_x() const { return x_.has_value(); }
  const Axis& q() const { return q_; }
  const Axis& p() const { return p_; }
  const Axis& x() const;
  const Axis& axis(AxisId id) const;

  std::size_t size() const;
  // Node counts along (q, p, x); x reports 1 when absent.
  std::array<int, 3> shape() const;
  std::size_t stride(AxisId id) const;
  std::size_t index(int i, int j, int k = 0) const {
    return (static_cast<std::size_t>(i) * p_.n + j) * nx() + k;
  }
  int nx() const { return x_ ? x_->n : 1; }

  // The (q, p) grid with the x axis dropped.
  PhaseSpaceGrid phase_plane() const { return PhaseSpaceGrid(q_, p_); }
  // Same extents, node counts multiplied by factor (at least 8 per axis).
  PhaseSpaceGrid refined(double factor) const;
  double cell_volume() const;

  bool operator==(const PhaseSpaceGrid&) const = default;

 private:
  Axis q_;
  Axis p_;
  std::optional<Axis> x_;
};

}  // namespace vanhove
