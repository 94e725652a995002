#pragma once

#include <vector>

#include "vanhove/field.hpp"

namespace vanhove {

enum class Interpolation { linear, cubic };

/// Off-grid evaluation of a 2D real field. `cubic` is interpolating cubic
/// B-spline (prefiltered coefficients, mirror boundaries); `linear` is bilinear.
/// Coordinates outside the grid are clamped to the nearest edge.
class GridInterpolator {
 public:
  GridInterpolator(const RealField& field, Interpolation kind);

  double operator()(double q, double p) const;
  bool contains(double q, double p) const;

 private:
  double linear(double u, double v) const;
  double cubic(double u, double v) const;
  double coeff(int i, int j) const;

  Axis q_;
  Axis p_;
  Interpolation kind_;
  std::vector<double> coeffs_;
};

}  // namespace vanhove
