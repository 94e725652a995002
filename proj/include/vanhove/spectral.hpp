#pragma once

#include <array>
#include <vector>

#include "vanhove/field.hpp"

namespace vanhove {

/// Batched 1D complex FFT along one axis of a row-major (nq, np, nx) array.
/// The transform is unnormalized in both directions (FFTW convention).
class AxisTransform {
 public:
  AxisTransform(std::array<int, 3> shape, AxisId axis);
  ~AxisTransform();
  AxisTransform(const AxisTransform&) = delete;
  AxisTransform& operator=(const AxisTransform&) = delete;

  void forward(Complex* data) const;
  void backward(Complex* data) const;
  int length() const { return n_; }

 private:
  void* forward_ = nullptr;
  void* backward_ = nullptr;
  int n_ = 0;
};

// Angular wavenumbers of an n-node axis treated as periodic with period n h.
// The Nyquist mode is set to zero so odd operators stay antisymmetric.
std::vector<double> wavenumbers(const Axis& axis);

// Spectral derivative of order 1 or 2 along one axis (periodic domain).
ComplexField spectral_derivative(const ComplexField& f, AxisId axis, int order = 1);

}  // namespace vanhove
