#include "vanhove/spectral.hpp"

#include <fftw3.h>

#include <mutex>
#include <numbers>

namespace vanhove {

namespace {

// Only fftw_execute is thread safe; planning goes through this lock.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

fftw_plan make_plan(std::array<int, 3> shape, AxisId axis, int sign) {
  const int a = shape[0], b = shape[1], c = shape[2];
  fftw_iodim dim{};
  std::array<fftw_iodim, 2> batch{};
  switch (axis) {
    case AxisId::q:
      dim = {a, b * c, b * c};
      batch = {fftw_iodim{b, c, c}, fftw_iodim{c, 1, 1}};
      break;
    case AxisId::p:
      dim = {b, c, c};
      batch = {fftw_iodim{a, b * c, b * c}, fftw_iodim{c, 1, 1}};
      break;
    case AxisId::x:
      dim = {c, 1, 1};
      batch = {fftw_iodim{a, b * c, b * c}, fftw_iodim{b, c, c}};
      break;
  }
  // Planning needs a buffer; FFTW_ESTIMATE leaves it untouched and
  // FFTW_UNALIGNED lets the plan run on any array with the same layout.
  std::vector<fftw_complex> scratch(static_cast<std::size_t>(a) * b * c);
  std::lock_guard lock(planner_mutex());
  fftw_plan plan = fftw_plan_guru_dft(1, &dim, 2, batch.data(), scratch.data(), scratch.data(), sign,
                                      FFTW_ESTIMATE | FFTW_UNALIGNED);
  if (!plan) throw NumericalError("FFTW could not create a plan");
  return plan;
}

}  // namespace

AxisTransform::AxisTransform(std::array<int, 3> shape, AxisId axis)
    : n_(shape[static_cast<int>(axis)]) {
  forward_ = make_plan(shape, axis, FFTW_FORWARD);
  backward_ = make_plan(shape, axis, FFTW_BACKWARD);
}

AxisTransform::~AxisTransform() {
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(static_cast<fftw_plan>(forward_));
  fftw_destroy_plan(static_cast<fftw_plan>(backward_));
}

void AxisTransform::forward(Complex* data) const {
  auto* d = reinterpret_cast<fftw_complex*>(data);
  fftw_execute_dft(static_cast<fftw_plan>(forward_), d, d);
}

void AxisTransform::backward(Complex* data) const {
  auto* d = reinterpret_cast<fftw_complex*>(data);
  fftw_execute_dft(static_cast<fftw_plan>(backward_), d, d);
}

std::vector<double> wavenumbers(const Axis& axis) {
  const int n = axis.n;
  const double length = n * axis.spacing();
  std::vector<double> k(n);
  for (int j = 0; j < n; ++j) {
    const int m = j <= (n - 1) / 2 ? j : j - n;
    k[j] = 2.0 * std::numbers::pi * m / length;
  }
  if (n % 2 == 0) k[n / 2] = 0.0;
  return k;
}

ComplexField spectral_derivative(const ComplexField& f, AxisId axis, int order) {
  if (order != 1 && order != 2) throw PreconditionError("spectral_derivative supports order 1 or 2");
  const PhaseSpaceGrid& grid = f.grid();
  const auto shape = grid.shape();
  const AxisTransform fft(shape, axis);
  const Axis& ax = grid.axis(axis);
  std::vector<double> k = wavenumbers(ax);
  if (order == 2) {
    // Keep the Nyquist mode for the even derivative.
    const double length = ax.n * ax.spacing();
    if (ax.n % 2 == 0) k[ax.n / 2] = std::numbers::pi * ax.n / length;
  }
  ComplexField out = f;
  fft.forward(out.values().data());
  const double scale = 1.0 / ax.n;
  const std::size_t stride = grid.stride(axis);
  for (std::size_t idx = 0; idx < out.size(); ++idx) {
    const int j = static_cast<int>((idx / stride) % ax.n);
    const Complex factor = order == 1 ? Complex(0.0, k[j]) : Complex(-k[j] * k[j], 0.0);
    out[idx] *= factor * scale;
  }
  fft.backward(out.values().data());
  return out;
}

}  // namespace vanhove
