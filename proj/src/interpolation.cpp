#include "vanhove/interpolation.hpp"

#include <algorithm>
#include <cmath>

namespace vanhove {

namespace {

constexpr double kPole = -0.2679491924311227;  // sqrt(3) - 2

double initial_causal(const double* c, int n, std::size_t s) {
  const int horizon = static_cast<int>(std::ceil(std::log(1e-16) / std::log(std::abs(kPole))));
  if (horizon < n) {
    double zn = kPole;
    double sum = c[0];
    for (int k = 1; k < horizon; ++k) {
      sum += zn * c[k * s];
      zn *= kPole;
    }
    return sum;
  }
  double zn = kPole;
  const double iz = 1.0 / kPole;
  double z2n = std::pow(kPole, n - 1);
  double sum = c[0] + z2n * c[(n - 1) * s];
  z2n *= z2n * iz;
  for (int k = 1; k < n - 1; ++k) {
    sum += (zn + z2n) * c[k * s];
    zn *= kPole;
    z2n *= iz;
  }
  return sum / (1.0 - zn * zn);
}

void prefilter_line(double* c, int n, std::size_t s) {
  const double gain = (1.0 - kPole) * (1.0 - 1.0 / kPole);
  for (int k = 0; k < n; ++k) c[k * s] *= gain;
  c[0] = initial_causal(c, n, s);
  for (int k = 1; k < n; ++k) c[k * s] += kPole * c[(k - 1) * s];
  c[(n - 1) * s] = (kPole / (kPole * kPole - 1.0)) * (kPole * c[(n - 2) * s] + c[(n - 1) * s]);
  for (int k = n - 2; k >= 0; --k) c[k * s] = kPole * (c[(k + 1) * s] - c[k * s]);
}

int mirror(int k, int n) {
  if (k < 0) k = -k;
  if (k >= n) k = 2 * n - 2 - k;
  return std::clamp(k, 0, n - 1);
}

void bspline_weights(double t, double w[4]) {
  const double s = 1.0 - t;
  w[0] = s * s * s / 6.0;
  w[1] = 2.0 / 3.0 - t * t + 0.5 * t * t * t;
  w[2] = 2.0 / 3.0 - s * s + 0.5 * s * s * s;
  w[3] = t * t * t / 6.0;
}

}  // namespace

GridInterpolator::GridInterpolator(const RealField& field, Interpolation kind)
    : q_(field.grid().q()), p_(field.grid().p()), kind_(kind), coeffs_(field.data()) {
  if (field.grid().rank() != 2) throw PreconditionError("interpolation needs a 2D field");
  if (kind_ == Interpolation::cubic) {
    for (int j = 0; j < p_.n; ++j) prefilter_line(coeffs_.data() + j, q_.n, p_.n);
    for (int i = 0; i < q_.n; ++i) prefilter_line(coeffs_.data() + static_cast<std::size_t>(i) * p_.n, p_.n, 1);
  }
}

bool GridInterpolator::contains(double q, double p) const {
  return q >= q_.min && q <= q_.max && p >= p_.min && p <= p_.max;
}

double GridInterpolator::coeff(int i, int j) const {
  return coeffs_[static_cast<std::size_t>(mirror(i, q_.n)) * p_.n + mirror(j, p_.n)];
}

double GridInterpolator::operator()(double q, double p) const {
  const double u = std::clamp((q - q_.min) / q_.spacing(), 0.0, q_.n - 1.0);
  const double v = std::clamp((p - p_.min) / p_.spacing(), 0.0, p_.n - 1.0);
  return kind_ == Interpolation::cubic ? cubic(u, v) : linear(u, v);
}

double GridInterpolator::linear(double u, double v) const {
  const int i = std::min(static_cast<int>(u), q_.n - 2);
  const int j = std::min(static_cast<int>(v), p_.n - 2);
  const double a = u - i, b = v - j;
  return (1 - a) * (1 - b) * coeff(i, j) + a * (1 - b) * coeff(i + 1, j) +
         (1 - a) * b * coeff(i, j + 1) + a * b * coeff(i + 1, j + 1);
}

double GridInterpolator::cubic(double u, double v) const {
  const int i = std::min(static_cast<int>(u), q_.n - 2);
  const int j = std::min(static_cast<int>(v), p_.n - 2);
  double wu[4], wv[4];
  bspline_weights(u - i, wu);
  bspline_weights(v - j, wv);
  double sum = 0.0;
  for (int a = 0; a < 4; ++a) {
    double row = 0.0;
    for (int b = 0; b < 4; ++b) row += wv[b] * coeff(i - 1 + a, j - 1 + b);
    sum += wu[a] * row;
  }
  return sum;
}

}  // namespace vanhove
