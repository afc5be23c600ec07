#include "tfarm/kernels.hpp"

#include <cmath>

namespace tfarm::kernels::scalar {

double dot(std::span<const double> a, std::span<const double> b) noexcept {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double sum_squares(std::span<const double> x) noexcept {
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return acc;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) noexcept {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

void scale(double alpha, std::span<double> x) noexcept {
  for (double& v : x) v *= alpha;
}

void rotate(std::span<double> x, std::span<double> y, double c, double s) noexcept {
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double xi = x[i];
    const double yi = y[i];
    x[i] = c * xi - s * yi;
    y[i] = s * xi + c * yi;
  }
}

double max_abs(std::span<const double> x) noexcept {
  double m = 0.0;
  for (double v : x) m = std::fmax(m, std::fabs(v));
  return m;
}

}  // namespace tfarm::kernels::scalar
