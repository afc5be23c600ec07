#pragma once
// Data-parallel inner loops shared by the eigensolver, coordinate descent and
// the multiplier bootstrap.
//
// Every kernel has a scalar reference implementation and, on x86-64, an AVX2/FMA
// variant. The variant is selected once per process from CPUID; setting the
// environment variable TFARM_SIMD=scalar pins the reference path. Results of the
// two backends agree to rounding (reductions use a different summation order),
// but a given backend is bitwise deterministic.

#include <cstddef>
#include <span>
#include <string_view>

namespace tfarm::kernels {

enum class Backend { scalar, avx2 };

/// Backend used by the dispatching entry points below.
Backend active_backend() noexcept;
bool backend_available(Backend backend) noexcept;
std::string_view backend_name(Backend backend) noexcept;

/// Overrides the runtime choice. Throws InvalidArgument if the CPU lacks the backend.
void force_backend(Backend backend);

/// sum_i a[i] * b[i]; lengths must match.
double dot(std::span<const double> a, std::span<const double> b) noexcept;
/// sum_i x[i]^2
double sum_squares(std::span<const double> x) noexcept;
/// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y) noexcept;
/// x *= alpha
void scale(double alpha, std::span<double> x) noexcept;
/// Plane rotation applied elementwise: x' = c*x - s*y, y' = s*x + c*y.
void rotate(std::span<double> x, std::span<double> y, double c, double s) noexcept;
/// max_i |x[i]|, 0 for an empty span.
double max_abs(std::span<const double> x) noexcept;

namespace scalar {
double dot(std::span<const double> a, std::span<const double> b) noexcept;
double sum_squares(std::span<const double> x) noexcept;
void axpy(double alpha, std::span<const double> x, std::span<double> y) noexcept;
void scale(double alpha, std::span<double> x) noexcept;
void rotate(std::span<double> x, std::span<double> y, double c, double s) noexcept;
double max_abs(std::span<const double> x) noexcept;
}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
#define TFARM_HAS_AVX2_KERNELS 1
namespace avx2 {
double dot(std::span<const double> a, std::span<const double> b) noexcept;
double sum_squares(std::span<const double> x) noexcept;
void axpy(double alpha, std::span<const double> x, std::span<double> y) noexcept;
void scale(double alpha, std::span<double> x) noexcept;
void rotate(std::span<double> x, std::span<double> y, double c, double s) noexcept;
double max_abs(std::span<const double> x) noexcept;
}  // namespace avx2
#else
#define TFARM_HAS_AVX2_KERNELS 0
#endif

}  // namespace tfarm::kernels
