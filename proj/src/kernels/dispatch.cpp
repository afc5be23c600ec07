// Backend selection. No intrinsics here.

#include <atomic>
#include <cstdlib>
#include <cstring>

#include "tfarm/errors.hpp"
#include "tfarm/kernels.hpp"

namespace tfarm::kernels {
namespace {

struct Table {
  Backend backend;
  double (*dot)(std::span<const double>, std::span<const double>) noexcept;
  double (*sum_squares)(std::span<const double>) noexcept;
  void (*axpy)(double, std::span<const double>, std::span<double>) noexcept;
  void (*scale)(double, std::span<double>) noexcept;
  void (*rotate)(std::span<double>, std::span<double>, double, double) noexcept;
  double (*max_abs)(std::span<const double>) noexcept;
};

constexpr Table kScalar{Backend::scalar, scalar::dot,    scalar::sum_squares, scalar::axpy,
                        scalar::scale,   scalar::rotate, scalar::max_abs};
#if TFARM_HAS_AVX2_KERNELS
constexpr Table kAvx2{Backend::avx2, avx2::dot,    avx2::sum_squares, avx2::axpy,
                      avx2::scale,   avx2::rotate, avx2::max_abs};
#endif

bool cpu_has_avx2() noexcept {
#if TFARM_HAS_AVX2_KERNELS && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const Table* initial_table() noexcept {
  const char* env = std::getenv("TFARM_SIMD");
  if (env != nullptr && std::strcmp(env, "scalar") == 0) return &kScalar;
#if TFARM_HAS_AVX2_KERNELS
  if (cpu_has_avx2()) return &kAvx2;
#endif
  return &kScalar;
}

std::atomic<const Table*>& table_slot() noexcept {
  static std::atomic<const Table*> slot{initial_table()};
  return slot;
}

inline const Table& table() noexcept { return *table_slot().load(std::memory_order_relaxed); }

}  // namespace

Backend active_backend() noexcept { return table().backend; }

bool backend_available(Backend backend) noexcept {
  switch (backend) {
    case Backend::scalar:
      return true;
    case Backend::avx2:
      return cpu_has_avx2();
  }
  return false;
}

std::string_view backend_name(Backend backend) noexcept {
  return backend == Backend::avx2 ? "avx2" : "scalar";
}

void force_backend(Backend backend) {
  if (!backend_available(backend)) {
    throw InvalidArgument("kernel backend '" + std::string(backend_name(backend)) +
                          "' is not supported on this CPU");
  }
#if TFARM_HAS_AVX2_KERNELS
  table_slot().store(backend == Backend::avx2 ? &kAvx2 : &kScalar);
#else
  table_slot().store(&kScalar);
#endif
}

double dot(std::span<const double> a, std::span<const double> b) noexcept { return table().dot(a, b); }
double sum_squares(std::span<const double> x) noexcept { return table().sum_squares(x); }
void axpy(double alpha, std::span<const double> x, std::span<double> y) noexcept {
  table().axpy(alpha, x, y);
}
void scale(double alpha, std::span<double> x) noexcept { table().scale(alpha, x); }
void rotate(std::span<double> x, std::span<double> y, double c, double s) noexcept {
  table().rotate(x, y, c, s);
}
double max_abs(std::span<const double> x) noexcept { return table().max_abs(x); }

}  // namespace tfarm::kernels
