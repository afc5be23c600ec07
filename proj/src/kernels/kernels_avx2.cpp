// AVX2/FMA kernels. This translation unit is compiled with -mavx2 -mfma and is
// only entered after the dispatcher has confirmed CPU support.

#include "tfarm/kernels.hpp"

#include <immintrin.h>

#include <cmath>

namespace tfarm::kernels::avx2 {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d pair = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(pair, _mm_unpackhi_pd(pair, pair)));
}

inline __m256d abs_pd(__m256d v) {
  return _mm256_andnot_pd(_mm256_set1_pd(-0.0), v);
}

}  // namespace

double dot(std::span<const double> a, std::span<const double> b) noexcept {
  const std::size_t n = a.size();
  const double* pa = a.data();
  const double* pb = b.data();
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(pa + i), _mm256_loadu_pd(pb + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(pa + i + 4), _mm256_loadu_pd(pb + i + 4), acc1);
  }
  if (i + 4 <= n) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(pa + i), _mm256_loadu_pd(pb + i), acc0);
    i += 4;
  }
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc = std::fma(pa[i], pb[i], acc);
  return acc;
}

double sum_squares(std::span<const double> x) noexcept { return dot(x, x); }

void axpy(double alpha, std::span<const double> x, std::span<double> y) noexcept {
  const std::size_t n = x.size();
  const double* px = x.data();
  double* py = y.data();
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(py + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(px + i), _mm256_loadu_pd(py + i)));
  }
  for (; i < n; ++i) py[i] = std::fma(alpha, px[i], py[i]);
}

void scale(double alpha, std::span<double> x) noexcept {
  const std::size_t n = x.size();
  double* px = x.data();
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(px + i, _mm256_mul_pd(va, _mm256_loadu_pd(px + i)));
  for (; i < n; ++i) px[i] *= alpha;
}

void rotate(std::span<double> x, std::span<double> y, double c, double s) noexcept {
  const std::size_t n = x.size();
  double* px = x.data();
  double* py = y.data();
  const __m256d vc = _mm256_set1_pd(c);
  const __m256d vs = _mm256_set1_pd(s);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d xi = _mm256_loadu_pd(px + i);
    const __m256d yi = _mm256_loadu_pd(py + i);
    _mm256_storeu_pd(px + i, _mm256_fmsub_pd(vc, xi, _mm256_mul_pd(vs, yi)));
    _mm256_storeu_pd(py + i, _mm256_fmadd_pd(vs, xi, _mm256_mul_pd(vc, yi)));
  }
  for (; i < n; ++i) {
    const double xi = px[i];
    const double yi = py[i];
    px[i] = std::fma(c, xi, -(s * yi));
    py[i] = std::fma(s, xi, c * yi);
  }
}

double max_abs(std::span<const double> x) noexcept {
  const std::size_t n = x.size();
  const double* px = x.data();
  __m256d m = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) m = _mm256_max_pd(m, abs_pd(_mm256_loadu_pd(px + i)));
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, m);
  double r = std::fmax(std::fmax(lanes[0], lanes[1]), std::fmax(lanes[2], lanes[3]));
  for (; i < n; ++i) r = std::fmax(r, std::fabs(px[i]));
  return r;
}

}  // namespace tfarm::kernels::avx2
