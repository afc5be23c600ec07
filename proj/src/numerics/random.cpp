#include "tfarm/random.hpp"

#include "tfarm/errors.hpp"
#include "tfarm/kernels.hpp"
#include "tfarm/linalg.hpp"

namespace tfarm {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t index)
    : seed_(seed), index_(index), engine_(splitmix64(splitmix64(seed) ^ splitmix64(~index))) {}

RngStream RngStream::substream(std::uint64_t i) const {
  return RngStream(splitmix64(seed_ ^ splitmix64(index_ + 0x51ed2701ULL)), i);
}

double RngStream::normal() { return normal_(engine_); }

double RngStream::uniform(double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(engine_);
}

double RngStream::rademacher() { return (engine_() >> 63) != 0U ? 1.0 : -1.0; }

Matrix standard_normal_matrix(RngStream& rng, std::size_t rows, std::size_t cols) {
  if (rows == 0 || cols == 0) {
    throw InvalidArgument("standard_normal_matrix: dimensions must be positive");
  }
  Matrix m(rows, cols);
  for (double& v : m.values()) v = rng.normal();
  return m;
}

Matrix mvn_from_cholesky(RngStream& rng, std::size_t n, const Matrix& lower) {
  const std::size_t p = lower.rows();
  if (n == 0 || p == 0) throw InvalidArgument("mvn: dimensions must be positive");
  Matrix out(n, p);
  Vector z(p);
  for (std::size_t i = 0; i < n; ++i) {
    for (double& v : z) v = rng.normal();
    auto row = out.row(i);
    for (std::size_t a = 0; a < p; ++a) {
      row[a] = kernels::dot(lower.row(a).first(a + 1), std::span<const double>(z).first(a + 1));
    }
  }
  return out;
}

Matrix mvn_toeplitz(RngStream& rng, std::size_t n, const Matrix& cov) {
  return mvn_from_cholesky(rng, n, linalg::cholesky(cov));
}

}  // namespace tfarm
