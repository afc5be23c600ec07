#pragma once
// Seedable, splittable random streams.
//
// A stream is identified by (seed, index). Its engine is seeded from a
// SplitMix64 mix of both, so streams with different indices share no state and
// any stream can spawn further sub-streams deterministically. Replication r of
// a Monte-Carlo run owns RngStream(base_seed, r).

#include <cstdint>
#include <random>

#include "tfarm/matrix.hpp"

namespace tfarm {

/// SplitMix64 finaliser; also used to derive sub-stream seeds.
std::uint64_t splitmix64(std::uint64_t x) noexcept;

class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t index);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t index() const noexcept { return index_; }

  /// Child stream i. Depends only on (seed, index, i), never on draws taken so far.
  RngStream substream(std::uint64_t i) const;

  double normal();
  double uniform(double lo, double hi);
  /// +1 or -1 with equal probability.
  double rademacher();
  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::uint64_t seed_;
  std::uint64_t index_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/// rows x cols matrix of i.i.d. N(0, 1) draws, filled row by row.
Matrix standard_normal_matrix(RngStream& rng, std::size_t rows, std::size_t cols);

/// n rows drawn i.i.d. from N(0, cov) as L z with L the Cholesky factor of cov.
/// Throws NumericalError if cov is not positive definite.
Matrix mvn_toeplitz(RngStream& rng, std::size_t n, const Matrix& cov);

/// Same as mvn_toeplitz with a precomputed lower Cholesky factor.
Matrix mvn_from_cholesky(RngStream& rng, std::size_t n, const Matrix& lower);

}  // namespace tfarm
