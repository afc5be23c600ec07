#pragma once
// Latent factor extraction by principal components of the n x n Gram matrix.
//
// For a design X (n x p) with r factors the estimates are
//   F = sqrt(n) * (top-r eigenvectors of X X^T)    (n x r, F^T F / n = I)
//   B = X^T F / n                                   (p x r)
//   U = (I - F F^T / n) X                           (n x p)
// so that X = F B^T + U and U^T F = 0.

#include <cstddef>
#include <optional>
#include <span>

#include "tfarm/matrix.hpp"

namespace tfarm {

struct FactorDecomposition {
  std::size_t rank = 0;
  Matrix factors;        // n x rank
  Matrix loadings;       // p x rank
  Matrix idiosyncratic;  // n x p
  /// Eigenvalues of X X^T, descending. Empty when rank was fixed to 0.
  Vector gram_eigenvalues;
  bool intercept = false;

  std::size_t rows() const noexcept { return idiosyncratic.rows(); }
  std::size_t cols() const noexcept { return idiosyncratic.cols(); }
};

/// Either a fixed number of factors or the eigenvalue-ratio estimate with an
/// upper bound (0 selects the default bound).
struct RankSpec {
  std::optional<std::size_t> fixed;
  std::size_t max_rank = 0;

  static RankSpec automatic(std::size_t max_rank = 0) { return {std::nullopt, max_rank}; }
  static RankSpec exactly(std::size_t r) { return {r, 0}; }
};

/// min(floor(n/2), 15), further capped so the ratio never reaches the
/// structurally zero eigenvalues past min(n, p).
std::size_t default_max_rank(std::size_t n, std::size_t p) noexcept;

/// argmax_{1<=i<=max_rank} lambda_i / lambda_{i+1}; the smallest i wins ties.
/// Eigenvalues below 1e-12 * lambda_1 are floored at that value first.
std::size_t select_rank(std::span<const double> gram_eigenvalues, std::size_t max_rank);

/// With `intercept`, column 0 of x must be all ones; factors come from the
/// remaining columns, the loading row of column 0 is zero and the idiosyncratic
/// column 0 stays all ones.
FactorDecomposition decompose(const Matrix& x, const RankSpec& rank = RankSpec::automatic(),
                              bool intercept = false);

/// (I - F F^T / n) y
Vector residualize(std::span<const double> y, const FactorDecomposition& decomp);

/// F^T y / n
Vector gamma_hat(std::span<const double> y, const FactorDecomposition& decomp);

}  // namespace tfarm
