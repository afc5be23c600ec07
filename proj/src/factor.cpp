#include "tfarm/factor.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tfarm/errors.hpp"
#include "tfarm/kernels.hpp"
#include "tfarm/linalg.hpp"
#include "tfarm/sym_eig.hpp"

namespace tfarm {

std::size_t default_max_rank(std::size_t n, std::size_t p) noexcept {
  std::size_t k = std::min<std::size_t>(n / 2, 15);
  const std::size_t nonzero = std::min(n, p);
  if (nonzero >= 2) k = std::min(k, nonzero - 1);
  return std::max<std::size_t>(k, 1);
}

std::size_t select_rank(std::span<const double> gram_eigenvalues, std::size_t max_rank) {
  if (max_rank < 1) throw InvalidArgument("select_rank: max_rank must be at least 1");
  if (max_rank + 1 > gram_eigenvalues.size()) {
    throw InvalidArgument("select_rank: max_rank " + std::to_string(max_rank) + " needs " +
                          std::to_string(max_rank + 1) + " eigenvalues, got " +
                          std::to_string(gram_eigenvalues.size()));
  }
  const double lead = gram_eigenvalues[0];
  if (!(lead > 0.0)) throw InvalidArgument("select_rank: leading eigenvalue must be positive");
  const double floor = 1e-12 * lead;
  auto at = [&](std::size_t i) { return std::max(gram_eigenvalues[i], floor); };
  std::size_t best = 1;
  double best_ratio = at(0) / at(1);
  for (std::size_t i = 2; i <= max_rank; ++i) {
    const double ratio = at(i - 1) / at(i);
    if (ratio > best_ratio) {
      best_ratio = ratio;
      best = i;
    }
  }
  return best;
}

namespace {

// Removes column 0 from x.
Matrix drop_first_column(const Matrix& x) {
  Matrix out(x.rows(), x.cols() - 1);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto src = x.row(i).subspan(1);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

FactorDecomposition decompose_plain(const Matrix& x, const RankSpec& spec) {
  const std::size_t n = x.rows();
  const std::size_t p = x.cols();
  FactorDecomposition d;
  if (spec.fixed && *spec.fixed == 0) {
    d.factors = Matrix(n, 0);
    d.loadings = Matrix(p, 0);
    d.idiosyncratic = x;
    return d;
  }

  const SymEigResult eig = sym_eig(linalg::gram_rows(x));
  d.gram_eigenvalues = eig.values;
  std::size_t r = 0;
  if (spec.fixed) {
    r = *spec.fixed;
  } else {
    const std::size_t bound = spec.max_rank > 0 ? spec.max_rank : default_max_rank(n, p);
    r = select_rank(eig.values, bound);
  }
  d.rank = r;

  const double sqrt_n = std::sqrt(static_cast<double>(n));
  d.factors = Matrix(n, r);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < r; ++c) d.factors(i, c) = sqrt_n * eig.vectors(i, c);

  // B = X^T F / n, stored p x r.
  d.loadings = linalg::multiply_at_b(x, d.factors);
  kernels::scale(1.0 / static_cast<double>(n), d.loadings.values());

  // U = X - F B^T
  d.idiosyncratic = x;
  for (std::size_t i = 0; i < n; ++i) {
    auto ui = d.idiosyncratic.row(i);
    for (std::size_t c = 0; c < r; ++c) {
      const double f = d.factors(i, c);
      if (f == 0.0) continue;
      for (std::size_t j = 0; j < p; ++j) ui[j] -= f * d.loadings(j, c);
    }
  }
  return d;
}

}  // namespace

FactorDecomposition decompose(const Matrix& x, const RankSpec& rank, bool intercept) {
  const std::size_t n = x.rows();
  const std::size_t p = x.cols();
  if (n < 2) throw InvalidArgument("decompose: need at least 2 rows, got " + std::to_string(n));
  if (p < 1) throw InvalidArgument("decompose: design has no columns");
  linalg::require_finite(x, "decompose");
  const std::size_t usable = intercept ? p - 1 : p;
  if (rank.fixed && *rank.fixed > std::min(n, usable)) {
    throw InvalidArgument("decompose: rank " + std::to_string(*rank.fixed) +
                          " exceeds min(n, p) = " + std::to_string(std::min(n, usable)));
  }
  if (!intercept) return decompose_plain(x, rank);

  for (std::size_t i = 0; i < n; ++i) {
    if (x(i, 0) != 1.0) {
      throw InvalidArgument("decompose: intercept requested but column 1 is not constant one (row " +
                            std::to_string(i + 1) + ")");
    }
  }
  if (usable == 0) throw InvalidArgument("decompose: intercept-only design");
  FactorDecomposition inner = decompose_plain(drop_first_column(x), rank);

  FactorDecomposition d;
  d.rank = inner.rank;
  d.intercept = true;
  d.gram_eigenvalues = std::move(inner.gram_eigenvalues);
  d.factors = std::move(inner.factors);
  d.loadings = Matrix(p, d.rank);
  for (std::size_t j = 1; j < p; ++j)
    for (std::size_t c = 0; c < d.rank; ++c) d.loadings(j, c) = inner.loadings(j - 1, c);
  d.idiosyncratic = Matrix(n, p);
  for (std::size_t i = 0; i < n; ++i) {
    d.idiosyncratic(i, 0) = 1.0;
    const auto src = inner.idiosyncratic.row(i);
    std::copy(src.begin(), src.end(), d.idiosyncratic.row(i).begin() + 1);
  }
  return d;
}

Vector gamma_hat(std::span<const double> y, const FactorDecomposition& decomp) {
  if (y.size() != decomp.rows()) {
    throw InvalidArgument("gamma_hat: response length " + std::to_string(y.size()) +
                          " does not match " + std::to_string(decomp.rows()) + " rows");
  }
  Vector g = linalg::matvec_t(decomp.factors, y);
  kernels::scale(1.0 / static_cast<double>(decomp.rows()), g);
  return g;
}

Vector residualize(std::span<const double> y, const FactorDecomposition& decomp) {
  if (y.size() != decomp.rows()) {
    throw InvalidArgument("residualize: response length " + std::to_string(y.size()) +
                          " does not match " + std::to_string(decomp.rows()) + " rows");
  }
  Vector out(y.begin(), y.end());
  if (decomp.rank == 0) return out;
  const Vector g = gamma_hat(y, decomp);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= kernels::dot(decomp.factors.row(i), g);
  return out;
}

}  // namespace tfarm
