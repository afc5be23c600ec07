#include <cmath>
#include <sstream>

#include "tfarm/errors.hpp"
#include "tfarm/kernels.hpp"
#include "tfarm/linalg.hpp"
#include "tfarm/parallel.hpp"
#include "tfarm/solver.hpp"

namespace tfarm {
namespace {

Matrix without_column(const Matrix& u, std::size_t drop) {
  Matrix out(u.rows(), u.cols() - 1);
  for (std::size_t i = 0; i < u.rows(); ++i) {
    const auto src = u.row(i);
    auto dst = out.row(i);
    std::copy(src.begin(), src.begin() + static_cast<std::ptrdiff_t>(drop), dst.begin());
    std::copy(src.begin() + static_cast<std::ptrdiff_t>(drop) + 1, src.end(),
              dst.begin() + static_cast<std::ptrdiff_t>(drop));
  }
  return out;
}

}  // namespace

PrecisionEstimate nodewise_precision(const Matrix& u, const NodewisePenalty& penalty,
                                     const LassoOptions& options, std::size_t threads) {
  const std::size_t n = u.rows();
  const std::size_t p = u.cols();
  if (n < 2 || p < 2) throw InvalidArgument("nodewise_precision: need n >= 2 and p >= 2");
  if (!penalty.per_row.empty() && penalty.per_row.size() != p) {
    throw InvalidArgument("nodewise_precision: per-row penalties must have length p");
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  const double rate = std::sqrt(std::log(static_cast<double>(p)) * inv_n);

  PrecisionEstimate est;
  est.theta = Matrix(p, p);
  est.lambdas.assign(p, 0.0);
  est.tau2.assign(p, 0.0);
  std::vector<Vector> gammas(p);
  std::vector<LassoSolution> failures(p);
  std::vector<char> failed(p, 0);

  parallel_for(p, threads, [&](std::size_t j) {
    const Vector uj = u.column(j);
    double lambda = 0.0;
    if (penalty.common) {
      lambda = *penalty.common;
    } else if (!penalty.per_row.empty()) {
      lambda = penalty.per_row[j];
    } else {
      lambda = penalty.c * std::sqrt(kernels::sum_squares(uj) * inv_n) * rate;
    }
    const Matrix rest = without_column(u, j);
    LassoProblem problem{{LassoBlock{rest, uj}}, lambda, {}};
    LassoSolution sol = lasso_fit(problem, options);
    if (!sol.converged) {
      failed[j] = 1;
      failures[j] = std::move(sol);
      return;
    }
    const Vector fitted = linalg::matvec(rest, sol.coefficients);
    double t2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) t2 += uj[i] * (uj[i] - fitted[i]);
    est.tau2[j] = t2 * inv_n;
    est.lambdas[j] = lambda;
    gammas[j] = std::move(sol.coefficients);
  });

  for (std::size_t j = 0; j < p; ++j) {
    if (failed[j]) {
      std::ostringstream msg;
      msg << "nodewise_precision: regression for column " << j + 1
          << " did not converge (kkt violation " << failures[j].kkt_violation << ")";
      throw NumericalError(msg.str());
    }
    if (!(est.tau2[j] > 1e-12)) {
      std::ostringstream msg;
      msg << "nodewise_precision: degenerate column " << j + 1 << " (tau^2 = " << est.tau2[j] << ")";
      throw NumericalError(msg.str());
    }
    const double inv_tau2 = 1.0 / est.tau2[j];
    auto row = est.theta.row(j);
    for (std::size_t k = 0, g = 0; k < p; ++k) {
      row[k] = k == j ? inv_tau2 : -gammas[j][g++] * inv_tau2;
    }
  }
  return est;
}

}  // namespace tfarm
