#pragma once
// Penalised least squares.
//
// lasso_fit minimises over delta
//   (1 / 2N) * sum_k || r_k - Z_k (offset + delta) ||^2 + lambda * ||delta||_1,
// N = sum_k n_k, by cyclic coordinate descent on the vertically stacked blocks.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "tfarm/matrix.hpp"

namespace tfarm {

/// One (design, response) pair. Non-owning: both must outlive the problem.
struct LassoBlock {
  std::reference_wrapper<const Matrix> design;
  std::span<const double> response;
};

struct LassoProblem {
  std::vector<LassoBlock> blocks;
  double lambda = 0.0;
  /// Fixed part of the coefficient vector; empty means zero.
  Vector offset;

  std::size_t cols() const noexcept;
  std::size_t pooled_rows() const noexcept;
};

struct LassoOptions {
  /// Bound on both the largest coordinate change of the last sweep and the KKT violation.
  double tol = 1e-8;
  /// Cap on coordinate sweeps (full and active-set sweeps both count).
  std::size_t max_iter = 100000;
  /// Record the objective after every sweep in LassoSolution::sweep_objectives.
  bool track_objective = false;
};

struct LassoSolution {
  Vector coefficients;
  double objective = 0.0;
  std::size_t iterations = 0;
  /// max_j of |c_j - lambda sign(delta_j)| (active) or (|c_j| - lambda)_+ (inactive),
  /// c = (1/N) sum_k Z_k^T residual_k.
  double kkt_violation = 0.0;
  bool converged = false;
  std::vector<double> sweep_objectives;
};

/// Returns the last iterate with converged = false when max_iter sweeps pass
/// without meeting tol. Throws InvalidArgument on inconsistent shapes.
LassoSolution lasso_fit(const LassoProblem& problem, const LassoOptions& options = {},
                        std::span<const double> warm_start = {});

double lasso_objective(const LassoProblem& problem, std::span<const double> coefficients);

/// ||(1/N) sum_k Z_k^T (r_k - Z_k offset)||_inf: the smallest lambda giving delta = 0.
double lambda_max(const LassoProblem& problem);

/// c * sigma * sqrt(2 log p / n).
double penalty_level(double c, double sigma, std::size_t p, std::size_t n);

struct LassoCvOptions {
  std::size_t grid = 30;
  std::size_t folds = 5;
  /// Smallest grid value as a fraction of lambda_max.
  double min_ratio = 1e-3;
  std::uint64_t seed = 0;
};

struct LassoCvResult {
  /// Log-spaced, descending from lambda_max.
  Vector lambdas;
  /// Mean held-out squared residual per grid point, and its standard error over folds.
  Vector cv_error;
  Vector cv_se;
  std::size_t best = 0;
  double lambda = 0.0;
};

/// K-fold cross-validation of lambda over the pooled rows (problem.lambda is
/// ignored). Each fold walks the grid with warm starts; the minimiser of the
/// mean error wins, the larger lambda on ties.
LassoCvResult lasso_cv(const LassoProblem& problem, const LassoCvOptions& cv = {},
                       const LassoOptions& options = {});

struct ScaledLassoResult {
  Vector coefficients;
  double sigma = 0.0;
  std::size_t alternations = 0;
};

/// Joint estimate of coefficients and noise level: alternate a Lasso fit with
/// penalty sigma * lambda0 and sigma^2 = ||r - Z beta||^2 / n until sigma moves
/// by less than 1e-6 relative. lambda0 <= 0 selects sqrt(2 log p / n).
/// The inner tolerance is options.tol times the root mean square of r.
ScaledLassoResult scaled_lasso(const Matrix& z, std::span<const double> r, double lambda0 = 0.0,
                               const LassoOptions& options = {});

struct PrecisionEstimate {
  Matrix theta;  // p x p
  Vector lambdas;
  Vector tau2;
};

/// Penalty for the nodewise regressions: a common value, one per column, or
/// (both empty) the automatic rule c * (||u_j|| / sqrt(n)) * sqrt(log p / n).
struct NodewisePenalty {
  std::optional<double> common;
  Vector per_row;
  double c = 0.5;

  static NodewisePenalty fixed(double lambda) { return {lambda, {}, 0.5}; }
  static NodewisePenalty automatic(double c = 0.5) { return {std::nullopt, {}, c}; }
};

/// Row j of theta is omega_j / tau_j^2 where omega_j has 1 at j and -gamma_j
/// elsewhere, gamma_j the Lasso coefficients of column j on the others and
/// tau_j^2 = u_j^T (u_j - U_{-j} gamma_j) / n. Rows are solved in parallel.
/// Throws NumericalError naming the column when some tau_j^2 <= 1e-12.
PrecisionEstimate nodewise_precision(const Matrix& u, const NodewisePenalty& penalty,
                                     const LassoOptions& options = {}, std::size_t threads = 1);

}  // namespace tfarm
