#include <algorithm>
#include <cmath>
#include <string>

#include "tfarm/errors.hpp"
#include "tfarm/kernels.hpp"
#include "tfarm/linalg.hpp"
#include "tfarm/solver.hpp"

namespace tfarm {

std::size_t LassoProblem::cols() const noexcept {
  return blocks.empty() ? 0 : blocks.front().design.get().cols();
}

std::size_t LassoProblem::pooled_rows() const noexcept {
  std::size_t n = 0;
  for (const auto& b : blocks) n += b.design.get().rows();
  return n;
}

double penalty_level(double c, double sigma, std::size_t p, std::size_t n) {
  if (n == 0) throw InvalidArgument("penalty_level: zero sample size");
  return c * sigma * std::sqrt(2.0 * std::log(static_cast<double>(p)) / static_cast<double>(n));
}

namespace {

void validate(const LassoProblem& problem) {
  if (problem.blocks.empty()) throw InvalidArgument("lasso: no design blocks");
  const std::size_t p = problem.cols();
  for (std::size_t k = 0; k < problem.blocks.size(); ++k) {
    const Matrix& z = problem.blocks[k].design.get();
    if (z.cols() != p) {
      throw InvalidArgument("lasso: block " + std::to_string(k) + " has " +
                            std::to_string(z.cols()) + " columns, expected " + std::to_string(p));
    }
    if (z.rows() != problem.blocks[k].response.size()) {
      throw InvalidArgument("lasso: block " + std::to_string(k) + " has " +
                            std::to_string(z.rows()) + " rows but response length " +
                            std::to_string(problem.blocks[k].response.size()));
    }
    linalg::require_finite(problem.blocks[k].response, "lasso response");
  }
  if (problem.pooled_rows() == 0) throw InvalidArgument("lasso: pooled sample size is zero");
  if (!(problem.lambda >= 0.0) || !std::isfinite(problem.lambda)) {
    throw InvalidArgument("lasso: lambda must be finite and non-negative");
  }
  if (!problem.offset.empty() && problem.offset.size() != p) {
    throw InvalidArgument("lasso: offset length " + std::to_string(problem.offset.size()) +
                          " does not match " + std::to_string(p) + " columns");
  }
}

// Stacked design in column-major form (row j of `zt` is column j over all
// blocks) with the matching working residual.
class StackedDesign {
 public:
  explicit StackedDesign(const LassoProblem& problem)
      : p_(problem.cols()), n_(problem.pooled_rows()), zt_(p_, n_), target_(n_) {
    std::size_t base = 0;
    for (const auto& block : problem.blocks) {
      const Matrix& z = block.design.get();
      for (std::size_t i = 0; i < z.rows(); ++i) {
        const auto zi = z.row(i);
        for (std::size_t j = 0; j < p_; ++j) zt_(j, base + i) = zi[j];
        double fitted_offset = 0.0;
        if (!problem.offset.empty()) fitted_offset = kernels::dot(zi, problem.offset);
        target_[base + i] = block.response[i] - fitted_offset;
      }
      base += z.rows();
    }
    inv_n_ = 1.0 / static_cast<double>(n_);
    col_sq_.resize(p_);
    for (std::size_t j = 0; j < p_; ++j) col_sq_[j] = kernels::sum_squares(zt_.row(j)) * inv_n_;
  }

  std::size_t p() const noexcept { return p_; }
  double inv_n() const noexcept { return inv_n_; }
  std::span<const double> column(std::size_t j) const noexcept { return zt_.row(j); }
  double col_sq(std::size_t j) const noexcept { return col_sq_[j]; }
  const Vector& target() const noexcept { return target_; }

  Vector residual(std::span<const double> coef) const {
    Vector res = target_;
    for (std::size_t j = 0; j < p_; ++j)
      if (coef[j] != 0.0) kernels::axpy(-coef[j], column(j), res);
    return res;
  }

 private:
  std::size_t p_;
  std::size_t n_;
  Matrix zt_;
  Vector target_;
  Vector col_sq_;
  double inv_n_ = 0.0;
};

double soft_threshold(double x, double t) noexcept {
  if (x > t) return x - t;
  if (x < -t) return x + t;
  return 0.0;
}

double objective_of(const StackedDesign& d, const Vector& res, const Vector& coef, double lambda) {
  return 0.5 * kernels::sum_squares(res) * d.inv_n() + lambda * linalg::norm1(coef);
}

double kkt_violation(const StackedDesign& d, const Vector& res, const Vector& coef,
                     double lambda) {
  double worst = 0.0;
  for (std::size_t j = 0; j < d.p(); ++j) {
    const double corr = kernels::dot(d.column(j), res) * d.inv_n();
    double v = 0.0;
    if (coef[j] > 0.0) {
      v = std::fabs(corr - lambda);
    } else if (coef[j] < 0.0) {
      v = std::fabs(corr + lambda);
    } else {
      v = std::max(0.0, std::fabs(corr) - lambda);
    }
    worst = std::max(worst, v);
  }
  return worst;
}

// One coordinate update; returns |change|.
double update(const StackedDesign& d, Vector& res, Vector& coef, std::size_t j, double lambda) {
  const double cj = d.col_sq(j);
  if (cj == 0.0) return 0.0;
  const auto zj = d.column(j);
  const double old = coef[j];
  const double rho = kernels::dot(zj, res) * d.inv_n() + cj * old;
  const double next = soft_threshold(rho, lambda) / cj;
  const double diff = next - old;
  if (diff != 0.0) {
    kernels::axpy(-diff, zj, res);
    coef[j] = next;
  }
  return std::fabs(diff);
}

}  // namespace

double lasso_objective(const LassoProblem& problem, std::span<const double> coefficients) {
  validate(problem);
  if (coefficients.size() != problem.cols()) throw InvalidArgument("lasso_objective: length mismatch");
  const StackedDesign d(problem);
  const Vector coef(coefficients.begin(), coefficients.end());
  return objective_of(d, d.residual(coef), coef, problem.lambda);
}

double lambda_max(const LassoProblem& problem) {
  validate(problem);
  const StackedDesign d(problem);
  double m = 0.0;
  for (std::size_t j = 0; j < d.p(); ++j)
    m = std::max(m, std::fabs(kernels::dot(d.column(j), d.target()) * d.inv_n()));
  return m;
}

LassoSolution lasso_fit(const LassoProblem& problem, const LassoOptions& options,
                        std::span<const double> warm_start) {
  validate(problem);
  if (!(options.tol > 0.0)) throw InvalidArgument("lasso: tol must be positive");
  const std::size_t p = problem.cols();
  if (!warm_start.empty() && warm_start.size() != p) {
    throw InvalidArgument("lasso: warm start length " + std::to_string(warm_start.size()) +
                          " does not match " + std::to_string(p) + " columns");
  }
  const StackedDesign d(problem);
  const double lambda = problem.lambda;

  LassoSolution sol;
  Vector& coef = sol.coefficients;
  coef = warm_start.empty() ? Vector(p, 0.0) : Vector(warm_start.begin(), warm_start.end());
  Vector res = d.residual(coef);

  auto record = [&] {
    if (options.track_objective) sol.sweep_objectives.push_back(objective_of(d, res, coef, lambda));
  };
  if (options.track_objective) sol.sweep_objectives.push_back(objective_of(d, res, coef, lambda));

  std::vector<std::size_t> active;
  active.reserve(p);
  while (sol.iterations < options.max_iter) {
    double change = 0.0;
    for (std::size_t j = 0; j < p; ++j) change = std::max(change, update(d, res, coef, j, lambda));
    ++sol.iterations;
    record();
    if (change < options.tol) {
      sol.kkt_violation = kkt_violation(d, res, coef, lambda);
      if (sol.kkt_violation <= options.tol) {
        sol.converged = true;
        break;
      }
      continue;
    }
    // Cycle over the current support until it settles, then re-check all coordinates.
    active.clear();
    for (std::size_t j = 0; j < p; ++j)
      if (coef[j] != 0.0) active.push_back(j);
    while (sol.iterations < options.max_iter) {
      double inner = 0.0;
      for (std::size_t j : active) inner = std::max(inner, update(d, res, coef, j, lambda));
      ++sol.iterations;
      record();
      if (inner < options.tol) break;
    }
  }
  if (!sol.converged) sol.kkt_violation = kkt_violation(d, res, coef, lambda);
  sol.objective = objective_of(d, res, coef, lambda);
  return sol;
}

}  // namespace tfarm
