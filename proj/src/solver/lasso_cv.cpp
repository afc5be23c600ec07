#include <algorithm>
#include <cmath>
#include <numeric>

#include "tfarm/errors.hpp"
#include "tfarm/kernels.hpp"
#include "tfarm/linalg.hpp"
#include "tfarm/random.hpp"
#include "tfarm/solver.hpp"

namespace tfarm {

LassoCvResult lasso_cv(const LassoProblem& problem, const LassoCvOptions& cv,
                       const LassoOptions& options) {
  if (cv.grid < 1) throw InvalidArgument("lasso_cv: empty grid");
  if (cv.folds < 2) throw InvalidArgument("lasso_cv: need at least two folds");
  if (!(cv.min_ratio > 0.0 && cv.min_ratio < 1.0)) {
    throw InvalidArgument("lasso_cv: min_ratio must lie in (0, 1)");
  }
  const std::size_t n = problem.pooled_rows();
  const std::size_t p = problem.cols();
  if (n < cv.folds) throw InvalidArgument("lasso_cv: fewer rows than folds");

  LassoCvResult out;
  const double top = lambda_max(problem);
  out.lambdas.resize(cv.grid);
  for (std::size_t g = 0; g < cv.grid; ++g) {
    const double t = cv.grid == 1 ? 0.0 : static_cast<double>(g) / static_cast<double>(cv.grid - 1);
    out.lambdas[g] = top * std::pow(cv.min_ratio, t);
  }

  // Fold of every pooled row.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  RngStream rng(cv.seed, 0x1a55c0);
  std::shuffle(order.begin(), order.end(), rng.engine());
  std::vector<std::size_t> fold_of(n);
  for (std::size_t i = 0; i < n; ++i) fold_of[order[i]] = i % cv.folds;

  std::vector<Vector> errors(cv.folds, Vector(cv.grid, 0.0));
  for (std::size_t f = 0; f < cv.folds; ++f) {
    std::vector<Matrix> train_x;
    std::vector<Vector> train_y;
    std::vector<Matrix> test_x;
    std::vector<Vector> test_y;
    std::size_t base = 0;
    for (const auto& block : problem.blocks) {
      const Matrix& z = block.design.get();
      std::vector<std::size_t> tr;
      std::vector<std::size_t> te;
      for (std::size_t i = 0; i < z.rows(); ++i) (fold_of[base + i] == f ? te : tr).push_back(i);
      base += z.rows();
      if (!tr.empty()) {
        train_x.push_back(linalg::select_rows(z, tr));
        train_y.push_back(linalg::select(block.response, tr));
      }
      if (!te.empty()) {
        test_x.push_back(linalg::select_rows(z, te));
        test_y.push_back(linalg::select(block.response, te));
      }
    }
    LassoProblem train;
    train.offset = problem.offset;
    for (std::size_t b = 0; b < train_x.size(); ++b) train.blocks.push_back({train_x[b], train_y[b]});

    std::size_t n_test = 0;
    for (const auto& y : test_y) n_test += y.size();
    Vector coef(p, 0.0);
    for (std::size_t g = 0; g < cv.grid; ++g) {
      train.lambda = out.lambdas[g];
      coef = lasso_fit(train, options, coef).coefficients;
      Vector full = coef;
      if (!problem.offset.empty())
        for (std::size_t j = 0; j < p; ++j) full[j] += problem.offset[j];
      double ss = 0.0;
      for (std::size_t b = 0; b < test_x.size(); ++b) {
        for (std::size_t i = 0; i < test_y[b].size(); ++i) {
          const double r = test_y[b][i] - kernels::dot(test_x[b].row(i), full);
          ss += r * r;
        }
      }
      errors[f][g] = ss / static_cast<double>(n_test);
    }
  }

  out.cv_error.assign(cv.grid, 0.0);
  out.cv_se.assign(cv.grid, 0.0);
  const double k = static_cast<double>(cv.folds);
  for (std::size_t g = 0; g < cv.grid; ++g) {
    double m = 0.0;
    for (std::size_t f = 0; f < cv.folds; ++f) m += errors[f][g];
    m /= k;
    double ss = 0.0;
    for (std::size_t f = 0; f < cv.folds; ++f) ss += (errors[f][g] - m) * (errors[f][g] - m);
    out.cv_error[g] = m;
    out.cv_se[g] = std::sqrt(ss / (k - 1.0) / k);
  }
  out.best = static_cast<std::size_t>(
      std::min_element(out.cv_error.begin(), out.cv_error.end()) - out.cv_error.begin());
  out.lambda = out.lambdas[out.best];
  return out;
}

}  // namespace tfarm
