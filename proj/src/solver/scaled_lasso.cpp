#include <cmath>
#include <limits>
#include <sstream>

#include "tfarm/errors.hpp"
#include "tfarm/kernels.hpp"
#include "tfarm/linalg.hpp"
#include "tfarm/solver.hpp"

namespace tfarm {

ScaledLassoResult scaled_lasso(const Matrix& z, std::span<const double> r, double lambda0,
                               const LassoOptions& options) {
  const std::size_t n = z.rows();
  const std::size_t p = z.cols();
  if (n < 2) throw InvalidArgument("scaled_lasso: need at least 2 rows");
  if (r.size() != n) throw InvalidArgument("scaled_lasso: response length does not match design");
  if (lambda0 <= 0.0) {
    lambda0 = std::sqrt(2.0 * std::log(static_cast<double>(std::max<std::size_t>(p, 2))) /
                        static_cast<double>(n));
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  const double sigma_init = std::sqrt(kernels::sum_squares(r) * inv_n);
  if (!(sigma_init > 0.0)) throw NumericalError("scaled_lasso: zero-variance response");

  LassoOptions inner = options;
  inner.tol = options.tol * sigma_init;
  inner.track_objective = false;

  LassoProblem problem{{LassoBlock{z, r}}, 0.0, {}};
  ScaledLassoResult out;
  Vector beta(p, 0.0);
  double sigma = sigma_init;
  constexpr std::size_t kMaxAlternations = 100;
  for (std::size_t it = 1; it <= kMaxAlternations; ++it) {
    problem.lambda = sigma * lambda0;
    LassoSolution sol = lasso_fit(problem, inner, beta);
    if (!sol.converged) {
      std::ostringstream msg;
      msg << "scaled_lasso: inner Lasso did not converge (kkt violation " << sol.kkt_violation << ")";
      throw NumericalError(msg.str());
    }
    beta = std::move(sol.coefficients);
    const Vector fitted = linalg::matvec(z, beta);
    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) rss += (r[i] - fitted[i]) * (r[i] - fitted[i]);
    const double next = std::sqrt(rss * inv_n);
    const bool settled = std::fabs(next - sigma) < 1e-6 * sigma;
    // A response the design reproduces exactly drives sigma geometrically to zero.
    const bool vanished = next < 1e-9 * sigma_init;
    sigma = next;
    if (settled || vanished) {
      out.coefficients = std::move(beta);
      out.sigma = std::max(sigma, std::numeric_limits<double>::min());
      out.alternations = it;
      return out;
    }
  }
  std::ostringstream msg;
  msg << "scaled_lasso: sigma did not settle after " << kMaxAlternations
      << " alternations (last value " << sigma << ")";
  throw NumericalError(msg.str());
}

}  // namespace tfarm
