#include "tfarm/inference.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "tfarm/errors.hpp"
#include "tfarm/kernels.hpp"
#include "tfarm/linalg.hpp"
#include "tfarm/parallel.hpp"

namespace tfarm {
namespace {

std::vector<std::size_t> resolve_group(std::span<const std::size_t> group, std::size_t p) {
  std::vector<std::size_t> g;
  if (group.empty()) {
    g.resize(p);
    std::iota(g.begin(), g.end(), std::size_t{0});
    return g;
  }
  g.assign(group.begin(), group.end());
  std::sort(g.begin(), g.end());
  g.erase(std::unique(g.begin(), g.end()), g.end());
  if (g.back() >= p) {
    throw InvalidArgument("group index " + std::to_string(g.back()) + " outside 0.." +
                          std::to_string(p - 1));
  }
  return g;
}

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("alpha must lie in (0, 1)");
}

InferenceResult base_result(const InferenceInputs& in, double alpha, std::size_t b) {
  InferenceResult res;
  res.beta_tilde = debias(in.beta_hat, *in.target_decomp, in.y_tilde, in.theta);
  res.theta = in.theta;
  res.sigma_hat = in.sigma_hat;
  res.alpha = alpha;
  res.bootstrap_draws = b;
  res.n0 = in.n();
  return res;
}

}  // namespace

InferenceInputs make_inference_inputs(const TransferFit& fit, const PreparedDataset& target,
                                      double node_c, const LassoOptions& lasso,
                                      std::size_t threads) {
  InferenceInputs in;
  in.beta_hat = fit.beta_hat;
  in.target_decomp = target.decomp;
  in.y_tilde = target.y_tilde;
  in.theta = nodewise_precision(target.u(), NodewisePenalty::automatic(node_c), lasso, threads);
  in.sigma_hat = fit.sigma_hat;
  return in;
}

Vector debias(std::span<const double> beta_hat, const FactorDecomposition& target_decomp,
              std::span<const double> y_tilde, const PrecisionEstimate& theta) {
  const Matrix& u = target_decomp.idiosyncratic;
  const std::size_t n = u.rows();
  const std::size_t p = u.cols();
  if (beta_hat.size() != p || y_tilde.size() != n || theta.theta.rows() != p ||
      theta.theta.cols() != p) {
    throw InvalidArgument("debias: dimension mismatch");
  }
  Vector resid(y_tilde.begin(), y_tilde.end());
  for (std::size_t i = 0; i < n; ++i) resid[i] -= kernels::dot(u.row(i), beta_hat);
  Vector score = linalg::matvec_t(u, resid);
  kernels::scale(1.0 / static_cast<double>(n), score);
  const Vector correction = linalg::matvec(theta.theta, score);
  Vector out(beta_hat.begin(), beta_hat.end());
  for (std::size_t j = 0; j < p; ++j) out[j] += correction[j];
  return out;
}

Vector debias(const TransferFit& fit, const FactorDecomposition& target_decomp,
              std::span<const double> y_tilde, const PrecisionEstimate& theta) {
  return debias(fit.beta_hat, target_decomp, y_tilde, theta);
}

Vector multiplier_bootstrap(const Matrix& u_hat, const PrecisionEstimate& theta, double sigma_hat,
                            std::span<const std::size_t> group, std::size_t b, bool studentized,
                            const RngStream& rng, std::size_t threads) {
  const std::size_t n = u_hat.rows();
  const std::size_t p = u_hat.cols();
  if (b < 1) throw InvalidArgument("multiplier_bootstrap: need at least one draw");
  if (group.empty()) throw InvalidArgument("multiplier_bootstrap: empty group");
  if (!(sigma_hat > 0.0)) throw InvalidArgument("multiplier_bootstrap: sigma_hat must be positive");
  if (theta.theta.rows() != p || theta.theta.cols() != p) {
    throw InvalidArgument("multiplier_bootstrap: theta does not match the design");
  }
  for (std::size_t j : group)
    if (j >= p) throw InvalidArgument("multiplier_bootstrap: group index out of range");

  Vector inv_sd(p, 1.0);
  if (studentized) {
    for (std::size_t j : group) {
      const double d = theta.theta(j, j);
      if (!(d > 0.0)) {
        throw NumericalError("multiplier_bootstrap: Theta(" + std::to_string(j) + ", " +
                             std::to_string(j) + ") is not positive");
      }
      inv_sd[j] = 1.0 / std::sqrt(d);
    }
  }

  const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(n));
  Vector draws(b, 0.0);
  parallel_for(b, threads, [&](std::size_t l) {
    RngStream local = rng.substream(l);
    Vector score(p, 0.0);
    for (std::size_t i = 0; i < n; ++i) kernels::axpy(local.normal(), u_hat.row(i), score);
    kernels::scale(inv_sqrt_n, score);
    double m = 0.0;
    for (std::size_t j : group) {
      const double q = sigma_hat * kernels::dot(theta.theta.row(j), score) * inv_sd[j];
      m = std::max(m, std::fabs(q));
    }
    draws[l] = m;
  });
  return draws;
}

double quantile(std::span<const double> draws, double level) {
  if (draws.empty()) throw InvalidArgument("quantile: no draws");
  if (!(level > 0.0 && level < 1.0)) throw InvalidArgument("quantile: level must lie in (0, 1)");
  std::vector<double> sorted(draws.begin(), draws.end());
  std::sort(sorted.begin(), sorted.end());
  const double b = static_cast<double>(sorted.size());
  // Guard against B * level landing a rounding error above an integer.
  std::size_t k = static_cast<std::size_t>(std::ceil(b * level - 1e-9));
  k = std::clamp<std::size_t>(k, 1, sorted.size());
  return sorted[k - 1];
}

InferenceResult adequacy_test(const InferenceInputs& inputs, double alpha, std::size_t b,
                              const RngStream& rng, std::size_t threads) {
  check_alpha(alpha);
  InferenceResult res = base_result(inputs, alpha, b);
  const auto all = resolve_group({}, inputs.beta_hat.size());
  const Vector draws =
      multiplier_bootstrap(inputs.u(), inputs.theta, inputs.sigma_hat, all, b, false, rng, threads);
  res.has_test = true;
  res.test_critical = quantile(draws, 1.0 - alpha);
  res.statistic = std::sqrt(static_cast<double>(inputs.n())) * linalg::norm_inf(res.beta_tilde);
  res.reject = res.statistic > res.test_critical;
  return res;
}

InferenceResult simultaneous_cis(const InferenceInputs& inputs, std::span<const std::size_t> group,
                                 double alpha, bool studentized, std::size_t b,
                                 const RngStream& rng, std::size_t threads) {
  check_alpha(alpha);
  InferenceResult res = base_result(inputs, alpha, b);
  res.group = resolve_group(group, inputs.beta_hat.size());
  res.studentized = studentized;
  const Vector draws = multiplier_bootstrap(inputs.u(), inputs.theta, inputs.sigma_hat, res.group,
                                            b, studentized, rng, threads);
  res.interval_critical = quantile(draws, 1.0 - alpha);
  const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(inputs.n()));
  for (std::size_t i : res.group) {
    const double scale = studentized ? std::sqrt(inputs.theta.theta(i, i)) : 1.0;
    const double half = inv_sqrt_n * scale * res.interval_critical;
    res.intervals.push_back({i, res.beta_tilde[i] - half, res.beta_tilde[i] + half});
  }
  return res;
}

InferenceResult infer(const TransferFit& fit, const PreparedDataset& target,
                      const InferenceConfig& config) {
  const InferenceInputs inputs =
      make_inference_inputs(fit, target, config.node_c, config.lasso, config.threads);
  const RngStream root(config.seed, 0);
  InferenceResult test = adequacy_test(inputs, config.alpha, config.bootstrap, root.substream(0),
                                       config.threads);
  InferenceResult out = simultaneous_cis(inputs, config.group, config.alpha, config.studentized,
                                         config.bootstrap, root.substream(1), config.threads);
  out.has_test = true;
  out.statistic = test.statistic;
  out.test_critical = test.test_critical;
  out.reject = test.reject;
  return out;
}

}  // namespace tfarm
