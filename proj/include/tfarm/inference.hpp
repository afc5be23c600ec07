#pragma once
// Debiased estimation and multiplier-bootstrap inference on the target.
//
//   beta~ = beta^ + Theta U_0^T (Y~_0 - U_0 beta^) / n_0
//   Q^e   = sigma Theta (1 / sqrt(n_0)) sum_i e_i u_i,      e_i ~ N(0, 1)
//   Q^e_stu = diag(Theta)^{-1/2} Q^e
// Simultaneous intervals over a group G use the (1 - alpha) quantile of
// max_{j in G} |Q^e_j| (or of the studentised version).
// Coordinate indices are 0-based here; the CLI reports them 1-based.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "tfarm/factor.hpp"
#include "tfarm/random.hpp"
#include "tfarm/solver.hpp"
#include "tfarm/transfer.hpp"

namespace tfarm {

/// Everything the bootstrap procedures need from a completed fit.
struct InferenceInputs {
  Vector beta_hat;
  std::shared_ptr<const FactorDecomposition> target_decomp;
  Vector y_tilde;
  PrecisionEstimate theta;
  double sigma_hat = 0.0;

  const Matrix& u() const noexcept { return target_decomp->idiosyncratic; }
  std::size_t n() const noexcept { return y_tilde.size(); }
};

/// Theta from nodewise regression on U_0 (automatic penalty with constant
/// node_c), sigma from the fit.
InferenceInputs make_inference_inputs(const TransferFit& fit, const PreparedDataset& target,
                                      double node_c = 0.5, const LassoOptions& lasso = {},
                                      std::size_t threads = 1);

Vector debias(std::span<const double> beta_hat, const FactorDecomposition& target_decomp,
              std::span<const double> y_tilde, const PrecisionEstimate& theta);
Vector debias(const TransferFit& fit, const FactorDecomposition& target_decomp,
              std::span<const double> y_tilde, const PrecisionEstimate& theta);

/// b draws of max_{j in group} |Q^e_j| (studentised if requested). Draw l uses
/// multipliers from rng.substream(l), so the result does not depend on `threads`.
Vector multiplier_bootstrap(const Matrix& u_hat, const PrecisionEstimate& theta, double sigma_hat,
                            std::span<const std::size_t> group, std::size_t b, bool studentized,
                            const RngStream& rng, std::size_t threads = 1);

/// Smallest draw t with empirical CDF(t) >= level: the ceil(B * level)-th order statistic.
double quantile(std::span<const double> draws, double level);

struct ConfidenceInterval {
  std::size_t index = 0;
  double lo = 0.0;
  double hi = 0.0;
};

struct InferenceResult {
  Vector beta_tilde;
  PrecisionEstimate theta;
  double sigma_hat = 0.0;
  double alpha = 0.05;
  std::size_t bootstrap_draws = 0;
  std::size_t n0 = 0;

  // Simultaneous intervals.
  std::vector<std::size_t> group;
  bool studentized = false;
  double interval_critical = 0.0;
  std::vector<ConfidenceInterval> intervals;

  // Adequacy test of H0: beta = 0.
  bool has_test = false;
  double statistic = 0.0;
  double test_critical = 0.0;
  bool reject = false;
};

/// Non-studentised bootstrap over all coordinates; rejects when
/// sqrt(n_0) ||beta~||_inf exceeds the (1 - alpha) quantile.
InferenceResult adequacy_test(const InferenceInputs& inputs, double alpha, std::size_t b,
                              const RngStream& rng, std::size_t threads = 1);

/// Intervals beta~_i -/+ n_0^{-1/2} c (non-studentised) or
/// beta~_i -/+ n_0^{-1/2} sqrt(Theta_ii) c_stu (studentised), i in group.
/// An empty group means all coordinates.
InferenceResult simultaneous_cis(const InferenceInputs& inputs, std::span<const std::size_t> group,
                                 double alpha, bool studentized, std::size_t b,
                                 const RngStream& rng, std::size_t threads = 1);

struct InferenceConfig {
  double alpha = 0.05;
  std::size_t bootstrap = 500;
  bool studentized = true;
  /// 0-based; empty means all coordinates.
  std::vector<std::size_t> group;
  double node_c = 0.5;
  std::uint64_t seed = 0;
  LassoOptions lasso;
  std::size_t threads = 1;
};

/// Adequacy test plus simultaneous intervals for a finished fit; the two
/// bootstraps use sub-streams 0 and 1 of RngStream(seed, 0).
InferenceResult infer(const TransferFit& fit, const PreparedDataset& target,
                      const InferenceConfig& config);

}  // namespace tfarm
