#pragma once
// Monte-Carlo lab: data generation from the factor-augmented model, the eight
// estimator variants, error metrics and the replication runner.
//
// Dataset k (0 = target) is X_k = F_k B_k^T + U_k and Y_k = U_k w_k + F_k g_k + E_k with
//   B_k ~ Unif(-b, b), F_k ~ N(0, 1), rows of U_k ~ N(0, S_k), E_k ~ N(0, noise^2),
//   S_0 = Toeplitz(rho), S_k = S_0 + e e^T with e ~ N(0, eps_sd^2 I) fresh per source,
//   w_0 = (signal * 1_s, 0), w_k = w_0 + (eta / p) R1_k      for informative k,
//                            w_k = w_0 + (c_adv eta / p) R1_k  otherwise,
//   g_k = g_0 + gamma_inf R2_k (informative) or g_0 + gamma_adv R2_k,
// with R1, R2 Rademacher vectors.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tfarm/factor.hpp"
#include "tfarm/random.hpp"
#include "tfarm/transfer.hpp"

namespace tfarm {

enum class Estimator {
  only_farm,
  trans_farm,
  oracle_trans_farm,
  pooled_trans_farm,
  only_lasso,
  trans_lasso,
  oracle_trans_lasso,
  pooled_trans_lasso,
};

std::string_view estimator_name(Estimator e) noexcept;
std::optional<Estimator> parse_estimator(std::string_view name) noexcept;
std::vector<Estimator> all_estimators();
bool is_farm(Estimator e) noexcept;
/// The Lasso-based counterpart of a FARM estimator and vice versa.
Estimator counterpart(Estimator e) noexcept;

struct SimConfig {
  std::size_t n0 = 300;
  std::size_t nk = 300;
  std::size_t p = 500;
  std::size_t s = 20;
  std::size_t sources = 10;
  std::size_t informative = 5;
  double eta = 5.0;
  std::size_t rank = 2;
  double signal = 0.5;
  Vector gamma0{0.5, 0.5};
  double gamma_informative = 0.1;
  double gamma_adversarial = 0.5;
  /// Contrast multiplier for non-informative sources (their scale is this * eta / p).
  double adversarial_scale = 2.0;
  double loading_bound = 1.0;
  double toeplitz_rho = 0.5;
  double eps_sd = 0.3;
  double noise_sd = 1.0;
  std::size_t replications = 100;
  std::uint64_t base_seed = 2024;
  std::vector<Estimator> roster = all_estimators();
  double lambda_c = 0.5;
  std::size_t folds = 3;
  ThresholdRule threshold;
  /// Use the true rank in every FARM decomposition instead of the ratio estimate.
  bool fix_rank = false;
  /// Draw the informative set once per base seed instead of once per replication.
  bool fix_informative_set = false;
  bool record_timing = false;
  std::size_t threads = 1;

  /// Throws InvalidArgument when the parameters are inconsistent.
  void validate() const;
};

struct SimTruth {
  Vector beta;
  /// Index 0 is the target, k the source k; w[0] == beta.
  std::vector<Vector> w;
  std::vector<Vector> gamma;
  /// Sorted, 1-based.
  std::vector<std::size_t> informative;
  std::vector<Matrix> factors;
  std::vector<Matrix> loadings;
  std::vector<Matrix> idiosyncratic;
};

struct SimDraw {
  Dataset target;
  std::vector<Dataset> sources;
  SimTruth truth;
};

/// Dataset k uses rng.substream(k + 1); the informative set uses
/// rng.substream(0) (or a base-seed stream when fix_informative_set is on).
SimDraw generate(const SimConfig& config, const RngStream& rng);

struct RotationDiagnostic {
  bool rank_miss = false;
  std::size_t estimated_rank = 0;
  std::size_t true_rank = 0;
  /// Spectral norm of H^T H - I.
  double hth_deviation = 0.0;
  /// max-abs of F^ - F H^T.
  double factor_max_error = 0.0;
};

/// H = n^{-1} V^{-1} F^^T F B^T B with V the leading eigenvalues of X X^T / n.
/// A rank mismatch is reported through rank_miss rather than an exception.
RotationDiagnostic rotation_diagnostic(const SimTruth& truth, const FactorDecomposition& decomp,
                                       std::size_t dataset);

struct SimRow {
  Estimator estimator = Estimator::only_farm;
  std::size_t informative = 0;
  std::size_t replication = 0;
  double l1_error = 0.0;
  double l2_error = 0.0;
  double seconds = 0.0;
  /// Selected set for detection-based estimators.
  std::vector<std::size_t> selected;
  std::vector<std::size_t> truth_set;
};

struct SimAggregate {
  Estimator estimator = Estimator::only_farm;
  std::size_t informative = 0;
  std::size_t count = 0;
  double mean_l1 = 0.0;
  double se_l1 = 0.0;
  double mean_l2 = 0.0;
  double se_l2 = 0.0;
};

struct SimResult {
  std::vector<SimRow> rows;
  std::vector<SimAggregate> summary;
  std::size_t failed_replications = 0;
  std::vector<std::string> failures;

  const SimAggregate* find(Estimator e, std::size_t informative) const noexcept;
};

double l1_error(std::span<const double> estimate, std::span<const double> truth);
double l2_error(std::span<const double> estimate, std::span<const double> truth);

/// Means and standard errors per (informative size, estimator), ordered by
/// size then roster order.
std::vector<SimAggregate> aggregate(const std::vector<SimRow>& rows);

/// Runs config.replications replications at config.informative. Replication r
/// uses RngStream(base_seed, r). Failing replications are dropped and counted;
/// more than 20% failures raise NumericalError.
SimResult run_experiment(const SimConfig& config);

/// run_experiment for each informative-set size, concatenated.
SimResult run_sweep(const SimConfig& config, std::span<const std::size_t> informative_sizes);

}  // namespace tfarm
