#pragma once
// Transfer estimation for factor-augmented sparse regression.
//
// Every dataset k is first factor-adjusted: X_k -> U_k (idiosyncratic part) and
// Y_k -> Y~_k = (I - P_k) Y_k with P_k the projection on the estimated factors.
// Then, for a source set A,
//   w     = argmin (1 / 2 n_{0+A}) sum_{k in {0} u A} ||Y~_k - U_k w||^2 + lambda_w ||w||_1
//   delta = argmin (1 / 2 n_0) ||Y~_0 - U_0 (w + delta)||^2 + lambda_delta ||delta||_1
//   beta  = w + delta.
// Source indices are 1-based (k = 1..K); 0 is the target.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "tfarm/factor.hpp"
#include "tfarm/matrix.hpp"
#include "tfarm/solver.hpp"

namespace tfarm {

struct Dataset {
  Matrix x;
  Vector y;
  /// 0 for the target, k >= 1 for source k.
  std::size_t role = 0;
};

enum class FitMode { farm, plain_lasso };

struct ThresholdRule {
  enum class Kind { twice_target_loss, eps0_sigma2 };
  Kind kind = Kind::twice_target_loss;
  double eps0 = 0.0;

  static ThresholdRule twice_target_loss() { return {}; }
  static ThresholdRule eps0_sigma2(double eps0) { return {Kind::eps0_sigma2, eps0}; }
};

struct TransferConfig {
  FitMode mode = FitMode::farm;
  /// Ignored in plain-lasso mode, which always uses rank 0.
  RankSpec rank = RankSpec::automatic();
  /// Penalty constant c in lambda = c * sigma * sqrt(2 log p / N).
  double lambda_c = 0.5;
  /// Explicit penalties for the final fit; non-positive means "use the rule".
  double lambda_w = 0.0;
  double lambda_delta = 0.0;
  /// Target noise level; non-positive means scaled Lasso on the factor-adjusted target.
  double sigma_hat = 0.0;
  std::size_t folds = 3;
  ThresholdRule threshold;
  std::uint64_t detection_seed = 0;
  LassoOptions lasso;
  std::size_t threads = 1;
};

/// Factor-adjusted view of one dataset.
struct PreparedDataset {
  std::shared_ptr<const FactorDecomposition> decomp;
  Vector y_tilde;

  const Matrix& u() const noexcept { return decomp->idiosyncratic; }
  std::size_t rows() const noexcept { return y_tilde.size(); }
};

/// Preprocessed target and sources plus the target noise level used by every penalty.
struct PreparedData {
  PreparedDataset target;
  std::vector<PreparedDataset> sources;  // sources[k - 1] is source k
  double sigma_hat = 0.0;
  FitMode mode = FitMode::farm;
};

PreparedDataset prepare_dataset(const Dataset& data, const TransferConfig& config);

/// Decomposes every dataset once (in parallel) and estimates sigma on the target.
PreparedData prepare(const Dataset& target, std::span<const Dataset> sources,
                     const TransferConfig& config);

struct TransferFit {
  Vector w_hat;
  Vector delta_hat;
  Vector beta_hat;
  /// Sorted, 1-based.
  std::vector<std::size_t> source_set;
  double lambda_w = 0.0;
  double lambda_delta = 0.0;
  double sigma_hat = 0.0;
  FitMode mode = FitMode::farm;
  std::shared_ptr<const FactorDecomposition> target_decomp;
  std::vector<std::shared_ptr<const FactorDecomposition>> source_decomps;  // aligned with source_set
};

/// Two-step estimate over the given source set. set_a may be in any order and
/// is canonicalised (sorted) before pooling. Throws InvalidArgument on bad
/// indices or shapes and NumericalError when an inner Lasso fails to converge.
TransferFit oracle_trans_farm(const Dataset& target, std::span<const Dataset> sources,
                              std::span<const std::size_t> set_a, const TransferConfig& config);
TransferFit oracle_trans_farm(const PreparedData& data, std::span<const std::size_t> set_a,
                              const TransferConfig& config);

/// Mean squared residual of y_tilde against U_0 w over the rows in `fold`.
double fold_loss(std::span<const double> w, const FactorDecomposition& target_decomp,
                 std::span<const double> y_tilde, std::span<const std::size_t> fold);

struct DetectionReport {
  /// source_losses[k - 1] is the cross-validated loss of source k.
  Vector source_losses;
  double target_loss = 0.0;
  /// Realised threshold term (2 L0 or eps0 * sigma^2).
  double threshold = 0.0;
  std::vector<std::size_t> selected;
  std::size_t folds = 0;
  std::uint64_t seed = 0;
  double sigma_hat = 0.0;
};

/// Partition of [0, n) into `folds` near-equal parts by a seeded shuffle; the
/// first n % folds parts get one extra row. Rows within a part are sorted.
std::vector<std::vector<std::size_t>> make_folds(std::size_t n, std::size_t folds,
                                                 std::uint64_t seed);

/// {k : L_k <= L_0 + threshold}, recomputed from the stored numbers.
std::vector<std::size_t> selection_from_losses(const DetectionReport& report);

DetectionReport detect_sources(const Dataset& target, std::span<const Dataset> sources,
                               const TransferConfig& config);
DetectionReport detect_sources(const PreparedData& data, const TransferConfig& config);

/// Detection followed by the two-step fit on the selected sources.
std::pair<TransferFit, DetectionReport> trans_farm(const Dataset& target,
                                                   std::span<const Dataset> sources,
                                                   const TransferConfig& config);
std::pair<TransferFit, DetectionReport> trans_farm(const PreparedData& data,
                                                   const TransferConfig& config);

}  // namespace tfarm
