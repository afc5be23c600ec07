#include "tfarm/transfer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "tfarm/errors.hpp"
#include "tfarm/kernels.hpp"
#include "tfarm/linalg.hpp"
#include "tfarm/parallel.hpp"
#include "tfarm/random.hpp"

namespace tfarm {
namespace {

constexpr std::uint64_t kDetectionStream = 0xde7ec7;

void check_dataset(const Dataset& d, std::size_t p, const char* what) {
  if (d.x.rows() != d.y.size()) {
    std::ostringstream msg;
    msg << what << ": design has " << d.x.rows() << " rows but response has " << d.y.size();
    throw InvalidArgument(msg.str());
  }
  if (d.x.cols() != p) {
    std::ostringstream msg;
    msg << what << ": " << d.x.cols() << " columns, expected " << p;
    throw InvalidArgument(msg.str());
  }
}

void check_all(const Dataset& target, std::span<const Dataset> sources) {
  const std::size_t p = target.x.cols();
  check_dataset(target, p, "target");
  for (std::size_t k = 0; k < sources.size(); ++k) {
    check_dataset(sources[k], p, ("source " + std::to_string(k + 1)).c_str());
  }
}

std::vector<std::size_t> canonical_set(std::span<const std::size_t> set_a, std::size_t k_sources) {
  std::vector<std::size_t> out(set_a.begin(), set_a.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  for (std::size_t k : out) {
    if (k < 1 || k > k_sources) {
      throw InvalidArgument("source index " + std::to_string(k) + " outside 1.." +
                            std::to_string(k_sources));
    }
  }
  return out;
}

LassoSolution solve_or_throw(const LassoProblem& problem, const LassoOptions& options,
                             const char* step) {
  LassoSolution sol = lasso_fit(problem, options);
  if (!sol.converged) {
    std::ostringstream msg;
    msg << step << ": Lasso did not converge after " << sol.iterations
        << " sweeps (kkt violation " << sol.kkt_violation << ", lambda " << problem.lambda << ")";
    throw NumericalError(msg.str());
  }
  return sol;
}

double estimate_sigma(const PreparedDataset& target, const TransferConfig& config) {
  if (config.sigma_hat > 0.0) return config.sigma_hat;
  return scaled_lasso(target.u(), target.y_tilde, 0.0, config.lasso).sigma;
}

}  // namespace

PreparedDataset prepare_dataset(const Dataset& data, const TransferConfig& config) {
  const RankSpec rank = config.mode == FitMode::plain_lasso ? RankSpec::exactly(0) : config.rank;
  auto decomp = std::make_shared<FactorDecomposition>(decompose(data.x, rank));
  PreparedDataset out;
  out.y_tilde = residualize(data.y, *decomp);
  out.decomp = std::move(decomp);
  return out;
}

namespace {

PreparedData prepare_subset(const Dataset& target, std::span<const Dataset> sources,
                            const std::vector<char>& wanted, const TransferConfig& config) {
  check_all(target, sources);
  PreparedData out;
  out.mode = config.mode;
  out.sources.resize(sources.size());
  parallel_for(sources.size() + 1, config.threads, [&](std::size_t i) {
    if (i == 0) {
      out.target = prepare_dataset(target, config);
    } else if (wanted[i - 1]) {
      out.sources[i - 1] = prepare_dataset(sources[i - 1], config);
    }
  });
  out.sigma_hat = estimate_sigma(out.target, config);
  return out;
}

}  // namespace

PreparedData prepare(const Dataset& target, std::span<const Dataset> sources,
                     const TransferConfig& config) {
  return prepare_subset(target, sources, std::vector<char>(sources.size(), 1), config);
}

TransferFit oracle_trans_farm(const PreparedData& data, std::span<const std::size_t> set_a,
                              const TransferConfig& config) {
  const std::vector<std::size_t> set = canonical_set(set_a, data.sources.size());
  const PreparedDataset& target = data.target;
  const std::size_t p = target.u().cols();
  const std::size_t n0 = target.rows();

  LassoProblem pooled;
  pooled.blocks.push_back(LassoBlock{target.u(), target.y_tilde});
  std::size_t n_pool = n0;
  for (std::size_t k : set) {
    const PreparedDataset& src = data.sources[k - 1];
    if (!src.decomp) throw InvalidArgument("source " + std::to_string(k) + " was not prepared");
    pooled.blocks.push_back(LassoBlock{src.u(), src.y_tilde});
    n_pool += src.rows();
  }

  TransferFit fit;
  fit.mode = data.mode;
  fit.sigma_hat = data.sigma_hat;
  fit.source_set = set;
  fit.lambda_w = config.lambda_w > 0.0 ? config.lambda_w
                                       : penalty_level(config.lambda_c, data.sigma_hat, p, n_pool);
  fit.lambda_delta = config.lambda_delta > 0.0
                         ? config.lambda_delta
                         : penalty_level(config.lambda_c, data.sigma_hat, p, n0);
  fit.target_decomp = target.decomp;
  for (std::size_t k : set) fit.source_decomps.push_back(data.sources[k - 1].decomp);

  pooled.lambda = fit.lambda_w;
  fit.w_hat = solve_or_throw(pooled, config.lasso, "transferring step").coefficients;

  LassoProblem correction{{LassoBlock{target.u(), target.y_tilde}}, fit.lambda_delta, fit.w_hat};
  fit.delta_hat = solve_or_throw(correction, config.lasso, "debiasing step").coefficients;

  fit.beta_hat.resize(p);
  for (std::size_t j = 0; j < p; ++j) fit.beta_hat[j] = fit.w_hat[j] + fit.delta_hat[j];
  return fit;
}

TransferFit oracle_trans_farm(const Dataset& target, std::span<const Dataset> sources,
                              std::span<const std::size_t> set_a, const TransferConfig& config) {
  const std::vector<std::size_t> set = canonical_set(set_a, sources.size());
  std::vector<char> wanted(sources.size(), 0);
  for (std::size_t k : set) wanted[k - 1] = 1;
  const PreparedData data = prepare_subset(target, sources, wanted, config);
  return oracle_trans_farm(data, set, config);
}

double fold_loss(std::span<const double> w, const FactorDecomposition& target_decomp,
                 std::span<const double> y_tilde, std::span<const std::size_t> fold) {
  const Matrix& u = target_decomp.idiosyncratic;
  if (fold.empty()) throw InvalidArgument("fold_loss: empty fold");
  if (w.size() != u.cols()) throw InvalidArgument("fold_loss: coefficient length mismatch");
  if (y_tilde.size() != u.rows()) throw InvalidArgument("fold_loss: response length mismatch");
  double acc = 0.0;
  for (std::size_t i : fold) {
    if (i >= u.rows()) {
      throw InvalidArgument("fold_loss: row index " + std::to_string(i) + " out of range");
    }
    const double r = y_tilde[i] - kernels::dot(u.row(i), w);
    acc += r * r;
  }
  return acc / static_cast<double>(fold.size());
}

std::vector<std::vector<std::size_t>> make_folds(std::size_t n, std::size_t folds,
                                                 std::uint64_t seed) {
  if (folds < 1 || n < folds) {
    throw InvalidArgument("make_folds: cannot split " + std::to_string(n) + " rows into " +
                          std::to_string(folds) + " non-empty folds");
  }
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  RngStream rng(seed, kDetectionStream);
  std::shuffle(perm.begin(), perm.end(), rng.engine());
  std::vector<std::vector<std::size_t>> out(folds);
  const std::size_t base = n / folds;
  const std::size_t extra = n % folds;
  std::size_t at = 0;
  for (std::size_t r = 0; r < folds; ++r) {
    const std::size_t len = base + (r < extra ? 1 : 0);
    out[r].assign(perm.begin() + static_cast<std::ptrdiff_t>(at),
                  perm.begin() + static_cast<std::ptrdiff_t>(at + len));
    std::sort(out[r].begin(), out[r].end());
    at += len;
  }
  return out;
}

std::vector<std::size_t> selection_from_losses(const DetectionReport& report) {
  std::vector<std::size_t> sel;
  for (std::size_t k = 0; k < report.source_losses.size(); ++k) {
    if (report.source_losses[k] <= report.target_loss + report.threshold) sel.push_back(k + 1);
  }
  return sel;
}

DetectionReport detect_sources(const PreparedData& data, const TransferConfig& config) {
  const PreparedDataset& target = data.target;
  const std::size_t n0 = target.rows();
  const std::size_t p = target.u().cols();
  const std::size_t k_sources = data.sources.size();
  if (config.folds < 2 || n0 < 2 * config.folds) {
    throw InvalidArgument("detect_sources: " + std::to_string(n0) +
                          " target rows cannot form " + std::to_string(config.folds) +
                          " folds of at least 2 rows");
  }
  for (std::size_t k = 0; k < k_sources; ++k) {
    if (!data.sources[k].decomp) throw InvalidArgument("detect_sources: source not prepared");
  }

  DetectionReport report;
  report.folds = config.folds;
  report.seed = config.detection_seed;
  report.sigma_hat = data.sigma_hat;
  const auto folds = make_folds(n0, config.folds, config.detection_seed);

  // Training rows of the target for each held-out fold.
  struct Split {
    Matrix u;
    Vector y;
  };
  std::vector<Split> train(config.folds);
  for (std::size_t r = 0; r < config.folds; ++r) {
    std::vector<std::size_t> rows;
    for (std::size_t q = 0; q < config.folds; ++q)
      if (q != r) rows.insert(rows.end(), folds[q].begin(), folds[q].end());
    std::sort(rows.begin(), rows.end());
    train[r].u = linalg::select_rows(target.u(), rows);
    train[r].y = linalg::select(target.y_tilde, rows);
  }

  // losses[r * (K + 1) + k], k = 0 is the target-only fit.
  const std::size_t width = k_sources + 1;
  Vector losses(config.folds * width, 0.0);
  parallel_for(config.folds * width, config.threads, [&](std::size_t task) {
    const std::size_t r = task / width;
    const std::size_t k = task % width;
    const Split& tr = train[r];
    LassoProblem problem;
    problem.blocks.push_back(LassoBlock{tr.u, tr.y});
    std::size_t n_pool = tr.y.size();
    if (k > 0) {
      const PreparedDataset& src = data.sources[k - 1];
      problem.blocks.push_back(LassoBlock{src.u(), src.y_tilde});
      n_pool += src.rows();
    }
    problem.lambda = penalty_level(config.lambda_c, data.sigma_hat, p, n_pool);
    const LassoSolution sol =
        solve_or_throw(problem, config.lasso, k == 0 ? "detection (target-only)" : "detection (transferring)");
    losses[task] = fold_loss(sol.coefficients, *target.decomp, target.y_tilde, folds[r]);
  });

  report.source_losses.assign(k_sources, 0.0);
  for (std::size_t r = 0; r < config.folds; ++r) {
    report.target_loss += losses[r * width];
    for (std::size_t k = 1; k < width; ++k) report.source_losses[k - 1] += losses[r * width + k];
  }
  const double inv_folds = 1.0 / static_cast<double>(config.folds);
  report.target_loss *= inv_folds;
  for (double& l : report.source_losses) l *= inv_folds;

  switch (config.threshold.kind) {
    case ThresholdRule::Kind::twice_target_loss:
      report.threshold = 2.0 * report.target_loss;
      break;
    case ThresholdRule::Kind::eps0_sigma2:
      report.threshold = config.threshold.eps0 * data.sigma_hat * data.sigma_hat;
      break;
  }
  report.selected = selection_from_losses(report);
  return report;
}

DetectionReport detect_sources(const Dataset& target, std::span<const Dataset> sources,
                               const TransferConfig& config) {
  return detect_sources(prepare(target, sources, config), config);
}

std::pair<TransferFit, DetectionReport> trans_farm(const PreparedData& data,
                                                   const TransferConfig& config) {
  DetectionReport report = detect_sources(data, config);
  TransferFit fit = oracle_trans_farm(data, report.selected, config);
  return {std::move(fit), std::move(report)};
}

std::pair<TransferFit, DetectionReport> trans_farm(const Dataset& target,
                                                   std::span<const Dataset> sources,
                                                   const TransferConfig& config) {
  return trans_farm(prepare(target, sources, config), config);
}

}  // namespace tfarm
