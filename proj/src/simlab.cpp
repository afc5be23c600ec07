#include "tfarm/simlab.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <map>
#include <numeric>

#include "tfarm/errors.hpp"
#include "tfarm/kernels.hpp"
#include "tfarm/linalg.hpp"
#include "tfarm/parallel.hpp"
#include "tfarm/sym_eig.hpp"

namespace tfarm {
namespace {

constexpr std::array<std::string_view, 8> kNames{
    "only-FARM",  "Trans-FARM",  "Oracle-Trans-FARM",  "Pooled-Trans-FARM",
    "only-Lasso", "Trans-Lasso", "Oracle-Trans-Lasso", "Pooled-Trans-Lasso",
};

// Stream index used for the informative set when it is fixed per base seed.
constexpr std::uint64_t kFixedSetStream = 0xa5e7ULL << 40;

std::vector<std::size_t> draw_informative(std::size_t k, std::size_t size, RngStream rng) {
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), std::size_t{1});
  std::shuffle(order.begin(), order.end(), rng.engine());
  order.resize(size);
  std::sort(order.begin(), order.end());
  return order;
}

struct Generated {
  Dataset data;
  Vector w;
  Vector gamma;
  Matrix factors;
  Matrix loadings;
  Matrix idiosyncratic;
};

Generated generate_dataset(const SimConfig& c, std::size_t k, bool informative,
                           const Vector& beta, const Matrix& chol0, RngStream rng) {
  const std::size_t n = k == 0 ? c.n0 : c.nk;
  const std::size_t p = c.p;
  const std::size_t r = c.rank;
  Generated g;
  g.w = beta;
  g.gamma = c.gamma0;
  if (k > 0) {
    // Contrast draws come first so that switching a source between informative
    // and adversarial leaves every later draw unchanged.
    const double w_scale = (informative ? 1.0 : c.adversarial_scale) * c.eta / static_cast<double>(p);
    const double g_scale = informative ? c.gamma_informative : c.gamma_adversarial;
    for (std::size_t j = 0; j < p; ++j) g.w[j] += w_scale * rng.rademacher();
    for (std::size_t j = 0; j < r; ++j) g.gamma[j] += g_scale * rng.rademacher();
  }
  g.loadings = Matrix(p, r);
  for (double& v : g.loadings.values()) v = rng.uniform(-c.loading_bound, c.loading_bound);
  g.factors = standard_normal_matrix(rng, n, r);

  // Rows of U ~ N(0, S0 + e e^T), sampled as L0 z + e g with scalar g ~ N(0, 1).
  g.idiosyncratic = mvn_from_cholesky(rng, n, chol0);
  if (k > 0 && c.eps_sd > 0.0) {
    Vector e(p);
    for (double& v : e) v = c.eps_sd * rng.normal();
    for (std::size_t i = 0; i < n; ++i) kernels::axpy(rng.normal(), e, g.idiosyncratic.row(i));
  }

  Matrix x = linalg::multiply_a_bt(g.factors, g.loadings);
  for (std::size_t i = 0; i < n; ++i) kernels::axpy(1.0, g.idiosyncratic.row(i), x.row(i));

  Vector y(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = kernels::dot(g.idiosyncratic.row(i), g.w) + kernels::dot(g.factors.row(i), g.gamma) +
           c.noise_sd * rng.normal();
  }
  g.data = Dataset{std::move(x), std::move(y), k};
  return g;
}

double mean(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double std_error(std::span<const double> v, double m) {
  if (v.size() < 2) return 0.0;
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

std::size_t roster_position(Estimator e) { return static_cast<std::size_t>(e); }

std::uint64_t detection_seed(std::uint64_t base, std::size_t replication) {
  return splitmix64(base ^ splitmix64(0xd37ec7ULL + replication));
}

struct Replication {
  std::vector<SimRow> rows;
  bool failed = false;
  std::string message;
};

Replication run_replication(const SimConfig& c, std::size_t rep) {
  using clock = std::chrono::steady_clock;
  Replication out;
  const SimDraw draw = generate(c, RngStream(c.base_seed, rep));

  TransferConfig farm_cfg;
  farm_cfg.mode = FitMode::farm;
  farm_cfg.rank = c.fix_rank ? RankSpec::exactly(c.rank) : RankSpec::automatic();
  farm_cfg.lambda_c = c.lambda_c;
  farm_cfg.folds = c.folds;
  farm_cfg.threshold = c.threshold;
  farm_cfg.detection_seed = detection_seed(c.base_seed, rep);
  TransferConfig lasso_cfg = farm_cfg;
  lasso_cfg.mode = FitMode::plain_lasso;

  bool need_farm = false;
  bool need_lasso = false;
  for (Estimator e : c.roster) (is_farm(e) ? need_farm : need_lasso) = true;

  std::vector<std::size_t> all(c.sources);
  std::iota(all.begin(), all.end(), std::size_t{1});

  auto elapsed = [&](clock::time_point t0) {
    return c.record_timing ? std::chrono::duration<double>(clock::now() - t0).count() : 0.0;
  };

  std::optional<PreparedData> farm_data;
  std::optional<PreparedData> lasso_data;
  double farm_prep = 0.0;
  double lasso_prep = 0.0;
  if (need_farm) {
    const auto t0 = clock::now();
    farm_data = prepare(draw.target, draw.sources, farm_cfg);
    farm_prep = elapsed(t0);
  }
  if (need_lasso) {
    const auto t0 = clock::now();
    lasso_data = prepare(draw.target, draw.sources, lasso_cfg);
    lasso_prep = elapsed(t0);
  }

  for (Estimator e : c.roster) {
    const bool farm = is_farm(e);
    const PreparedData& data = farm ? *farm_data : *lasso_data;
    const TransferConfig& cfg = farm ? farm_cfg : lasso_cfg;
    SimRow row;
    row.estimator = e;
    row.informative = c.informative;
    row.replication = rep;
    row.truth_set = draw.truth.informative;
    const auto t0 = clock::now();
    Vector beta_hat;
    switch (e) {
      case Estimator::only_farm:
      case Estimator::only_lasso:
        beta_hat = oracle_trans_farm(data, {}, cfg).beta_hat;
        break;
      case Estimator::trans_farm:
      case Estimator::trans_lasso: {
        auto [fit, report] = trans_farm(data, cfg);
        beta_hat = std::move(fit.beta_hat);
        row.selected = std::move(report.selected);
        break;
      }
      case Estimator::oracle_trans_farm:
      case Estimator::oracle_trans_lasso:
        beta_hat = oracle_trans_farm(data, draw.truth.informative, cfg).beta_hat;
        break;
      case Estimator::pooled_trans_farm:
      case Estimator::pooled_trans_lasso:
        beta_hat = oracle_trans_farm(data, all, cfg).beta_hat;
        break;
    }
    row.seconds = elapsed(t0) + (farm ? farm_prep : lasso_prep);
    row.l1_error = l1_error(beta_hat, draw.truth.beta);
    row.l2_error = l2_error(beta_hat, draw.truth.beta);
    out.rows.push_back(std::move(row));
  }
  return out;
}

}  // namespace

std::string_view estimator_name(Estimator e) noexcept { return kNames[roster_position(e)]; }

std::optional<Estimator> parse_estimator(std::string_view name) noexcept {
  for (std::size_t i = 0; i < kNames.size(); ++i)
    if (kNames[i] == name) return static_cast<Estimator>(i);
  return std::nullopt;
}

std::vector<Estimator> all_estimators() {
  std::vector<Estimator> out;
  for (std::size_t i = 0; i < kNames.size(); ++i) out.push_back(static_cast<Estimator>(i));
  return out;
}

bool is_farm(Estimator e) noexcept { return roster_position(e) < 4; }

Estimator counterpart(Estimator e) noexcept {
  const std::size_t i = roster_position(e);
  return static_cast<Estimator>(i < 4 ? i + 4 : i - 4);
}

void SimConfig::validate() const {
  if (n0 < 2 || nk < 2) throw InvalidArgument("simulation: sample sizes must be at least 2");
  if (p < 1) throw InvalidArgument("simulation: p must be positive");
  if (s > p) throw InvalidArgument("simulation: s exceeds p");
  if (informative > sources) throw InvalidArgument("simulation: |A| exceeds the number of sources");
  if (rank > std::min(n0, p)) throw InvalidArgument("simulation: rank exceeds min(n0, p)");
  if (gamma0.size() != rank) throw InvalidArgument("simulation: gamma0 must have length r");
  if (replications < 1) throw InvalidArgument("simulation: need at least one replication");
  if (roster.empty()) throw InvalidArgument("simulation: empty estimator roster");
  if (!(std::fabs(toeplitz_rho) < 1.0)) throw InvalidArgument("simulation: |rho| must be < 1");
  if (!(eps_sd >= 0.0) || !(noise_sd >= 0.0) || !(loading_bound >= 0.0) || !(eta >= 0.0)) {
    throw InvalidArgument("simulation: scales must be non-negative");
  }
  if (folds < 2) throw InvalidArgument("simulation: need at least two folds");
}

SimDraw generate(const SimConfig& config, const RngStream& rng) {
  config.validate();
  SimDraw out;
  SimTruth& t = out.truth;
  t.beta.assign(config.p, 0.0);
  for (std::size_t j = 0; j < config.s; ++j) t.beta[j] = config.signal;

  const RngStream set_stream =
      config.fix_informative_set ? RngStream(config.base_seed, kFixedSetStream) : rng.substream(0);
  t.informative = draw_informative(config.sources, config.informative, set_stream);

  const Matrix chol0 = linalg::cholesky(linalg::toeplitz(config.p, config.toeplitz_rho));
  const std::size_t total = config.sources + 1;
  std::vector<Generated> parts(total);
  for (std::size_t k = 0; k < total; ++k) {
    const bool inf = std::binary_search(t.informative.begin(), t.informative.end(), k);
    parts[k] = generate_dataset(config, k, inf, t.beta, chol0, rng.substream(k + 1));
  }
  for (std::size_t k = 0; k < total; ++k) {
    Generated& g = parts[k];
    t.w.push_back(std::move(g.w));
    t.gamma.push_back(std::move(g.gamma));
    t.factors.push_back(std::move(g.factors));
    t.loadings.push_back(std::move(g.loadings));
    t.idiosyncratic.push_back(std::move(g.idiosyncratic));
    if (k == 0) {
      out.target = std::move(g.data);
    } else {
      out.sources.push_back(std::move(g.data));
    }
  }
  return out;
}

RotationDiagnostic rotation_diagnostic(const SimTruth& truth, const FactorDecomposition& decomp,
                                       std::size_t dataset) {
  if (dataset >= truth.factors.size()) throw InvalidArgument("rotation_diagnostic: no such dataset");
  const Matrix& f = truth.factors[dataset];
  const Matrix& b = truth.loadings[dataset];
  RotationDiagnostic d;
  d.true_rank = f.cols();
  d.estimated_rank = decomp.rank;
  if (decomp.rank != f.cols() || decomp.rows() != f.rows()) {
    d.rank_miss = true;
    d.hth_deviation = std::numeric_limits<double>::quiet_NaN();
    d.factor_max_error = std::numeric_limits<double>::quiet_NaN();
    return d;
  }
  const std::size_t n = f.rows();
  const std::size_t r = f.cols();
  // H = n^{-1} V^{-1} F^^T F B^T B, V_ii = lambda_i(X X^T) / n.
  Matrix h = linalg::multiply(linalg::multiply_at_b(decomp.factors, f), linalg::multiply_at_b(b, b));
  for (std::size_t i = 0; i < r; ++i) {
    const double v = decomp.gram_eigenvalues[i] / static_cast<double>(n);
    for (std::size_t j = 0; j < r; ++j) h(i, j) /= static_cast<double>(n) * v;
  }
  Matrix hth = linalg::multiply_at_b(h, h);
  for (std::size_t i = 0; i < r; ++i) hth(i, i) -= 1.0;
  // Symmetrise away rounding before the eigensolve.
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = i + 1; j < r; ++j) hth(i, j) = hth(j, i) = 0.5 * (hth(i, j) + hth(j, i));
  const SymEigResult eig = sym_eig(hth);
  for (double v : eig.values) d.hth_deviation = std::max(d.hth_deviation, std::fabs(v));
  d.factor_max_error = linalg::max_abs_diff(decomp.factors, linalg::multiply_a_bt(f, h));
  return d;
}

const SimAggregate* SimResult::find(Estimator e, std::size_t informative) const noexcept {
  for (const auto& a : summary)
    if (a.estimator == e && a.informative == informative) return &a;
  return nullptr;
}

double l1_error(std::span<const double> estimate, std::span<const double> truth) {
  if (estimate.size() != truth.size()) throw InvalidArgument("l1_error: length mismatch");
  double s = 0.0;
  for (std::size_t j = 0; j < truth.size(); ++j) s += std::fabs(estimate[j] - truth[j]);
  return s;
}

double l2_error(std::span<const double> estimate, std::span<const double> truth) {
  if (estimate.size() != truth.size()) throw InvalidArgument("l2_error: length mismatch");
  double s = 0.0;
  for (std::size_t j = 0; j < truth.size(); ++j) s += (estimate[j] - truth[j]) * (estimate[j] - truth[j]);
  return std::sqrt(s);
}

std::vector<SimAggregate> aggregate(const std::vector<SimRow>& rows) {
  std::map<std::pair<std::size_t, std::size_t>, std::pair<Vector, Vector>> groups;
  for (const auto& row : rows) {
    auto& g = groups[{row.informative, roster_position(row.estimator)}];
    g.first.push_back(row.l1_error);
    g.second.push_back(row.l2_error);
  }
  std::vector<SimAggregate> out;
  for (const auto& [key, vals] : groups) {
    SimAggregate a;
    a.informative = key.first;
    a.estimator = static_cast<Estimator>(key.second);
    a.count = vals.first.size();
    a.mean_l1 = mean(vals.first);
    a.se_l1 = std_error(vals.first, a.mean_l1);
    a.mean_l2 = mean(vals.second);
    a.se_l2 = std_error(vals.second, a.mean_l2);
    out.push_back(a);
  }
  return out;
}

SimResult run_experiment(const SimConfig& config) {
  config.validate();
  for (Estimator e : config.roster)
    if (roster_position(e) >= kNames.size()) throw InvalidArgument("simulation: unknown estimator");

  std::vector<Replication> reps(config.replications);
  parallel_for(config.replications, config.threads, [&](std::size_t r) {
    try {
      reps[r] = run_replication(config, r);
    } catch (const Error& e) {
      reps[r].failed = true;
      reps[r].message = "replication " + std::to_string(r) + ": " + e.what();
    }
  });

  SimResult out;
  for (auto& rep : reps) {
    if (rep.failed) {
      ++out.failed_replications;
      out.failures.push_back(std::move(rep.message));
      continue;
    }
    for (auto& row : rep.rows) out.rows.push_back(std::move(row));
  }
  if (5 * out.failed_replications > config.replications) {
    std::string msg = "simulation: " + std::to_string(out.failed_replications) + " of " +
                      std::to_string(config.replications) + " replications failed";
    if (!out.failures.empty()) msg += "; first: " + out.failures.front();
    throw NumericalError(msg);
  }
  out.summary = aggregate(out.rows);
  return out;
}

SimResult run_sweep(const SimConfig& config, std::span<const std::size_t> informative_sizes) {
  SimResult out;
  for (std::size_t size : informative_sizes) {
    SimConfig c = config;
    c.informative = size;
    SimResult part = run_experiment(c);
    out.failed_replications += part.failed_replications;
    for (auto& f : part.failures) out.failures.push_back("|A|=" + std::to_string(size) + " " + f);
    for (auto& row : part.rows) out.rows.push_back(std::move(row));
  }
  out.summary = aggregate(out.rows);
  return out;
}

}  // namespace tfarm
