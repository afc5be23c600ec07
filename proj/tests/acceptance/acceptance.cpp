// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
// Usage: acceptance [criterion numbers...]   (default: all seven)

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "helpers.hpp"
#include "oracles.hpp"
#include "tfarm/csv.hpp"
#include "tfarm/inference.hpp"
#include "tfarm/linalg.hpp"
#include "tfarm/parallel.hpp"
#include "tfarm/simlab.hpp"
#include "tfarm/solver.hpp"

namespace fs = std::filesystem;
using namespace tfarm;

namespace {

struct Outcome {
  bool pass = true;
  std::vector<std::string> notes;

  void require(bool ok, const std::string& what) {
    pass = pass && ok;
    notes.push_back(std::string(ok ? "ok " : "FAILED ") + what);
  }
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::size_t worker_count() { return std::max(1u, std::thread::hardware_concurrency()); }

SimConfig desk() {
  SimConfig c;
  c.n0 = 150;
  c.nk = 150;
  c.p = 200;
  c.s = 10;
  c.sources = 6;
  c.rank = 2;
  c.eta = 5.0;
  c.replications = 30;
  c.base_seed = 2024;
  c.threads = worker_count();
  return c;
}

const std::vector<std::size_t> kSizes{0, 2, 4, 6};

const SimResult& desk_sweep() {
  static const SimResult result = run_sweep(desk(), kSizes);
  return result;
}

double mean_l2(Estimator e, std::size_t a) { return desk_sweep().find(e, a)->mean_l2; }

Outcome error_trend() {
  Outcome o;
  const SimResult& res = desk_sweep();
  o.require(res.failed_replications == 0, "no failed replications");
  std::vector<double> m, se;
  for (std::size_t a : kSizes) {
    const SimAggregate* g = res.find(Estimator::oracle_trans_farm, a);
    m.push_back(g->mean_l2);
    se.push_back(g->se_l2);
  }
  std::size_t inversions = 0;
  bool small = true;
  std::string trend = "Oracle-Trans-FARM l2:";
  for (std::size_t i = 0; i < m.size(); ++i) {
    trend += fmt(" %.4f", m[i]);
    if (i > 0 && m[i] > m[i - 1]) {
      ++inversions;
      small = small && m[i] - m[i - 1] <= std::max(se[i], se[i - 1]);
    }
  }
  o.require(inversions <= 1 && small, trend + " (" + std::to_string(inversions) + " inversions)");
  const double ratio = mean_l2(Estimator::oracle_trans_farm, 6) / mean_l2(Estimator::only_farm, 6);
  o.require(ratio <= 0.8, "oracle / only-FARM at |A|=6 = " + fmt("%.3f", ratio));
  bool dominated = true;
  std::string worst;
  for (std::size_t a : kSizes) {
    for (Estimator e : {Estimator::only_farm, Estimator::trans_farm, Estimator::oracle_trans_farm,
                        Estimator::pooled_trans_farm}) {
      const double f = mean_l2(e, a);
      const double l = mean_l2(counterpart(e), a);
      if (f > l) {
        dominated = false;
        worst += " " + std::string(estimator_name(e)) + "@" + std::to_string(a);
      }
    }
  }
  o.require(dominated, "FARM variants at or below their Lasso counterparts" + worst);
  return o;
}

Outcome detection() {
  Outcome o;
  const SimResult& res = desk_sweep();
  for (std::size_t a : kSizes) {
    if (a < 2) continue;
    const double t = mean_l2(Estimator::trans_farm, a);
    const double r = mean_l2(Estimator::oracle_trans_farm, a);
    o.require(t <= 1.1 * r, "|A|=" + std::to_string(a) + " Trans-FARM " + fmt("%.4f", t) + " vs oracle " +
                                fmt("%.4f", r) + " (ratio " + fmt("%.3f", t / r) + ")");
  }
  std::map<std::size_t, std::pair<std::size_t, std::size_t>> exact;
  for (const SimRow& row : res.rows) {
    if (row.estimator != Estimator::trans_farm) continue;
    auto& [hit, total] = exact[row.informative];
    hit += row.selected == row.truth_set;
    ++total;
  }
  std::size_t hit = 0, total = 0;
  std::string per_size;
  for (const auto& [a, ht] : exact) {
    hit += ht.first;
    total += ht.second;
    per_size += " |A|=" + std::to_string(a) + ":" + std::to_string(ht.first) + "/" + std::to_string(ht.second);
  }
  o.require(hit >= 0.9 * total, "selected set equals the informative set in " + std::to_string(hit) + "/" +
                                    std::to_string(total) + per_size);
  return o;
}

Outcome factors() {
  Outcome o;
  SimConfig c = desk();
  c.sources = 0;
  c.informative = 0;
  std::size_t hits = 0;
  double worst = 0.0;
  for (std::uint64_t r = 0; r < 100; ++r) {
    const SimDraw d = generate(c, RngStream(c.base_seed + 1, r));
    const FactorDecomposition dec = decompose(d.target.x);
    hits += dec.rank == 2;
    const double n = static_cast<double>(dec.rows());
    Matrix ftf = linalg::multiply_at_b(dec.factors, dec.factors);
    for (double& v : ftf.values()) v /= n;
    worst = std::max(worst, linalg::max_abs_diff(ftf, Matrix::identity(dec.rank)));
    Matrix uf = linalg::multiply_at_b(dec.idiosyncratic, dec.factors);
    for (double& v : uf.values()) v /= n;
    worst = std::max(worst, linalg::max_abs(uf));
    Matrix recon = linalg::multiply_a_bt(dec.factors, dec.loadings);
    for (std::size_t i = 0; i < recon.size(); ++i) recon.values()[i] += dec.idiosyncratic.values()[i];
    worst = std::max(worst, linalg::max_abs_diff(recon, d.target.x));
    const Matrix btb = linalg::multiply_at_b(dec.loadings, dec.loadings);
    for (std::size_t i = 0; i < dec.rank; ++i)
      for (std::size_t j = 0; j < dec.rank; ++j)
        if (i != j) worst = std::max(worst, std::fabs(btb(i, j)) / std::max(1.0, btb(i, i)));
  }
  o.require(hits >= 95, "rank 2 selected in " + std::to_string(hits) + "/100");
  o.require(worst <= 1e-8, "worst invariant residual " + fmt("%.2e", worst));
  return o;
}

Outcome solver() {
  Outcome o;
  {
    oracle::Lcg g(3);
    const auto xo = oracle::random_mat(g, 20, 3);
    auto y = oracle::matvec(xo, {1.0, -0.5, 0.0});
    for (double& v : y) v += 0.3 * g.normal();
    const Matrix x = testing::to_matrix(xo);
    LassoProblem p;
    p.blocks.push_back({x, y});
    p.lambda = 0.1;
    const double d = testing::max_diff(lasso_fit(p).coefficients, oracle::lasso_projected_gradient(xo, y, 0.1));
    o.require(d <= 1e-5, "p=3 Lasso vs projected-gradient oracle " + fmt("%.2e", d));
  }
  {
    oracle::Lcg g(33);
    const auto xo = oracle::random_mat(g, 50, 5);
    const auto y = oracle::random_vec(g, 50);
    const Matrix x = testing::to_matrix(xo);
    LassoProblem p;
    p.blocks.push_back({x, y});
    const auto xt = oracle::transpose(xo);
    const auto ls = oracle::solve(oracle::matmul(xt, xo), oracle::matvec(xt, y));
    const double d = testing::max_diff(lasso_fit(p).coefficients, ls);
    o.require(d <= 1e-6, "lambda=0 vs normal equations " + fmt("%.2e", d));
    p.lambda = lambda_max(p);
    const LassoSolution s = lasso_fit(p);
    const bool zero = std::all_of(s.coefficients.begin(), s.coefficients.end(), [](double v) { return v == 0.0; });
    o.require(zero, "lambda_max gives exactly zero coefficients");
  }
  {
    oracle::Lcg g(5);
    auto uo = oracle::random_mat(g, 200, 5);
    for (auto& row : uo) row[1] += 0.5 * row[0];
    auto gram = oracle::matmul(oracle::transpose(uo), uo);
    for (auto& row : gram)
      for (double& v : row) v /= 200.0;
    const auto est = nodewise_precision(testing::to_matrix(uo), NodewisePenalty::fixed(0.0));
    const double d = testing::max_diff(est.theta, oracle::inverse(gram));
    o.require(d <= 1e-5, "lambda=0 nodewise vs direct inverse " + fmt("%.2e", d));
  }
  return o;
}

struct StudyRates {
  double reject = 0.0;
  double cover = 0.0;
  double worst_ratio = 0.0;
};

// Fits Trans-FARM on two informative sources and runs the bootstrap procedures.
StudyRates inference_study(std::size_t n0, std::size_t p, std::size_t s, double signal, std::size_t reps,
                           std::uint64_t seed) {
  SimConfig c;
  c.n0 = n0;
  c.nk = n0;
  c.p = p;
  c.s = s;
  c.signal = signal;
  c.sources = 2;
  c.informative = 2;
  c.base_seed = seed;
  std::vector<int> reject(reps), cover(reps);
  std::vector<double> ratio(reps);
  parallel_for(reps, worker_count(), [&](std::size_t rep) {
    const SimDraw d = generate(c, RngStream(seed, rep));
    TransferConfig t;
    t.detection_seed = rep;
    const PreparedData data = prepare(d.target, d.sources, t);
    const auto [fit, report] = trans_farm(data, t);
    InferenceConfig ic;
    ic.bootstrap = 300;
    ic.seed = rep;
    const InferenceResult res = infer(fit, data.target, ic);
    reject[rep] = res.reject;
    bool all = true;
    for (const ConfidenceInterval& ci : res.intervals)
      all = all && d.truth.beta[ci.index] >= ci.lo && d.truth.beta[ci.index] <= ci.hi;
    cover[rep] = all;
    const double h0 = res.intervals[0].hi - res.beta_tilde[0];
    double worst = 0.0;
    for (const ConfidenceInterval& ci : res.intervals) {
      const double h = ci.hi - res.beta_tilde[ci.index];
      const double expect = std::sqrt(res.theta.theta(ci.index, ci.index) / res.theta.theta(0, 0));
      worst = std::max(worst, std::fabs(h / h0 / expect - 1.0));
    }
    ratio[rep] = worst;
  });
  StudyRates out;
  for (std::size_t r = 0; r < reps; ++r) {
    out.reject += reject[r];
    out.cover += cover[r];
    out.worst_ratio = std::max(out.worst_ratio, ratio[r]);
  }
  out.reject /= static_cast<double>(reps);
  out.cover /= static_cast<double>(reps);
  return out;
}

Outcome inference() {
  Outcome o;
  const StudyRates size = inference_study(150, 100, 0, 0.0, 200, 501);
  o.require(size.reject >= 0.02 && size.reject <= 0.10,
            "size at n0=150, p=100, beta=0: " + fmt("%.3f", size.reject));
  const StudyRates power = inference_study(150, 100, 10, 0.5, 200, 502);
  o.require(power.reject >= 0.9, "power at n0=150, p=100, s=10: " + fmt("%.3f", power.reject));
  const StudyRates cover = inference_study(200, 50, 5, 0.5, 200, 503);
  o.require(cover.cover >= 0.90 && cover.cover <= 0.99,
            "studentised coverage at n0=200, p=50, s=5: " + fmt("%.3f", cover.cover));
  const double ratio = std::max({size.worst_ratio, power.worst_ratio, cover.worst_ratio});
  o.require(ratio <= 1e-12, "half-width ratio vs sqrt(Theta_ii / Theta_jj), worst relative " + fmt("%.1e", ratio));
  return o;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

int tool(const std::string& args) {
  const std::string cmd = std::string(TFARM_TOOL_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome determinism() {
  Outcome o;
  const fs::path root = fs::temp_directory_path() / ("tfarm_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  fs::create_directories(root);
  SimConfig c = desk();
  c.sources = 4;
  c.informative = 2;
  const SimDraw d = generate(c, RngStream(606, 0));
  io::write_dataset(root / "target.csv", d.target);
  std::string data = "--target " + (root / "target.csv").string();
  for (std::size_t k = 0; k < d.sources.size(); ++k) {
    const fs::path p = root / ("source" + std::to_string(k + 1) + ".csv");
    io::write_dataset(p, d.sources[k]);
    data += " --source " + p.string();
  }
  data += " --seed 17";
  const std::string threads = std::to_string(std::max<std::size_t>(4, worker_count()));
  const std::vector<std::pair<std::string, std::string>> commands{
      {"fit", "fit " + data + " --sources-set 1,2"},
      {"detect", "detect " + data},
      {"transfer", "transfer " + data},
      {"infer", "infer " + data + " --B 300"},
      {"simulate", "simulate --sim-n0 60 --sim-nk 60 --sim-p 40 --sim-s 4 --sim-K 3 --sim-replications 4 --seed 3"},
  };
  for (const auto& [name, args] : commands) {
    const fs::path a = root / (name + "_a");
    const fs::path b = root / (name + "_b");
    const fs::path t = root / (name + "_t");
    const bool ran = tool(args + " --threads 1 --out " + a.string()) == 0 &&
                     tool(args + " --threads 1 --out " + b.string()) == 0 &&
                     tool(args + " --threads " + threads + " --out " + t.string()) == 0;
    bool same = ran;
    std::size_t files = 0;
    if (ran) {
      for (const auto& entry : fs::directory_iterator(a)) {
        const fs::path f = entry.path().filename();
        same = same && slurp(a / f) == slurp(b / f) && slurp(a / f) == slurp(t / f);
        ++files;
      }
    }
    o.require(same && files > 0, name + ": " + std::to_string(files) + " files identical across repeats and " +
                                     threads + " threads");
  }
  fs::remove_all(root);
  return o;
}

Outcome rank_zero() {
  Outcome o;
  SimConfig c = desk();
  c.sources = 3;
  c.informative = 2;
  const SimDraw d = generate(c, RngStream(707, 0));
  TransferConfig cfg;
  cfg.mode = FitMode::plain_lasso;
  cfg.lasso.tol = 1e-13;
  const std::vector<std::size_t> set{1, 3};
  const TransferFit fit = oracle_trans_farm(d.target, d.sources, set, cfg);
  const auto x0 = testing::to_mat(d.target.x);
  const auto w = oracle::lasso_gram_cd(
      oracle::vstack({x0, testing::to_mat(d.sources[0].x), testing::to_mat(d.sources[2].x)}),
      oracle::concat({d.target.y, d.sources[0].y, d.sources[2].y}), fit.lambda_w, oracle::Vec(c.p, 0.0));
  const auto delta = oracle::lasso_gram_cd(x0, d.target.y, fit.lambda_delta, w);
  const double dw = testing::max_diff(fit.w_hat, w);
  const double dd = testing::max_diff(fit.delta_hat, delta);
  o.require(fit.target_decomp->rank == 0, "rank-0 decomposition in Lasso mode");
  o.require(dw <= 1e-10, "pooled step vs independent Lasso " + fmt("%.2e", dw));
  o.require(dd <= 1e-10, "correction step vs independent Lasso " + fmt("%.2e", dd));
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"error trend and FARM dominance", error_trend},
      {"near-oracle detection", detection},
      {"factor estimation", factors},
      {"solver oracle equivalence", solver},
      {"inference size, power and coverage", inference},
      {"determinism", determinism},
      {"rank-0 equivalence", rank_zero},
  };
  std::set<std::size_t> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::strtoul(argv[i], nullptr, 10));
  bool all_pass = true;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (!wanted.empty() && !wanted.count(i + 1)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s %zu %s (%.0fs)\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), secs);
    for (const std::string& n : o.notes) std::printf("    %s\n", n.c_str());
    std::fflush(stdout);
    all_pass = all_pass && o.pass;
  }
  return all_pass ? 0 : 1;
}
