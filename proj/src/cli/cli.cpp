#include "tfarm/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <memory>
#include <numeric>
#include <ostream>
#include <sstream>

#include "tfarm/csv.hpp"
#include "tfarm/errors.hpp"
#include "tfarm/inference.hpp"
#include "tfarm/parallel.hpp"
#include "tfarm/simlab.hpp"
#include "tfarm/transfer.hpp"

namespace tfarm::cli {
namespace {

namespace fs = std::filesystem;
using io::format_double;

enum class Command { fit, detect, transfer, infer, simulate };

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::size_t parse_index(const std::string& s, const char* what) {
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw InvalidArgument(std::string("bad ") + what + " entry '" + s + "'");
  }
  return v;
}

double parse_real(const std::string& s, const char* what) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw InvalidArgument(std::string("bad ") + what + " value '" + s + "'");
  }
  return v;
}

ThresholdRule parse_threshold(const std::string& s) {
  if (s == "2L0") return ThresholdRule::twice_target_loss();
  if (s.rfind("eps0:", 0) == 0) {
    const double eps0 = parse_real(s.substr(5), "threshold");
    if (!(eps0 >= 0.0)) throw InvalidArgument("threshold eps0 must be non-negative");
    return ThresholdRule::eps0_sigma2(eps0);
  }
  throw InvalidArgument("threshold must be 2L0 or eps0:<real>, got '" + s + "'");
}

RankSpec parse_rank(const std::string& s) {
  if (s == "auto") return RankSpec::automatic();
  return RankSpec::exactly(parse_index(s, "rank"));
}

std::vector<std::size_t> parse_source_set(const std::string& s, std::size_t k) {
  std::vector<std::size_t> out;
  if (s.empty() || s == "none") return out;
  for (const auto& item : split_list(s)) {
    const std::size_t idx = parse_index(item, "sources-set");
    if (idx < 1 || idx > k) {
      throw InvalidArgument("sources-set index " + item + " outside 1.." + std::to_string(k));
    }
    out.push_back(idx);
  }
  return out;
}

std::string join(const std::vector<std::size_t>& v, char sep) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += sep;
    s += std::to_string(v[i]);
  }
  return s;
}

std::size_t thread_count(const RunConfig& c) { return c.threads ? c.threads : default_threads(); }

TransferConfig transfer_config(const RunConfig& c) {
  TransferConfig t;
  if (c.mode == "farm") {
    t.mode = FitMode::farm;
  } else if (c.mode == "lasso") {
    t.mode = FitMode::plain_lasso;
  } else {
    throw InvalidArgument("mode must be farm or lasso, got '" + c.mode + "'");
  }
  t.rank = parse_rank(c.rank);
  if (!(c.lambda_c > 0.0)) throw InvalidArgument("lambda-c must be positive");
  t.lambda_c = c.lambda_c;
  if (c.folds < 2) throw InvalidArgument("folds must be at least 2");
  t.folds = c.folds;
  t.threshold = parse_threshold(c.threshold);
  t.detection_seed = c.seed;
  t.threads = thread_count(c);
  return t;
}

struct Inputs {
  Dataset target;
  std::vector<Dataset> sources;
};

Inputs load_inputs(const RunConfig& c, bool need_sources) {
  if (c.target.empty()) throw InvalidArgument("--target is required");
  if (need_sources && c.sources.empty()) throw InvalidArgument("at least one --source is required");
  Inputs in;
  in.target = io::ingest_dataset(c.target, c.response, 0);
  for (std::size_t k = 0; k < c.sources.size(); ++k) {
    in.sources.push_back(io::ingest_dataset(c.sources[k], c.response, k + 1));
    if (in.sources.back().x.cols() != in.target.x.cols()) {
      throw InvalidArgument(c.sources[k] + ": has " + std::to_string(in.sources.back().x.cols()) +
                            " covariates, target has " + std::to_string(in.target.x.cols()));
    }
  }
  return in;
}

void write_fit(const fs::path& dir, const TransferFit& fit) {
  io::CsvTable t;
  t.header = {"index", "w_hat", "delta_hat", "beta_hat"};
  for (std::size_t j = 0; j < fit.beta_hat.size(); ++j) {
    t.rows.push_back({std::to_string(j + 1), format_double(fit.w_hat[j]),
                      format_double(fit.delta_hat[j]), format_double(fit.beta_hat[j])});
  }
  io::write_table(dir / "fit.csv", t);
}

void write_detection(const fs::path& dir, const DetectionReport& r) {
  io::CsvTable t;
  t.header = {"k", "loss", "included"};
  t.rows.push_back({"0", format_double(r.target_loss), "1"});
  for (std::size_t k = 1; k <= r.source_losses.size(); ++k) {
    const bool in = std::binary_search(r.selected.begin(), r.selected.end(), k);
    t.rows.push_back({std::to_string(k), format_double(r.source_losses[k - 1]), in ? "1" : "0"});
  }
  io::write_table(dir / "detection.csv", t);
}

void report_fit(std::ostream& out, const TransferFit& fit) {
  out << "sources=" << (fit.source_set.empty() ? "none" : join(fit.source_set, ','))
      << " sigma_hat=" << format_double(fit.sigma_hat)
      << " lambda_w=" << format_double(fit.lambda_w)
      << " lambda_delta=" << format_double(fit.lambda_delta) << '\n';
}

void report_detection(std::ostream& out, const DetectionReport& r) {
  out << "target_loss=" << format_double(r.target_loss)
      << " threshold=" << format_double(r.threshold)
      << " selected=" << (r.selected.empty() ? "none" : join(r.selected, ',')) << '\n';
}

void cmd_fit(const RunConfig& c, const fs::path& dir, std::ostream& out) {
  const TransferConfig cfg = transfer_config(c);
  const Inputs in = load_inputs(c, false);
  const auto set = parse_source_set(c.sources_set, in.sources.size());
  const TransferFit fit = oracle_trans_farm(in.target, in.sources, set, cfg);
  fs::create_directories(dir);
  write_fit(dir, fit);
  report_fit(out, fit);
}

void cmd_detect(const RunConfig& c, const fs::path& dir, std::ostream& out) {
  const TransferConfig cfg = transfer_config(c);
  const Inputs in = load_inputs(c, true);
  const DetectionReport r = detect_sources(in.target, in.sources, cfg);
  fs::create_directories(dir);
  write_detection(dir, r);
  report_detection(out, r);
}

void cmd_transfer(const RunConfig& c, const fs::path& dir, std::ostream& out) {
  const TransferConfig cfg = transfer_config(c);
  const Inputs in = load_inputs(c, true);
  const auto [fit, r] = trans_farm(in.target, in.sources, cfg);
  fs::create_directories(dir);
  write_fit(dir, fit);
  write_detection(dir, r);
  report_detection(out, r);
  report_fit(out, fit);
}

void cmd_infer(const RunConfig& c, const fs::path& dir, std::ostream& out) {
  const TransferConfig cfg = transfer_config(c);
  if (!(c.alpha > 0.0 && c.alpha < 1.0)) throw InvalidArgument("alpha must lie in (0, 1)");
  if (c.bootstrap < 1) throw InvalidArgument("B must be at least 1");
  const Inputs in = load_inputs(c, false);
  const std::size_t p = in.target.x.cols();

  InferenceConfig icfg;
  icfg.alpha = c.alpha;
  icfg.bootstrap = c.bootstrap;
  icfg.studentized = c.studentized;
  icfg.seed = c.seed;
  icfg.threads = cfg.threads;
  if (c.group != "all") {
    for (const auto& item : split_list(c.group)) {
      const std::size_t idx = parse_index(item, "group");
      if (idx < 1 || idx > p) {
        throw InvalidArgument("group index " + item + " outside 1.." + std::to_string(p));
      }
      icfg.group.push_back(idx - 1);
    }
    if (icfg.group.empty()) throw InvalidArgument("empty --group");
  }

  const PreparedData data = prepare(in.target, in.sources, cfg);
  std::optional<DetectionReport> report;
  TransferFit fit;
  if (c.sources_set.empty() && !in.sources.empty()) {
    auto [f, r] = trans_farm(data, cfg);
    fit = std::move(f);
    report = std::move(r);
  } else {
    fit = oracle_trans_farm(data, parse_source_set(c.sources_set, in.sources.size()), cfg);
  }
  const InferenceResult res = infer(fit, data.target, icfg);

  fs::create_directories(dir);
  io::CsvTable t;
  t.header = {"index", "beta_tilde", "lo", "hi"};
  for (const auto& ci : res.intervals) {
    t.rows.push_back({std::to_string(ci.index + 1), format_double(res.beta_tilde[ci.index]),
                      format_double(ci.lo), format_double(ci.hi)});
  }
  io::write_table(dir / "intervals.csv", t);
  std::ostringstream line;
  line << "reject=" << (res.reject ? "true" : "false") << " statistic=" << format_double(res.statistic)
       << " critical=" << format_double(res.test_critical) << '\n';
  {
    std::ofstream f(dir / "test.txt", std::ios::binary | std::ios::trunc);
    if (!f) throw InvalidArgument("cannot write " + (dir / "test.txt").string());
    f << line.str();
  }
  if (report) report_detection(out, *report);
  report_fit(out, fit);
  out << line.str();
}

SimConfig sim_config(const RunConfig& c) {
  SimConfig s;
  s.n0 = c.sim_n0;
  s.nk = c.sim_nk;
  s.p = c.sim_p;
  s.s = c.sim_s;
  s.sources = c.sim_k;
  s.eta = c.sim_eta;
  s.rank = c.sim_r;
  s.signal = c.sim_signal;
  if (c.sim_gamma0.empty()) {
    s.gamma0.assign(c.sim_r, 0.5);
  } else {
    s.gamma0.clear();
    for (const auto& item : split_list(c.sim_gamma0)) s.gamma0.push_back(parse_real(item, "sim-gamma0"));
  }
  s.gamma_informative = c.sim_gamma_informative;
  s.gamma_adversarial = c.sim_gamma_adversarial;
  s.adversarial_scale = c.sim_adversarial_scale;
  s.loading_bound = c.sim_loading_bound;
  s.toeplitz_rho = c.sim_rho;
  s.eps_sd = c.sim_eps_sd;
  s.noise_sd = c.sim_noise_sd;
  s.replications = c.sim_replications;
  s.base_seed = c.seed;
  if (c.sim_roster != "all") {
    s.roster.clear();
    for (const auto& item : split_list(c.sim_roster)) {
      const auto e = parse_estimator(item);
      if (!e) throw InvalidArgument("unknown estimator '" + item + "'");
      if (std::find(s.roster.begin(), s.roster.end(), *e) == s.roster.end()) s.roster.push_back(*e);
    }
    std::sort(s.roster.begin(), s.roster.end());
  }
  if (!(c.sim_lambda_c > 0.0)) throw InvalidArgument("sim-lambda-c must be positive");
  s.lambda_c = c.sim_lambda_c;
  s.folds = c.sim_folds;
  s.threshold = parse_threshold(c.sim_threshold);
  s.fix_rank = c.sim_fix_rank;
  s.fix_informative_set = c.sim_fix_a;
  s.record_timing = c.sim_record_timing;
  s.threads = thread_count(c);
  return s;
}

void cmd_simulate(const RunConfig& c, const fs::path& dir, std::ostream& out) {
  SimConfig s = sim_config(c);
  std::vector<std::size_t> sizes;
  if (c.sim_a.empty()) {
    sizes.resize(s.sources + 1);
    std::iota(sizes.begin(), sizes.end(), std::size_t{0});
  } else {
    for (const auto& item : split_list(c.sim_a)) sizes.push_back(parse_index(item, "sim-A"));
  }
  for (std::size_t a : sizes) {
    s.informative = a;
    s.validate();
  }
  const SimResult res = run_sweep(s, sizes);

  fs::create_directories(dir);
  io::CsvTable rows;
  rows.header = {"estimator", "A_size", "replication", "l1_error", "l2_error", "seconds"};
  io::CsvTable sets;
  sets.header = {"estimator", "A_size", "replication", "selected", "informative", "exact"};
  for (const auto& r : res.rows) {
    const std::string name(estimator_name(r.estimator));
    rows.rows.push_back({name, std::to_string(r.informative), std::to_string(r.replication),
                         format_double(r.l1_error), format_double(r.l2_error),
                         format_double(r.seconds)});
    if (r.estimator == Estimator::trans_farm || r.estimator == Estimator::trans_lasso) {
      sets.rows.push_back({name, std::to_string(r.informative), std::to_string(r.replication),
                           join(r.selected, ' '), join(r.truth_set, ' '),
                           r.selected == r.truth_set ? "1" : "0"});
    }
  }
  io::CsvTable summary;
  summary.header = {"estimator", "A_size", "count", "mean_l1", "se_l1", "mean_l2", "se_l2"};
  for (const auto& a : res.summary) {
    summary.rows.push_back({std::string(estimator_name(a.estimator)), std::to_string(a.informative),
                            std::to_string(a.count), format_double(a.mean_l1),
                            format_double(a.se_l1), format_double(a.mean_l2),
                            format_double(a.se_l2)});
  }
  io::write_table(dir / "results.csv", rows);
  io::write_table(dir / "summary.csv", summary);
  io::write_table(dir / "detections.csv", sets);
  out << "replications=" << s.replications << " failed=" << res.failed_replications
      << " rows=" << res.rows.size() << '\n';
  for (const auto& f : res.failures) out << "failure: " << f << '\n';
}

void add_shared(CLI::App& app, RunConfig& c) {
  app.set_config("--config", "", "Read key = value defaults from this file");
  app.allow_config_extras(CLI::config_extras_mode::error);
  // List values such as `sim-roster = a,b` stay one string; the parsers below split them.
  auto format = std::make_shared<CLI::ConfigTOML>();
  format->arrayDelimiter(';');
  app.config_formatter(format);
  app.add_option("--seed", c.seed, "Random seed")->capture_default_str();
  app.add_option("--out", c.out, "Output directory")->capture_default_str();
  app.add_option("--threads", c.threads, "Worker threads (0: all cores)")->capture_default_str();
}

void add_data(CLI::App& app, RunConfig& c) {
  app.add_option("--target", c.target, "Target CSV");
  app.add_option("--source", c.sources, "Source CSV (repeatable)");
  app.add_option("--response", c.response, "Response column name")->capture_default_str();
  app.add_option("--rank", c.rank, "Factor count: integer or auto")->capture_default_str();
  app.add_option("--lambda-c", c.lambda_c, "Penalty constant")->capture_default_str();
  app.add_option("--folds", c.folds, "Detection folds")->capture_default_str();
  app.add_option("--threshold", c.threshold, "2L0 or eps0:<real>")->capture_default_str();
  app.add_option("--mode", c.mode, "farm or lasso")->capture_default_str();
}

void add_sim(CLI::App& app, RunConfig& c) {
  app.add_option("--sim-n0", c.sim_n0, "Target sample size")->capture_default_str();
  app.add_option("--sim-nk", c.sim_nk, "Source sample size")->capture_default_str();
  app.add_option("--sim-p", c.sim_p, "Dimension")->capture_default_str();
  app.add_option("--sim-s", c.sim_s, "Sparsity")->capture_default_str();
  app.add_option("--sim-K", c.sim_k, "Number of sources")->capture_default_str();
  app.add_option("--sim-A", c.sim_a, "Informative-set sizes, comma-separated (default 0..K)");
  app.add_option("--sim-eta", c.sim_eta, "Contrast level")->capture_default_str();
  app.add_option("--sim-r", c.sim_r, "True number of factors")->capture_default_str();
  app.add_option("--sim-signal", c.sim_signal, "Nonzero coefficient value")->capture_default_str();
  app.add_option("--sim-gamma0", c.sim_gamma0, "Target factor coefficients (default 0.5 each)");
  app.add_option("--sim-gamma-informative", c.sim_gamma_informative)->capture_default_str();
  app.add_option("--sim-gamma-adversarial", c.sim_gamma_adversarial)->capture_default_str();
  app.add_option("--sim-adversarial-scale", c.sim_adversarial_scale)->capture_default_str();
  app.add_option("--sim-loading-bound", c.sim_loading_bound)->capture_default_str();
  app.add_option("--sim-rho", c.sim_rho, "Toeplitz correlation")->capture_default_str();
  app.add_option("--sim-eps-sd", c.sim_eps_sd, "Source covariance perturbation sd")
      ->capture_default_str();
  app.add_option("--sim-noise-sd", c.sim_noise_sd)->capture_default_str();
  app.add_option("--sim-replications", c.sim_replications)->capture_default_str();
  app.add_option("--sim-roster", c.sim_roster, "Estimators, comma-separated, or all")
      ->capture_default_str();
  app.add_option("--sim-lambda-c", c.sim_lambda_c)->capture_default_str();
  app.add_option("--sim-folds", c.sim_folds)->capture_default_str();
  app.add_option("--sim-threshold", c.sim_threshold)->capture_default_str();
  app.add_option("--sim-fix-rank", c.sim_fix_rank, "Use the true rank")->capture_default_str();
  app.add_option("--sim-fix-A", c.sim_fix_a, "Keep the informative set fixed across replications")
      ->capture_default_str();
  app.add_option("--sim-record-timing", c.sim_record_timing, "Fill the seconds column")
      ->capture_default_str();
}

constexpr const char* kUsage =
    "usage: tfarm <fit|detect|transfer|infer|simulate> [options]\n"
    "       tfarm <command> --help\n";

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  if (args.empty() || args[0] == "--help" || args[0] == "-h") {
    (args.empty() ? err : out) << kUsage;
    return args.empty() ? 1 : 0;
  }
  Command cmd;
  const std::string& name = args[0];
  if (name == "fit") {
    cmd = Command::fit;
  } else if (name == "detect") {
    cmd = Command::detect;
  } else if (name == "transfer") {
    cmd = Command::transfer;
  } else if (name == "infer") {
    cmd = Command::infer;
  } else if (name == "simulate") {
    cmd = Command::simulate;
  } else {
    err << "unknown command '" << name << "'\n" << kUsage;
    return 1;
  }

  RunConfig c;
  CLI::App app("tfarm " + name, "tfarm " + name);
  add_shared(app, c);
  switch (cmd) {
    case Command::fit:
      add_data(app, c);
      app.add_option("--sources-set", c.sources_set, "Source indices, comma-separated, or none");
      break;
    case Command::detect:
    case Command::transfer:
      add_data(app, c);
      break;
    case Command::infer:
      add_data(app, c);
      app.add_option("--sources-set", c.sources_set, "Fixed source set instead of detection");
      app.add_option("--alpha", c.alpha, "Level")->capture_default_str();
      app.add_option("--B", c.bootstrap, "Bootstrap draws")->capture_default_str();
      app.add_option("--group", c.group, "all or 1-based indices i,j,k")->capture_default_str();
      app.add_option("--studentized", c.studentized, "Studentized intervals")->capture_default_str();
      break;
    case Command::simulate:
      add_sim(app, c);
      break;
  }

  std::vector<std::string> argv_store;
  argv_store.push_back("tfarm " + name);
  argv_store.insert(argv_store.end(), args.begin() + 1, args.end());
  std::vector<const char*> argv;
  for (const auto& a : argv_store) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  try {
    const fs::path dir(c.out);
    switch (cmd) {
      case Command::fit: cmd_fit(c, dir, out); break;
      case Command::detect: cmd_detect(c, dir, out); break;
      case Command::transfer: cmd_transfer(c, dir, out); break;
      case Command::infer: cmd_infer(c, dir, out); break;
      case Command::simulate: cmd_simulate(c, dir, out); break;
    }
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace tfarm::cli
