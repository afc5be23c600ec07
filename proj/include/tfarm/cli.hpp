#pragma once
// Command-line driver: tfarm <fit|detect|transfer|infer|simulate> [flags].
// Values come from flags, then an optional `key = value` config file (keys are
// the long flag names without dashes), then the defaults below.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace tfarm::cli {

struct RunConfig {
  std::string config;
  std::uint64_t seed = 2024;
  std::string out = ".";
  std::size_t threads = 0;  // 0: available parallelism

  std::string target;
  std::vector<std::string> sources;
  std::string response = "y";
  std::string rank = "auto";
  double lambda_c = 0.5;
  std::size_t folds = 3;
  std::string threshold = "2L0";
  std::string mode = "farm";
  /// Comma-separated 1-based source indices or "none". Unset means the empty
  /// set for `fit` and source detection for `infer`.
  std::string sources_set;

  double alpha = 0.05;
  std::size_t bootstrap = 500;
  std::string group = "all";
  bool studentized = true;

  std::size_t sim_n0 = 300;
  std::size_t sim_nk = 300;
  std::size_t sim_p = 500;
  std::size_t sim_s = 20;
  std::size_t sim_k = 10;
  std::string sim_a = "";  // empty: 0..K
  double sim_eta = 5.0;
  std::size_t sim_r = 2;
  double sim_signal = 0.5;
  std::string sim_gamma0 = "";  // empty: 0.5 repeated r times
  double sim_gamma_informative = 0.1;
  double sim_gamma_adversarial = 0.5;
  double sim_adversarial_scale = 2.0;
  double sim_loading_bound = 1.0;
  double sim_rho = 0.5;
  double sim_eps_sd = 0.3;
  double sim_noise_sd = 1.0;
  std::size_t sim_replications = 100;
  std::string sim_roster = "all";
  double sim_lambda_c = 0.5;
  std::size_t sim_folds = 3;
  std::string sim_threshold = "2L0";
  bool sim_fix_rank = false;
  bool sim_fix_a = false;
  bool sim_record_timing = false;
};

/// args excludes the program name. Returns 0 on success, 1 on a usage or input
/// error, 2 on a numerical failure.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tfarm::cli
