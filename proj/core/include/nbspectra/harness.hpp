#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "nbspectra/ensembles.hpp"

namespace nbspectra {

enum class ExperimentKind {
  tail_rho_b,
  norm_curve,
  crossover,
  concentration,
  directed_outlier,
  moment_envelope,
};

std::string experiment_name(ExperimentKind k);
const std::vector<std::string>& experiment_names();

/// Config or validation failure; `line` is 1-based, 0 when the problem is
/// not tied to one line.
struct ConfigError : std::runtime_error {
  int line = 0;
  ConfigError(int line_no, const std::string& msg);
};

/// Flat key = value experiment description. Lists are comma-separated;
/// '#' starts a comment. Keys: experiment, n, d, epsilon, ell, trials,
/// master_seed, output, timings, threads.
struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::tail_rho_b;
  std::vector<int> n_values;
  std::vector<double> d_values;        // mean-degree grid, p = d / n
  std::vector<double> epsilon_values;  // tail and directed experiments
  std::vector<int> ell_values;         // moment-envelope
  int trials = 1;
  std::uint64_t master_seed = 1;
  std::string output_path;
  bool timings = false;  // real runtimes are never deterministic; opt in
  int threads = 1;
};

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig parse_config_file(const std::string& path);

/// One CSV row. Aggregate rows carry trial = -1 and seed = 0; epsilon is 0
/// wherever the statistic does not depend on it.
struct TrialRecord {
  std::string experiment;
  int n = 0;
  double d = 0.0;
  double q = 0.0;
  double kappa = 0.0;
  double epsilon = 0.0;
  int trial = 0;
  std::uint64_t seed = 0;
  std::string stat_name;
  double stat_value = 0.0;
  long long runtime_ms = 0;
};

std::vector<TrialRecord> run_experiment(const ExperimentConfig& cfg);

std::vector<TrialRecord> run_tail_experiment(const ExperimentConfig& cfg);
std::vector<TrialRecord> run_norm_curve(const ExperimentConfig& cfg);
std::vector<TrialRecord> run_crossover(const ExperimentConfig& cfg);
std::vector<TrialRecord> run_concentration(const ExperimentConfig& cfg);
std::vector<TrialRecord> run_directed_outlier(const ExperimentConfig& cfg);
std::vector<TrialRecord> run_moment_envelope(const ExperimentConfig& cfg);

/// CSV with the fixed header
/// experiment,n,d,q,kappa,epsilon,trial,seed,stat_name,stat_value,runtime_ms.
/// Numbers print in shortest round-trip form, so identical records yield
/// identical bytes. Non-finite values throw.
std::string format_results(const std::vector<TrialRecord>& records);
void write_results(const std::vector<TrialRecord>& records, const std::string& path);
std::vector<TrialRecord> read_results(const std::string& path);

struct WilsonInterval {
  double lo = 0.0;
  double hi = 1.0;
};
WilsonInterval wilson_interval(int successes, int trials, double z = 1.96);

/// h(t) = (1 + t) log(1 + t) - t, the Bennett tail exponent profile.
double bennett_h(double t);

/// Thread count actually used: the NBSPECTRA_THREADS environment variable
/// overrides `requested`; 0 means one thread per hardware core.
int resolve_threads(int requested);

}  // namespace nbspectra
