#include "nbspectra/harness.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "nbspectra/nbop.hpp"
#include "nbspectra/spectra.hpp"
#include "nbspectra/walks.hpp"

namespace nbspectra {

namespace {

const std::vector<std::pair<ExperimentKind, std::string>>& kind_table() {
  static const std::vector<std::pair<ExperimentKind, std::string>> table = {
      {ExperimentKind::tail_rho_b, "tail-rho-b"},
      {ExperimentKind::norm_curve, "norm-curve"},
      {ExperimentKind::crossover, "crossover"},
      {ExperimentKind::concentration, "concentration"},
      {ExperimentKind::directed_outlier, "directed-outlier"},
      {ExperimentKind::moment_envelope, "moment-envelope"},
  };
  return table;
}

}  // namespace

std::string experiment_name(ExperimentKind k) {
  for (const auto& [kind, name] : kind_table())
    if (kind == k) return name;
  return "?";
}

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& [kind, name] : kind_table()) out.push_back(name);
    return out;
  }();
  return names;
}

ConfigError::ConfigError(int line_no, const std::string& msg)
    : std::runtime_error(line_no > 0 ? "line " + std::to_string(line_no) + ": " + msg
                                     : msg),
      line(line_no) {}

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

long long parse_int(const std::string& s, int line) {
  long long v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw ConfigError(line, "expected an integer, got '" + s + "'");
  return v;
}

double parse_double(const std::string& s, int line) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw ConfigError(line, "expected a number, got '" + s + "'");
  return v;
}

bool parse_flag(const std::string& s, int line) {
  if (s == "on" || s == "true" || s == "1") return true;
  if (s == "off" || s == "false" || s == "0") return false;
  throw ConfigError(line, "expected on/off, got '" + s + "'");
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  bool have_experiment = false;
  std::istringstream is(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(is, raw)) {
    ++line_no;
    const std::size_t hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    const std::string line = trim(raw);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(line_no, "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (value.empty()) throw ConfigError(line_no, "empty value for '" + key + "'");

    if (key == "experiment") {
      bool known = false;
      for (const auto& [kind, name] : kind_table())
        if (name == value) {
          cfg.experiment = kind;
          known = true;
        }
      if (!known) throw ConfigError(line_no, "unknown experiment '" + value + "'");
      have_experiment = true;
    } else if (key == "n") {
      cfg.n_values.clear();
      for (const std::string& s : split_list(value))
        cfg.n_values.push_back(static_cast<int>(parse_int(s, line_no)));
    } else if (key == "d") {
      cfg.d_values.clear();
      for (const std::string& s : split_list(value))
        cfg.d_values.push_back(parse_double(s, line_no));
    } else if (key == "epsilon") {
      cfg.epsilon_values.clear();
      for (const std::string& s : split_list(value))
        cfg.epsilon_values.push_back(parse_double(s, line_no));
    } else if (key == "ell") {
      cfg.ell_values.clear();
      for (const std::string& s : split_list(value))
        cfg.ell_values.push_back(static_cast<int>(parse_int(s, line_no)));
    } else if (key == "trials") {
      cfg.trials = static_cast<int>(parse_int(value, line_no));
    } else if (key == "master_seed") {
      unsigned long long v = 0;
      auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
      if (ec != std::errc() || p != value.data() + value.size())
        throw ConfigError(line_no, "expected an unsigned integer, got '" + value + "'");
      cfg.master_seed = v;
    } else if (key == "output") {
      cfg.output_path = value;
    } else if (key == "timings") {
      cfg.timings = parse_flag(value, line_no);
    } else if (key == "threads") {
      cfg.threads = static_cast<int>(parse_int(value, line_no));
    } else {
      throw ConfigError(line_no, "unknown key '" + key + "'");
    }
  }
  if (!have_experiment) throw ConfigError(0, "missing experiment");
  if (cfg.trials < 1) throw ConfigError(0, "trials must be >= 1");
  if (cfg.n_values.empty()) throw ConfigError(0, "missing n grid");
  for (int n : cfg.n_values)
    if (n < 2) throw ConfigError(0, "n must be >= 2");
  if (cfg.experiment != ExperimentKind::moment_envelope || !cfg.d_values.empty()) {
    if (cfg.d_values.empty()) throw ConfigError(0, "missing d grid");
    for (double d : cfg.d_values)
      if (!(d > 0.0)) throw ConfigError(0, "d values must be positive");
  }
  return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError(0, "cannot open config file: " + path);
  std::ostringstream buf;
  buf << is.rdbuf();
  return parse_config(buf.str());
}

namespace {

std::string format_double(double v) {
  if (!std::isfinite(v)) throw std::runtime_error("non-finite value in CSV output");
  char buf[40];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}

}  // namespace

std::string format_results(const std::vector<TrialRecord>& records) {
  std::string out =
      "experiment,n,d,q,kappa,epsilon,trial,seed,stat_name,stat_value,runtime_ms\n";
  for (const TrialRecord& r : records) {
    out += r.experiment;
    out += ',';
    out += std::to_string(r.n);
    out += ',';
    out += format_double(r.d);
    out += ',';
    out += format_double(r.q);
    out += ',';
    out += format_double(r.kappa);
    out += ',';
    out += format_double(r.epsilon);
    out += ',';
    out += std::to_string(r.trial);
    out += ',';
    out += std::to_string(r.seed);
    out += ',';
    out += r.stat_name;
    out += ',';
    out += format_double(r.stat_value);
    out += ',';
    out += std::to_string(r.runtime_ms);
    out += '\n';
  }
  return out;
}

void write_results(const std::vector<TrialRecord>& records, const std::string& path) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write results file: " + path);
  os << format_results(records);
}

std::vector<TrialRecord> read_results(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read results file: " + path);
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("empty results file: " + path);
  std::vector<TrialRecord> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f = split_list(line);  // stat names contain no commas
    if (f.size() != 11) throw std::runtime_error("malformed results row: " + line);
    TrialRecord r;
    r.experiment = f[0];
    r.n = static_cast<int>(parse_int(f[1], 0));
    r.d = parse_double(f[2], 0);
    r.q = parse_double(f[3], 0);
    r.kappa = parse_double(f[4], 0);
    r.epsilon = parse_double(f[5], 0);
    r.trial = static_cast<int>(parse_int(f[6], 0));
    r.seed = static_cast<std::uint64_t>(std::stoull(f[7]));
    r.stat_name = f[8];
    r.stat_value = parse_double(f[9], 0);
    r.runtime_ms = parse_int(f[10], 0);
    out.push_back(std::move(r));
  }
  return out;
}

WilsonInterval wilson_interval(int successes, int trials, double z) {
  if (trials <= 0) throw std::invalid_argument("wilson_interval: trials must be positive");
  if (successes < 0 || successes > trials)
    throw std::invalid_argument("wilson_interval: successes out of [0, trials]");
  const double nt = trials;
  const double phat = static_cast<double>(successes) / nt;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nt;
  const double center = (phat + z2 / (2.0 * nt)) / denom;
  const double half =
      z * std::sqrt(phat * (1.0 - phat) / nt + z2 / (4.0 * nt * nt)) / denom;
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

double bennett_h(double t) {
  if (t <= 0.0) return 0.0;
  return (1.0 + t) * std::log1p(t) - t;
}

int resolve_threads(int requested) {
  if (const char* env = std::getenv("NBSPECTRA_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v <= 0 || v > 4096)
      throw std::invalid_argument("NBSPECTRA_THREADS must be a positive integer");
    return static_cast<int>(v);
  }
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

namespace {

/// Runs fn(t) for t in [0, trials); each call fills its own slot, so the
/// combined record order is independent of the thread count.
template <class Fn>
std::vector<std::vector<TrialRecord>> run_trials(int trials, int threads, Fn fn) {
  std::vector<std::vector<TrialRecord>> slots(trials);
  const int workers = std::max(1, std::min(threads, trials));
  if (workers == 1) {
    for (int t = 0; t < trials; ++t) slots[t] = fn(t);
    return slots;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr first_error;
  std::mutex err_mutex;
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      while (true) {
        const int t = next.fetch_add(1);
        if (t >= trials) return;
        try {
          slots[t] = fn(t);
        } catch (...) {
          std::lock_guard<std::mutex> lock(err_mutex);
          if (!first_error) first_error = std::current_exception();
          return;
        }
      }
    });
  for (std::thread& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
  return slots;
}

long long elapsed_ms(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::steady_clock::now() - t0)
      .count();
}

std::uint64_t stream_index(int grid_point, int trial) {
  return 1000003ull * static_cast<std::uint64_t>(grid_point) +
         static_cast<std::uint64_t>(trial);
}

double quantile(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  const int k = static_cast<int>(v.size());
  const int idx = std::clamp(static_cast<int>(std::ceil(p * k)) - 1, 0, k - 1);
  return v[idx];
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double sample_sd(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

EnsembleSpec homogeneous_spec(int n, double d, bool directed) {
  if (d > n) throw ConfigError(0, "d exceeds n; p = d/n must be at most 1");
  ProbabilityProfile prof = ProbabilityProfile::homogeneous(n, d / n);
  return directed ? EnsembleSpec::directed_er(std::move(prof))
                  : EnsembleSpec::hermitian_er(std::move(prof));
}

/// Shared per-runner context: fills the constant columns of a record.
struct Emitter {
  std::string experiment;
  int n = 0;
  double d = 0.0, q = 0.0, kappa = 0.0;
  TrialRecord row(double eps, int trial, std::uint64_t seed, std::string stat,
                  double value, long long ms = 0) const {
    TrialRecord r;
    r.experiment = experiment;
    r.n = n;
    r.d = d;
    r.q = q;
    r.kappa = kappa;
    r.epsilon = eps;
    r.trial = trial;
    r.seed = seed;
    r.stat_name = std::move(stat);
    r.stat_value = value;
    r.runtime_ms = ms;
    return r;
  }
};

void append_all(std::vector<TrialRecord>& out,
                std::vector<std::vector<TrialRecord>>& slots) {
  for (auto& s : slots)
    for (auto& r : s) out.push_back(std::move(r));
}

double norm_via_lanczos(const CenteredErOperator& op, std::uint64_t seed) {
  SpectralConfig sc;
  sc.tol = 1e-8;
  sc.max_iter = 400;
  sc.seed = seed;
  const LanczosResult lr = lanczos_extremes(
      op.n(),
      [&](const Eigen::VectorXd& x, Eigen::VectorXd& y) { op.apply(x, y); }, sc);
  return std::max(std::abs(lr.lambda_min), std::abs(lr.lambda_max));
}

}  // namespace

std::vector<TrialRecord> run_tail_experiment(const ExperimentConfig& cfg) {
  if (cfg.epsilon_values.empty()) throw ConfigError(0, "tail-rho-b needs an epsilon grid");
  for (int n : cfg.n_values)
    if (n > 2048) throw ConfigError(0, "tail-rho-b materializes H; use n <= 2048");
  const int threads = resolve_threads(cfg.threads);
  std::vector<TrialRecord> out;
  int gp = 0;
  for (int n : cfg.n_values) {
    for (double d : cfg.d_values) {
      const EnsembleSpec spec = homogeneous_spec(n, d, false);
      Emitter em{experiment_name(cfg.experiment), n, d, spec.params.q,
                 spec.params.kappa};
      std::vector<double> rhos(cfg.trials, 0.0);
      auto slots = run_trials(cfg.trials, threads, [&](int t) {
        const auto t0 = std::chrono::steady_clock::now();
        const std::uint64_t idx = stream_index(gp, t);
        const std::uint64_t seed = Rng::derive(cfg.master_seed, idx);
        const ErSample s = sample_inhomogeneous_er(spec, {cfg.master_seed, idx});
        SpectralConfig sc;
        sc.tol = 1e-8;
        sc.max_iter = 1500;
        sc.seed = seed;
        const NbOperator b(s.h);
        rhos[t] = spectral_radius(b, sc).rho;
        std::vector<TrialRecord> rows;
        rows.push_back(em.row(0.0, t, seed, "rho_b", rhos[t],
                              cfg.timings ? elapsed_ms(t0) : 0));
        return rows;
      });
      append_all(out, slots);
      std::vector<double> eps_sorted(cfg.epsilon_values);
      std::sort(eps_sorted.begin(), eps_sorted.end());
      double prev_freq = 1.0;
      bool monotone = true;
      for (double eps : eps_sorted) {
        int k = 0;
        for (double r : rhos) k += r >= 1.0 + eps;
        const double freq = static_cast<double>(k) / cfg.trials;
        monotone &= freq <= prev_freq + 1e-12;
        prev_freq = freq;
        const WilsonInterval w = wilson_interval(k, cfg.trials);
        out.push_back(em.row(eps, -1, 0, "freq_exceed", freq));
        out.push_back(em.row(eps, -1, 0, "wilson_lo", w.lo));
        out.push_back(em.row(eps, -1, 0, "wilson_hi", w.hi));
      }
      out.push_back(em.row(0.0, -1, 0, "freq_monotone_eps", monotone ? 1.0 : 0.0));
      ++gp;
    }
  }
  return out;
}

std::vector<TrialRecord> run_norm_curve(const ExperimentConfig& cfg) {
  const int threads = resolve_threads(cfg.threads);
  std::vector<TrialRecord> out;
  double c_max = 0.0;
  int gp = 0;
  for (int n : cfg.n_values) {
    for (double d : cfg.d_values) {
      const EnsembleSpec spec = homogeneous_spec(n, d, false);
      Emitter em{experiment_name(cfg.experiment), n, d, spec.params.q_raw,
                 spec.params.kappa};
      std::vector<double> norms(cfg.trials, 0.0);
      auto slots = run_trials(cfg.trials, threads, [&](int t) {
        const auto t0 = std::chrono::steady_clock::now();
        const std::uint64_t idx = stream_index(gp, t);
        const std::uint64_t seed = Rng::derive(cfg.master_seed, idx);
        const CenteredErOperator op(spec, {cfg.master_seed, idx});
        norms[t] = norm_via_lanczos(op, seed);
        std::vector<TrialRecord> rows;
        rows.push_back(em.row(0.0, t, seed, "norm_h", norms[t],
                              cfg.timings ? elapsed_ms(t0) : 0));
        return rows;
      });
      append_all(out, slots);
      const double mean = mean_of(norms);
      const double eta = std::sqrt(std::log(static_cast<double>(n))) / spec.params.q_raw;
      const double c_fit = (mean - 2.0) * std::sqrt(std::max(1.0, std::log(eta))) / eta;
      c_max = std::max(c_max, c_fit);
      out.push_back(em.row(0.0, -1, 0, "mean_norm", mean));
      out.push_back(em.row(0.0, -1, 0, "eta", eta));
      out.push_back(em.row(0.0, -1, 0, "c_fitted", c_fit));
      ++gp;
    }
  }
  Emitter all{experiment_name(cfg.experiment), 0, 0.0, 0.0, 0.0};
  out.push_back(all.row(0.0, -1, 0, "c_fitted_max", c_max));
  return out;
}

std::vector<TrialRecord> run_crossover(const ExperimentConfig& cfg) {
  const int threads = resolve_threads(cfg.threads);
  std::vector<TrialRecord> out;
  int gp = 0;
  for (int n : cfg.n_values) {
    double prev_mean = std::numeric_limits<double>::infinity();
    bool decreasing = true;
    for (double d : cfg.d_values) {
      const EnsembleSpec spec = homogeneous_spec(n, d, false);
      Emitter em{experiment_name(cfg.experiment), n, d, spec.params.q_raw,
                 spec.params.kappa};
      std::vector<double> norms(cfg.trials, 0.0), l2(cfg.trials, 0.0);
      auto slots = run_trials(cfg.trials, threads, [&](int t) {
        const auto t0 = std::chrono::steady_clock::now();
        const std::uint64_t idx = stream_index(gp, t);
        const std::uint64_t seed = Rng::derive(cfg.master_seed, idx);
        const CenteredErOperator op(spec, {cfg.master_seed, idx});
        norms[t] = norm_via_lanczos(op, seed);
        SpectralConfig sc;
        sc.tol = 1e-8;
        sc.max_iter = 400;
        sc.seed = seed + 1;
        const LanczosResult ar = lanczos_extremes(
            op.n(),
            [&](const Eigen::VectorXd& x, Eigen::VectorXd& y) {
              op.apply_adjacency(x, y);
            },
            sc, true);
        l2[t] = ar.lambda_second / std::sqrt(d);
        std::vector<TrialRecord> rows;
        const long long ms = cfg.timings ? elapsed_ms(t0) : 0;
        rows.push_back(em.row(0.0, t, seed, "norm_h", norms[t], ms));
        rows.push_back(em.row(0.0, t, seed, "lambda2_scaled", l2[t], ms));
        return rows;
      });
      append_all(out, slots);
      const double mean = mean_of(norms);
      decreasing &= mean <= prev_mean + 1e-9;
      prev_mean = mean;
      out.push_back(em.row(0.0, -1, 0, "mean_norm", mean));
      out.push_back(em.row(0.0, -1, 0, "p10_norm", quantile(norms, 0.10)));
      out.push_back(em.row(0.0, -1, 0, "p50_norm", quantile(norms, 0.50)));
      out.push_back(em.row(0.0, -1, 0, "p90_norm", quantile(norms, 0.90)));
      out.push_back(em.row(0.0, -1, 0, "mean_lambda2_scaled", mean_of(l2)));
      ++gp;
    }
    Emitter whole{experiment_name(cfg.experiment), n, 0.0, 0.0, 0.0};
    out.push_back(whole.row(0.0, -1, 0, "mean_norm_decreasing_in_d",
                            decreasing ? 1.0 : 0.0));
  }
  return out;
}

std::vector<TrialRecord> run_concentration(const ExperimentConfig& cfg) {
  const int threads = resolve_threads(cfg.threads);
  static constexpr double kTailGrid[] = {0.25, 0.5, 1.0};
  static const char* kTailName[] = {"row_tail_025", "row_tail_050", "row_tail_100"};
  static const char* kRatioName[] = {"bennett_ratio_025", "bennett_ratio_050",
                                     "bennett_ratio_100"};
  std::vector<TrialRecord> out;
  double q_sd_max = 0.0, bennett_fit_max = 0.0;
  int gp = 0;
  for (int n : cfg.n_values) {
    for (double d : cfg.d_values) {
      const EnsembleSpec spec = homogeneous_spec(n, d, false);
      Emitter em{experiment_name(cfg.experiment), n, d, spec.params.q_raw,
                 spec.params.kappa};
      std::vector<double> norms(cfg.trials, 0.0);
      std::vector<std::array<long long, 3>> counts(cfg.trials, {0, 0, 0});
      auto slots = run_trials(cfg.trials, threads, [&](int t) {
        const auto t0 = std::chrono::steady_clock::now();
        const std::uint64_t idx = stream_index(gp, t);
        const std::uint64_t seed = Rng::derive(cfg.master_seed, idx);
        const CenteredErOperator op(spec, {cfg.master_seed, idx});
        norms[t] = norm_via_lanczos(op, seed);
        for (int i = 0; i < op.n(); ++i) {
          const double rv = op.row_variance_sum(i);
          for (int g = 0; g < 3; ++g) counts[t][g] += rv >= 1.0 + kTailGrid[g];
        }
        std::vector<TrialRecord> rows;
        const long long ms = cfg.timings ? elapsed_ms(t0) : 0;
        rows.push_back(em.row(0.0, t, seed, "norm_h", norms[t], ms));
        for (int g = 0; g < 3; ++g)
          rows.push_back(em.row(0.0, t, seed, kTailName[g],
                                static_cast<double>(counts[t][g]), ms));
        return rows;
      });
      append_all(out, slots);
      const double sd = sample_sd(norms);
      const double q_sd = spec.params.q_raw * sd;
      q_sd_max = std::max(q_sd_max, q_sd);
      out.push_back(em.row(0.0, -1, 0, "mean_norm", mean_of(norms)));
      out.push_back(em.row(0.0, -1, 0, "sd_norm", sd));
      out.push_back(em.row(0.0, -1, 0, "q_times_sd", q_sd));
      double fit = 0.0;
      for (int g = 0; g < 3; ++g) {
        long long total = 0;
        for (const auto& c : counts) total += c[g];
        const double freq =
            static_cast<double>(total) / (static_cast<double>(n) * cfg.trials);
        const double env = std::exp(-d * bennett_h(kTailGrid[g]));
        const double ratio = env > 0.0 ? freq / env : 0.0;
        fit = std::max(fit, ratio);
        out.push_back(em.row(0.0, -1, 0, kRatioName[g], ratio));
      }
      bennett_fit_max = std::max(bennett_fit_max, fit);
      out.push_back(em.row(0.0, -1, 0, "bennett_fit", fit));
      ++gp;
    }
  }
  Emitter all{experiment_name(cfg.experiment), 0, 0.0, 0.0, 0.0};
  out.push_back(all.row(0.0, -1, 0, "q_sd_max", q_sd_max));
  out.push_back(all.row(0.0, -1, 0, "bennett_fit_max", bennett_fit_max));
  return out;
}

std::vector<TrialRecord> run_directed_outlier(const ExperimentConfig& cfg) {
  if (cfg.epsilon_values.empty())
    throw ConfigError(0, "directed-outlier needs an epsilon grid");
  for (int n : cfg.n_values)
    if (n > 1024) throw ConfigError(0, "directed-outlier runs dense solves; use n <= 1024");
  const int threads = resolve_threads(cfg.threads);
  const int ne = static_cast<int>(cfg.epsilon_values.size());
  std::vector<TrialRecord> out;
  int gp = 0;
  for (int n : cfg.n_values) {
    for (double d : cfg.d_values) {
      const EnsembleSpec spec = homogeneous_spec(n, d, true);
      Emitter em{experiment_name(cfg.experiment), n, d, spec.params.q_raw,
                 spec.params.kappa};
      const double p = d / n;
      std::vector<double> rhos(cfg.trials, 0.0);
      std::vector<std::vector<int>> outliers(cfg.trials, std::vector<int>(ne, 0));
      auto slots = run_trials(cfg.trials, threads, [&](int t) {
        const auto t0 = std::chrono::steady_clock::now();
        const std::uint64_t idx = stream_index(gp, t);
        const std::uint64_t seed = Rng::derive(cfg.master_seed, idx);
        const SparseMatrix a = sample_adjacency(spec, {cfg.master_seed, idx});
        Eigen::MatrixXd ad = Eigen::MatrixXd::Zero(n, n);
        for (int i = 0; i < n; ++i)
          for (int c : a.row_cols(i)) ad(i, c) = 1.0;
        Eigen::MatrixXd centered =
            (ad - p * (Eigen::MatrixXd::Ones(n, n) - Eigen::MatrixXd::Identity(n, n))) /
            std::sqrt(d);
        Eigen::EigenSolver<Eigen::MatrixXd> es_a(ad, false);
        Eigen::EigenSolver<Eigen::MatrixXd> es_c(centered, false);
        if (es_a.info() != Eigen::Success || es_c.info() != Eigen::Success)
          throw std::runtime_error("dense eigensolver failed");
        rhos[t] = es_c.eigenvalues().cwiseAbs().maxCoeff();
        std::vector<TrialRecord> rows;
        const long long ms = cfg.timings ? elapsed_ms(t0) : 0;
        rows.push_back(em.row(0.0, t, seed, "rho_centered", rhos[t], ms));
        for (int e = 0; e < ne; ++e) {
          const double eps = cfg.epsilon_values[e];
          const double radius = (1.0 + eps) * std::sqrt(d);
          int near_d = 0, escape = 0;
          for (int i = 0; i < n; ++i) {
            const std::complex<double> lam = es_a.eigenvalues()[i];
            const bool is_outlier = std::abs(lam - std::complex<double>(d, 0.0)) <= radius;
            near_d += is_outlier;
            escape += !is_outlier && std::abs(lam) > radius;
          }
          outliers[t][e] = near_d;
          rows.push_back(em.row(eps, t, seed, "outlier_count", near_d, ms));
          rows.push_back(em.row(eps, t, seed, "bulk_escape", escape, ms));
        }
        return rows;
      });
      append_all(out, slots);
      for (int e = 0; e < ne; ++e) {
        const double eps = cfg.epsilon_values[e];
        int ok = 0, all_one = 1;
        for (int t = 0; t < cfg.trials; ++t) {
          ok += rhos[t] <= 1.0 + eps;
          all_one &= outliers[t][e] == 1;
        }
        const double freq = static_cast<double>(ok) / cfg.trials;
        const WilsonInterval w = wilson_interval(ok, cfg.trials);
        out.push_back(em.row(eps, -1, 0, "freq_rho_within", freq));
        out.push_back(em.row(eps, -1, 0, "wilson_lo", w.lo));
        out.push_back(em.row(eps, -1, 0, "wilson_hi", w.hi));
        out.push_back(em.row(eps, -1, 0, "outlier_always_one", all_one));
      }
      ++gp;
    }
  }
  return out;
}

std::vector<TrialRecord> run_moment_envelope(const ExperimentConfig& cfg) {
  if (cfg.ell_values.empty())
    throw ConfigError(0, "moment-envelope needs an ell grid");
  for (int ell : cfg.ell_values)
    if (ell < 1 || ell > 8) throw ConfigError(0, "ell must be in 1..8");
  for (int n : cfg.n_values)
    if (n > 45) throw ConfigError(0, "moment-envelope uses exact traces; use n <= 45");
  const int threads = resolve_threads(cfg.threads);
  constexpr double kDelta = 0.1;
  std::vector<TrialRecord> out;
  double c0_max = 0.0;
  bool admissible_all = true;
  int gp = 0;
  for (int n : cfg.n_values) {
    for (double d : cfg.d_values) {
      const EnsembleSpec spec = homogeneous_spec(n, d, false);
      Emitter em{experiment_name(cfg.experiment), n, d, spec.params.q,
                 spec.params.kappa};
      std::vector<double> c0s(cfg.trials, 0.0);
      std::vector<char> adm(cfg.trials, 1);
      auto slots = run_trials(cfg.trials, threads, [&](int t) {
        const auto t0 = std::chrono::steady_clock::now();
        const std::uint64_t idx = stream_index(gp, t);
        const std::uint64_t seed = Rng::derive(cfg.master_seed, idx);
        const ErSample s = sample_inhomogeneous_er(spec, {cfg.master_seed, idx});
        const NbOperator b(s.h);
        std::vector<TrialRecord> rows;
        const long long ms = cfg.timings ? elapsed_ms(t0) : 0;
        for (int ell : cfg.ell_values) {
          const TraceMomentResult tm =
              trace_moment(b, ell, TraceMomentMode::exact_small);
          const EnvelopeReport env =
              moment_envelope(n, ell, spec.params.q, tm.value, MomentTarget::nb_b,
                              kDelta, spec.params.kappa);
          c0s[t] = std::max(c0s[t], env.c0_fitted);
          adm[t] &= env.admissible;
          const std::string suffix = "_l" + std::to_string(ell);
          rows.push_back(em.row(0.0, t, seed, "trace" + suffix, tm.value, ms));
          rows.push_back(em.row(0.0, t, seed, "c0" + suffix, env.c0_fitted, ms));
        }
        return rows;
      });
      append_all(out, slots);
      double c0_gp = 0.0;
      bool adm_gp = true;
      for (int t = 0; t < cfg.trials; ++t) {
        c0_gp = std::max(c0_gp, c0s[t]);
        adm_gp &= adm[t] != 0;
      }
      c0_max = std::max(c0_max, c0_gp);
      admissible_all &= adm_gp;
      out.push_back(em.row(0.0, -1, 0, "c0_max", c0_gp));
      out.push_back(em.row(0.0, -1, 0, "ell_grid_admissible", adm_gp ? 1.0 : 0.0));
      ++gp;
    }
  }
  Emitter all{experiment_name(cfg.experiment), 0, 0.0, 0.0, 0.0};
  out.push_back(all.row(0.0, -1, 0, "c0_overall_max", c0_max));
  out.push_back(all.row(0.0, -1, 0, "admissible_all", admissible_all ? 1.0 : 0.0));
  return out;
}

std::vector<TrialRecord> run_experiment(const ExperimentConfig& cfg) {
  switch (cfg.experiment) {
    case ExperimentKind::tail_rho_b:
      return run_tail_experiment(cfg);
    case ExperimentKind::norm_curve:
      return run_norm_curve(cfg);
    case ExperimentKind::crossover:
      return run_crossover(cfg);
    case ExperimentKind::concentration:
      return run_concentration(cfg);
    case ExperimentKind::directed_outlier:
      return run_directed_outlier(cfg);
    case ExperimentKind::moment_envelope:
      return run_moment_envelope(cfg);
  }
  throw ConfigError(0, "unknown experiment kind");
}

}  // namespace nbspectra
