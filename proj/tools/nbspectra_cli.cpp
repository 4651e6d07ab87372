// Command line front end for the nbspectra library.
//
// Exit codes: 0 on success, 1 when a requested check fails, 2 on bad
// configuration or bad input (unparsable flags, malformed files, guards).

#include <cmath>
#include <complex>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "nbspectra/ensembles.hpp"
#include "nbspectra/harness.hpp"
#include "nbspectra/iharabass.hpp"
#include "nbspectra/nbop.hpp"
#include "nbspectra/spectra.hpp"
#include "nbspectra/walks.hpp"

namespace {

using namespace nbspectra;

struct CheckFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Shared source selection: either --in <coordinate file> or a sampled
/// homogeneous ER instance described by --n/--d/--seed.
struct MatrixSource {
  std::string in_path;
  int n = 0;
  double d = 0.0;
  std::uint64_t seed = 1;
  std::uint64_t trial = 0;
  bool directed = false;

  void attach(CLI::App* cmd) {
    cmd->add_option("--in", in_path, "Read H from a coordinate-format file");
    cmd->add_option("--n", n, "Dimension of a sampled instance");
    cmd->add_option("--d", d, "Mean degree of a sampled instance");
    cmd->add_option("--seed", seed, "Master seed for sampling");
    cmd->add_option("--trial", trial, "Trial index within the seed stream");
    cmd->add_flag("--directed", directed, "Sample the directed ensemble");
  }

  SparseMatrix load() const {
    if (!in_path.empty()) return read_matrix_market_file(in_path);
    if (n <= 0 || d <= 0.0)
      throw std::invalid_argument("need either --in or both --n and --d");
    const auto profile = ProbabilityProfile::homogeneous(n, std::min(1.0, d / n));
    const auto spec = directed ? EnsembleSpec::directed_er(profile)
                               : EnsembleSpec::hermitian_er(profile);
    const SeedSpec s{seed, trial};
    return directed ? sample_directed_er(spec, s).h
                    : sample_inhomogeneous_er(spec, s).h;
  }
};

int run_sample(const MatrixSource& src, const std::string& out,
               bool adjacency) {
  if (src.n <= 0 || src.d <= 0.0)
    throw std::invalid_argument("sample needs --n and --d");
  const auto profile =
      ProbabilityProfile::homogeneous(src.n, std::min(1.0, src.d / src.n));
  const auto spec = src.directed ? EnsembleSpec::directed_er(profile)
                                 : EnsembleSpec::hermitian_er(profile);
  const SeedSpec s{src.seed, src.trial};
  SparseMatrix m;
  if (adjacency) {
    m = sample_adjacency(spec, s);
  } else {
    m = src.directed ? sample_directed_er(spec, s).h
                     : sample_inhomogeneous_er(spec, s).h;
  }
  if (out.empty() || out == "-") {
    write_matrix_market(std::cout, m);
  } else {
    write_matrix_market_file(out, m);
    std::cerr << "wrote " << m.nnz() << " entries (n = " << m.n() << ") to "
              << out << "\n";
  }
  return 0;
}

int run_rho_b(const MatrixSource& src, double tol) {
  const SparseMatrix h = src.load();
  const NbOperator b(h);
  SpectralConfig cfg;
  cfg.tol = tol;
  cfg.cross_validate = b.m() <= 1024;
  const RadiusReport rep = spectral_radius(b, cfg);
  std::cout << "m = " << b.m() << "\n";
  std::cout << "rho_b = " << rep.rho << "\n";
  if (rep.dense_rho)
    std::cout << "rho_b_dense = " << *rep.dense_rho << "\n";
  std::cout << "converged = " << (rep.converged ? "yes" : "no") << "\n";
  if (!rep.converged)
    throw CheckFailure("iterative radius estimate did not converge");
  return 0;
}

int run_norm_h(const MatrixSource& src, double tol) {
  const SparseMatrix h = src.load();
  const BoundReport rep = norm_bound(h);
  std::cout << "norm_h = " << rep.opnorm << "\n";
  std::cout << "rho_b = " << rep.rho_b << "\n";
  std::cout << "norm_2inf = " << rep.norm_2inf << "\n";
  std::cout << "norm_1inf = " << rep.norm_1inf << "\n";
  std::cout << "thm_bound = " << rep.thm_bound
            << (rep.thm_ok ? "  (holds)" : "  (VIOLATED)") << "\n";
  std::cout << "cor_bound = " << rep.cor_bound
            << (rep.cor_ok ? "  (holds)" : "  (VIOLATED)") << "\n";
  (void)tol;
  if (!rep.thm_ok || !rep.cor_ok)
    throw CheckFailure("norm bound violated");
  return 0;
}

int run_ib_check(const MatrixSource& src, double tol) {
  const SparseMatrix h = src.load();
  if (h.n() > 256)
    throw std::invalid_argument("ib-check runs dense solves; use n <= 256");
  const NbOperator b(h);
  if (b.m() == 0) {
    std::cout << "empty support, nothing to check\n";
    return 0;
  }
  const auto spectrum = dense_spectrum(b.dense());
  int checked = 0, skipped = 0, bad = 0;
  for (const cplx lam : spectrum) {
    LogDet at, off;
    try {
      at = ib_determinant(h, lam);
      off = ib_determinant(h, lam + 0.5);
    } catch (const std::invalid_argument&) {
      ++skipped;  // lambda (or the reference point) trips the pole guard
      continue;
    }
    ++checked;
    if (!(at.log_abs - off.log_abs <= std::log(tol))) ++bad;
  }
  std::cout << "eigenvalues checked = " << checked << ", skipped = " << skipped
            << ", violations = " << bad << "\n";
  if (bad > 0) throw CheckFailure("determinant does not vanish on the spectrum");
  return 0;
}

WalkPath load_walk(const std::string& path, bool directed) {
  return read_walk_file(path,
                        directed ? WalkMode::directed_pair : WalkMode::hermitian);
}

int run_walks_verify(const std::string& path, bool directed) {
  const WalkPath xi = normalize_path(load_walk(path, directed));
  const ReductionReport rep = verify_reduction(xi);
  const auto line = [](const char* name, bool ok) {
    std::cout << name << " = " << (ok ? "ok" : "FAIL") << "\n";
  };
  line("round_trip", rep.round_trip);
  line("genus_preserved", rep.genus_preserved);
  line("zeta_normal", rep.zeta_normal);
  line("zeta_boundary", rep.zeta_boundary);
  line("degree_condition", rep.degree_condition);
  line("weight_sum", rep.weight_sum);
  line("crossing_sum", rep.crossing_sum);
  line("min_crossings", rep.min_crossings);
  line("edge_count_bounds", rep.edge_count_bounds);
  line("vertex_count_bound", rep.vertex_count_bound);
  line("degree_bound", rep.degree_bound);
  if (!rep.all_ok()) throw CheckFailure("reduction invariants violated");
  return 0;
}

int run_walks_enumerate(int ell, int n, bool directed) {
  const WalkMode mode = directed ? WalkMode::directed_pair : WalkMode::hermitian;
  if (n > 0) {
    const EnumeratedWalks ew = enumerate_paths(n, ell, mode);
    std::cout << "closed = " << ew.all_closed.size() << "\n";
    std::cout << "admissible = " << ew.admissible.size() << "\n";
  } else {
    const auto normal = enumerate_normal(ell, mode);
    std::cout << "normal = " << normal.size() << "\n";
  }
  return 0;
}

int run_walks_reduce(const std::string& path, bool directed) {
  const WalkPath xi = normalize_path(load_walk(path, directed));
  const ReducedTriple t = reduce_path(xi);
  std::cout << "ell = " << xi.ell() << "\n";
  std::cout << "vertices = " << t.u.num_vertices()
            << ", edges = " << t.u.num_edges() << ", genus = " << genus(t.u)
            << "\n";
  std::cout << "gamma = " << t.gamma << "\n";
  std::cout << "k =";
  for (int k : t.k) std::cout << ' ' << k;
  std::cout << "\n";
  std::cout << "zeta = " << t.zeta_string() << "\n";
  return 0;
}

int run_experiment_run(const std::string& cfg_path, const std::string& out,
                       int threads, int trials, std::uint64_t seed,
                       bool have_seed) {
  ExperimentConfig cfg = parse_config_file(cfg_path);
  if (!out.empty()) cfg.output_path = out;
  if (threads > 0) cfg.threads = threads;
  if (trials > 0) cfg.trials = trials;
  if (have_seed) cfg.master_seed = seed;
  const auto records = run_experiment(cfg);
  if (cfg.output_path.empty() || cfg.output_path == "-") {
    std::cout << format_results(records);
  } else {
    write_results(records, cfg.output_path);
    std::cerr << "wrote " << records.size() << " rows to " << cfg.output_path
              << "\n";
  }
  return 0;
}

int run_experiment_list() {
  for (const auto& name : experiment_names()) std::cout << name << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nonbacktracking spectra toolkit"};
  app.require_subcommand(1);

  MatrixSource src;
  double tol = 1e-8;
  std::string out_path;
  bool adjacency = false;

  auto* sample = app.add_subcommand(
      "sample", "Sample one ensemble realization and write it out");
  src.attach(sample);
  sample->add_option("--out", out_path, "Output path ('-' for stdout)");
  sample->add_flag("--adjacency", adjacency,
                   "Write the raw 0/1 adjacency instead of the centered H");

  auto* rho = app.add_subcommand(
      "rho-b", "Spectral radius of the nonbacktracking operator");
  src.attach(rho);
  rho->add_option("--tol", tol, "Iterative solver tolerance");

  auto* norm = app.add_subcommand(
      "norm-h", "Operator norm of H and the rho(B)-driven bounds");
  src.attach(norm);
  norm->add_option("--tol", tol, "Unused; kept for flag symmetry");

  auto* ib = app.add_subcommand(
      "ib-check", "Verify the determinant identity on the spectrum of B");
  src.attach(ib);
  ib->add_option("--tol", tol, "Vanishing-ratio tolerance");

  auto* walks = app.add_subcommand("walks", "Walk combinatorics utilities");
  walks->require_subcommand(1);
  std::string walk_file;
  bool walk_directed = false;
  int walk_ell = 1;
  int walk_n = 0;

  auto* wverify = walks->add_subcommand(
      "verify", "Check every reduction invariant of one walk");
  wverify->add_option("--file", walk_file, "Walk fixture file")->required();
  wverify->add_flag("--directed", walk_directed, "Directed two-line format");

  auto* wenum = walks->add_subcommand(
      "enumerate", "Count closed and admissible walks");
  wenum->add_option("--ell", walk_ell, "Half-length")->required();
  wenum->add_option("--n", walk_n, "Label set size (omit for normal walks)");
  wenum->add_flag("--directed", walk_directed, "Directed mode");

  auto* wreduce = walks->add_subcommand(
      "reduce", "Contract one walk and print (U, zeta, k, gamma)");
  wreduce->add_option("--file", walk_file, "Walk fixture file")->required();
  wreduce->add_flag("--directed", walk_directed, "Directed two-line format");

  auto* exp = app.add_subcommand("experiment", "Seeded Monte Carlo experiments");
  exp->require_subcommand(1);
  std::string cfg_path;
  int exp_threads = 0;
  int exp_trials = 0;
  std::uint64_t exp_seed = 0;

  auto* erun = exp->add_subcommand("run", "Run one experiment config");
  erun->add_option("config", cfg_path, "Flat key = value config file")
      ->required();
  erun->add_option("--out", out_path, "Override the configured output path");
  erun->add_option("--threads", exp_threads, "Override the thread count");
  erun->add_option("--trials", exp_trials, "Override the trial count");
  auto* seed_opt =
      erun->add_option("--seed", exp_seed, "Override the master seed");

  auto* elist = exp->add_subcommand("list", "List the experiment names");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (app.got_subcommand(sample)) return run_sample(src, out_path, adjacency);
    if (app.got_subcommand(rho)) return run_rho_b(src, tol);
    if (app.got_subcommand(norm)) return run_norm_h(src, tol);
    if (app.got_subcommand(ib)) return run_ib_check(src, tol);
    if (walks->got_subcommand(wverify))
      return run_walks_verify(walk_file, walk_directed);
    if (walks->got_subcommand(wenum))
      return run_walks_enumerate(walk_ell, walk_n, walk_directed);
    if (walks->got_subcommand(wreduce))
      return run_walks_reduce(walk_file, walk_directed);
    if (exp->got_subcommand(erun))
      return run_experiment_run(cfg_path, out_path, exp_threads, exp_trials,
                                exp_seed, seed_opt->count() > 0);
    if (exp->got_subcommand(elist)) return run_experiment_list();
  } catch (const ConfigError& e) {
    std::cerr << "config error";
    if (e.line > 0) std::cerr << " (line " << e.line << ")";
    std::cerr << ": " << e.what() << "\n";
    return 2;
  } catch (const CheckFailure& e) {
    std::cerr << "check failed: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::runtime_error& e) {
    // Unreadable or malformed input files land here.
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
