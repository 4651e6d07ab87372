#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nbspectra/rational.hpp"
#include "nbspectra/rng.hpp"
#include "nbspectra/sparse.hpp"

namespace nbspectra {

enum class WalkMode { hermitian, directed_pair };

/// A closed nonbacktracking walk (hermitian mode) or a pair of free walks
/// with matched endpoints (directed mode). Vertex labels are 1-based.
///
/// Hermitian mode stores xi_0 .. xi_{2l} with xi_0 = xi_{2l},
/// xi_{l-1} = xi_{l+1}, and xi_{i-1} != xi_{i+1} away from the midpoint l.
/// Directed mode stores two sequences of length l+1 sharing their first and
/// last vertices. The single-crossing filter (see has_no_single_crossing) is
/// a separate predicate, not a constructor invariant.
struct WalkPath {
  WalkMode mode = WalkMode::hermitian;
  std::vector<int> seq1;
  std::vector<int> seq2;  // directed mode only

  int ell() const {
    return mode == WalkMode::hermitian
               ? static_cast<int>(seq1.size() - 1) / 2
               : static_cast<int>(seq1.size()) - 1;
  }
  int max_label() const;

  /// Validating factories; throw std::invalid_argument on malformed input.
  static WalkPath closed(std::vector<int> xi);
  static WalkPath pair(std::vector<int> xi1, std::vector<int> xi2);

  friend bool operator==(const WalkPath& a, const WalkPath& b) {
    return a.mode == b.mode && a.seq1 == b.seq1 && a.seq2 == b.seq2;
  }
};

/// True when no edge is crossed exactly once: unordered edges counted over
/// the single walk in hermitian mode, ordered pairs counted over both walks
/// in directed mode. Mean-zero independence kills every term violating this.
bool has_no_single_crossing(const WalkPath& xi);

/// Multigraph with loops; carries explicit vertex labels so subgraphs keep
/// their names. Undirected edges are stored with first <= second; parallel
/// edges are distinct entries. Degree counts a loop twice.
struct MultiGraph {
  bool directed = false;
  std::vector<int> vertices;                // sorted, unique
  std::vector<std::pair<int, int>> edges;

  int num_vertices() const { return static_cast<int>(vertices.size()); }
  int num_edges() const { return static_cast<int>(edges.size()); }
  int degree(int v) const;
  int max_degree() const;
  bool connected() const;
};

/// |E| - |V| + 1; throws if the graph is disconnected.
int genus(const MultiGraph& g);

/// The walk's support graph: visited vertices, one edge per distinct step
/// (unordered in hermitian mode, ordered in directed mode). Always a simple
/// graph, possibly with loops.
MultiGraph build_walk_graph(const WalkPath& xi);

/// Crossing count per distinct edge of the walk graph; keys match
/// build_walk_graph's edge convention. Counts sum to 2l.
std::map<std::pair<int, int>, int> crossing_counts(const WalkPath& xi);

/// Labels are exactly 1..s in order of first visit (directed mode: first by
/// walk one, then walk two).
bool is_normal(const WalkPath& xi);

/// The unique relabeling of xi that is normal; idempotent, constant on
/// relabeling orbits.
WalkPath normalize_path(const WalkPath& xi);

/// One traversal sequence through the contracted graph. vertices has one
/// more entry than edge_ids; forward[i] records whether crossing i runs the
/// edge's chain in the same direction as its first crossing (always true in
/// directed mode, and needed to keep loop traversals unambiguous).
struct ZetaPath {
  std::vector<int> vertices;
  std::vector<int> edge_ids;
  std::vector<bool> forward;
};

/// Contraction of a normal walk: interior vertices of degree two are melted
/// into weighted edges. Kept vertices are the two endpoints {xi_0, xi_l} and
/// everything of degree != 2, relabeled 1..|V(U)| by the unique increasing
/// bijection; edge ids are assigned in order of first crossing; k[e] is the
/// length of the contracted chain.
struct ReducedTriple {
  WalkMode mode = WalkMode::hermitian;
  MultiGraph u;
  ZetaPath zeta1;
  ZetaPath zeta2;  // directed mode only
  std::vector<int> k;
  int gamma = 0;

  /// Crossings of each edge by the traversal(s).
  std::vector<int> edge_crossings() const;
  /// Compact rendering, e.g. "1a2b3c4d4c3e..." (edges as letters) in
  /// hermitian mode and the two vertex strings in directed mode. Intended
  /// for graphs small enough that labels are single characters.
  std::string zeta_string() const;
  /// Unambiguous serialization; equal strings iff equal triples.
  std::string signature() const;
};

/// Requires is_normal(xi); throws otherwise (normalize first).
ReducedTriple reduce_path(const WalkPath& xi);

/// Inverse of reduce_path on normal walks: replays the traversal, handing
/// out fresh labels at first visits.
WalkPath reconstruct_path(const ReducedTriple& t);

/// Structural checks on a reduction; failures are data, not errors.
struct ReductionReport {
  bool round_trip = false;        // reconstruct(reduce(xi)) == xi
  bool genus_preserved = false;   // g(U) == g(G_xi)
  bool zeta_normal = false;       // traversal is normal in U
  bool zeta_boundary = false;     // starts at 1, ends per mode (closed / gamma)
  bool degree_condition = false;  // deg >= 3 off {1, gamma}; >= 1 at 1, gamma
  bool weight_sum = false;        // sum k_e == |E(G_xi)|
  bool crossing_sum = false;      // sum m_e k_e == 2 l
  bool min_crossings = false;     // m_e >= 2 for every edge of U
  bool edge_count_bounds = false; // max(g,1) <= |E(U)| <= 3 g + 1
  bool vertex_count_bound = false;// |V(U)| <= 2 g + 2
  bool degree_bound = false;      // max deg <= 2 g + #(degree-1 vertices)

  bool all_ok() const {
    return round_trip && genus_preserved && zeta_normal && zeta_boundary &&
           degree_condition && weight_sum && crossing_sum && min_crossings &&
           edge_count_bounds && vertex_count_bound && degree_bound;
  }
};

ReductionReport verify_reduction(const WalkPath& xi);

/// Exhaustive walk lists over label set [n]. all_closed ignores the
/// single-crossing filter; admissible applies it.
struct EnumeratedWalks {
  std::vector<WalkPath> all_closed;
  std::vector<WalkPath> admissible;
};

/// Guard: the raw candidate space (n^{2l+1} sequences in hermitian mode,
/// n^{2l} pairs in directed mode) must not exceed 1e8.
EnumeratedWalks enumerate_paths(int n, int ell, WalkMode mode);

/// All normal admissible walks of half-length ell, generated in normal form
/// directly (no ambient n; every normal walk on at most 2l vertices appears
/// exactly once). Agrees with filtering enumerate_paths by is_normal
/// whenever n is at least the walk's vertex count.
std::vector<WalkPath> enumerate_normal(int ell, WalkMode mode);

/// Rejection sampler over normal admissible walks: draws biased closed
/// nonbacktracking walks (reusing visited edges with probability bias),
/// filters the single-crossing condition, normalizes. Coverage, not
/// uniformity.
struct SampleStats {
  long long attempts = 0;
  long long accepted = 0;
  double acceptance_rate() const {
    return attempts == 0 ? 0.0 : static_cast<double>(accepted) / attempts;
  }
};
std::vector<WalkPath> sample_normal_paths(int n, int ell, int count, Rng& rng,
                                          SampleStats* stats = nullptr,
                                          double bias = 0.75,
                                          long long max_attempts = 50'000'000);

/// Independent mean-zero entries with finite support, each value an exact
/// integer numerator over sqrt(q_squared). Hermitian mode lists each
/// unordered pair once (i < j) and mirrors the value to (j, i); entries are
/// real, so mirroring is plain copy. Directed mode lists ordered pairs.
struct EntrySupport {
  std::vector<int> numerators;
  std::vector<Rational> probs;
};
struct FiniteSupportEnsemble {
  int n = 0;
  bool hermitian = true;
  long long q_squared = 2;
  std::vector<std::pair<int, int>> support;
  std::vector<EntrySupport> entries;

  /// +-1/q on each support entry with equal probability.
  static FiniteSupportEnsemble rademacher(
      int n, std::vector<std::pair<int, int>> support, long long q_squared,
      bool hermitian);
  void validate() const;  // throws on bad indices, probs, or mean != 0
};

enum class MomentTarget { nb_b, h_directed };

struct ExactMoment {
  Rational value;
  bool exact = true;       // false once the rational path overflows
  double value_double = 0.0;
  long long terms = 0;     // realizations or walk pairs summed
};

/// Ground truth by total enumeration: averages the trace of B^l B^{*l}
/// (full n^2 space) or H^l H^{*l} over every realization of the ensemble,
/// in integer arithmetic per realization. Guard: at most 1e7 realizations.
ExactMoment exact_trace_moment(const FiniteSupportEnsemble& spec, int ell,
                               MomentTarget target);

/// The same expectation organized as a sum over walk pairs with matched
/// boundary, each weighted by its per-edge moment; the independent route to
/// the identity that exact_trace_moment checks. Guard: at most 1e7 pairs.
ExactMoment path_sum_moment(const FiniteSupportEnsemble& spec, int ell,
                            MomentTarget target = MomentTarget::nb_b);

/// Fitted envelope constant for a measured trace moment and the step-count
/// admissibility threshold min{delta q log n, n^{1/6-delta} / (q kappa^{1/6})}.
struct EnvelopeReport {
  double c0_fitted = 0.0;
  double ell_cap = 0.0;
  bool admissible = false;
};
EnvelopeReport moment_envelope(int n, int ell, double q, double measured,
                               MomentTarget target, double delta,
                               double kappa = 1.0);

/// Fixture I/O: whitespace-separated integer tokens; directed files hold the
/// two walks on two nonempty lines.
WalkPath read_walk_file(const std::string& path, WalkMode mode);
void write_walk_file(const std::string& path, const WalkPath& xi);

}  // namespace nbspectra
