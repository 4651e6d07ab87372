// Walk combinatorics: crossing filters, contraction and its inverse, the
// frozen reduction fixtures, exhaustive enumeration cross-checks, and the
// two independent routes to the expected trace moments.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "nbspectra/rational.hpp"
#include "nbspectra/rng.hpp"
#include "nbspectra/walks.hpp"

using namespace nbspectra;

namespace {

const std::string kFixtures = NBSPECTRA_FIXTURE_DIR;

std::vector<std::pair<int, int>> complete_support(int n) {
  std::vector<std::pair<int, int>> s;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) s.push_back({i, j});
  return s;
}

std::multiset<std::vector<int>> closed_seqs(const std::vector<WalkPath>& ws) {
  std::multiset<std::vector<int>> out;
  for (const auto& w : ws) out.insert(w.seq1);
  return out;
}

}  // namespace

TEST_CASE("closed walk validation") {
  CHECK_NOTHROW(WalkPath::closed({1, 2, 1}));
  CHECK_NOTHROW(WalkPath::closed({1, 1, 1}));
  CHECK_THROWS(WalkPath::closed({1, 2}));           // even token count
  CHECK_THROWS(WalkPath::closed({1, 2, 3}));        // not closed
  CHECK_THROWS(WalkPath::closed({1, 2, 3, 2, 2})); // not closed
  CHECK_THROWS(WalkPath::closed({1, 2, 3, 4, 1})); // midpoint mismatch
  CHECK_THROWS(WalkPath::closed({0, 1, 0}));        // labels are 1-based
  // Backtracking away from the midpoint: xi_0 = xi_2 at i = 1.
  CHECK_THROWS(WalkPath::closed({1, 2, 1, 2, 3, 2, 1}));
  auto w = WalkPath::closed({1, 2, 3, 2, 1});
  CHECK(w.ell() == 2);
  CHECK(w.max_label() == 3);
}

TEST_CASE("walk pair validation") {
  CHECK_NOTHROW(WalkPath::pair({1, 2, 3}, {1, 4, 3}));
  CHECK_NOTHROW(WalkPath::pair({1, 2, 1}, {1, 2, 1}));  // backtracking is fine
  CHECK_THROWS(WalkPath::pair({1, 2, 3}, {1, 4}));      // length mismatch
  CHECK_THROWS(WalkPath::pair({1, 2, 3}, {2, 4, 3}));   // start mismatch
  CHECK_THROWS(WalkPath::pair({1, 2, 3}, {1, 4, 2}));   // end mismatch
  auto w = WalkPath::pair({1, 2, 3}, {1, 4, 3});
  CHECK(w.ell() == 2);
  CHECK(w.max_label() == 4);
}

TEST_CASE("crossing counts and the single-crossing filter") {
  auto w = WalkPath::closed({1, 2, 3, 2, 1});
  auto c = crossing_counts(w);
  REQUIRE(c.size() == 2);
  CHECK(c.at({1, 2}) == 2);
  CHECK(c.at({2, 3}) == 2);
  CHECK(has_no_single_crossing(w));

  // One excursion that never retraces: four edges crossed once each.
  auto bad = WalkPath::closed({1, 2, 3, 4, 5, 4, 6, 2, 1});
  auto cb = crossing_counts(bad);
  CHECK(cb.at({2, 3}) == 1);
  CHECK(cb.at({3, 4}) == 1);
  CHECK(cb.at({4, 6}) == 1);
  CHECK(cb.at({2, 6}) == 1);
  CHECK(cb.at({1, 2}) == 2);
  CHECK(cb.at({4, 5}) == 2);
  CHECK(!has_no_single_crossing(bad));

  // Directed pairs count ordered steps over both walks.
  auto p = WalkPath::pair({1, 2, 3}, {1, 2, 3});
  auto cp = crossing_counts(p);
  CHECK(cp.at({1, 2}) == 2);
  CHECK(cp.at({2, 3}) == 2);
  CHECK(has_no_single_crossing(p));
  // Reversal does not pair up in directed mode: (1,2) and (2,1) differ.
  auto q = WalkPath::pair({1, 2, 1, 2, 3}, {1, 2, 1, 2, 3});
  auto cq = crossing_counts(q);
  CHECK(cq.at({1, 2}) == 4);
  CHECK(cq.at({2, 1}) == 2);
  CHECK(cq.at({2, 3}) == 2);
  CHECK(has_no_single_crossing(q));
}

TEST_CASE("walk graph, genus, and multigraph invariants") {
  auto w = WalkPath::closed({1, 2, 3, 2, 1});
  auto g = build_walk_graph(w);
  CHECK(g.vertices == std::vector<int>{1, 2, 3});
  CHECK(g.num_edges() == 2);
  CHECK(g.degree(2) == 2);
  CHECK(g.max_degree() == 2);
  CHECK(g.connected());
  CHECK(genus(g) == 0);

  MultiGraph loopy{false, {1, 2}, {{1, 1}, {1, 2}}};
  CHECK(loopy.degree(1) == 3);  // the loop counts twice
  CHECK(genus(loopy) == 1);

  MultiGraph split{false, {1, 2, 3, 4}, {{1, 2}, {3, 4}}};
  CHECK(!split.connected());
  CHECK_THROWS(genus(split));
}

TEST_CASE("normal form detection and normalization") {
  CHECK(is_normal(WalkPath::closed({1, 2, 3, 2, 1})));
  CHECK(!is_normal(WalkPath::closed({2, 1, 3, 1, 2})));
  CHECK(!is_normal(WalkPath::closed({1, 3, 2, 3, 1})));  // 3 seen before 2

  auto n = normalize_path(WalkPath::closed({5, 9, 1, 9, 5}));
  CHECK(n.seq1 == std::vector<int>{1, 2, 3, 2, 1});
  CHECK(is_normal(n));
  // Idempotent.
  CHECK(normalize_path(n) == n);

  auto np = normalize_path(WalkPath::pair({7, 3, 2}, {7, 9, 2}));
  CHECK(np.seq1 == std::vector<int>{1, 2, 3});
  CHECK(np.seq2 == std::vector<int>{1, 4, 3});
  CHECK(is_normal(np));
}

TEST_CASE("contraction of a tree walk") {
  auto t = reduce_path(WalkPath::closed({1, 2, 3, 2, 1}));
  CHECK(t.u.vertices == std::vector<int>{1, 2});
  REQUIRE(t.u.edges.size() == 1);
  CHECK(t.u.edges[0] == std::pair(1, 2));
  CHECK(t.k == std::vector<int>{2});
  CHECK(t.gamma == 2);
  CHECK(t.zeta1.vertices == std::vector<int>{1, 2, 1});
  CHECK(t.zeta1.edge_ids == std::vector<int>{0, 0});
  CHECK(t.zeta1.forward == std::vector<bool>{true, false});
  CHECK(t.edge_crossings() == std::vector<int>{2});
  CHECK(t.zeta_string() == "1a2a1");
  CHECK(reconstruct_path(t) == WalkPath::closed({1, 2, 3, 2, 1}));
  CHECK(verify_reduction(WalkPath::closed({1, 2, 3, 2, 1})).all_ok());

  CHECK_THROWS(reduce_path(WalkPath::closed({2, 1, 3, 1, 2})));  // not normal
}

TEST_CASE("contraction of a single-crossing walk flags only that check") {
  auto xi = WalkPath::closed({1, 2, 3, 4, 5, 4, 6, 2, 1});
  REQUIRE(is_normal(xi));
  auto t = reduce_path(xi);
  CHECK(t.u.vertices == std::vector<int>{1, 2, 3, 4});
  REQUIRE(t.u.edges.size() == 4);
  CHECK(t.u.edges[0] == std::pair(1, 2));
  CHECK(t.u.edges[1] == std::pair(2, 3));
  CHECK(t.u.edges[2] == std::pair(3, 4));
  CHECK(t.u.edges[3] == std::pair(2, 3));  // parallel edge, distinct chain
  CHECK(t.k == std::vector<int>{1, 2, 1, 2});
  CHECK(t.gamma == 4);
  CHECK(t.zeta1.edge_ids == std::vector<int>{0, 1, 2, 2, 3, 0});
  CHECK(t.edge_crossings() == std::vector<int>{2, 1, 2, 1});

  auto rep = verify_reduction(xi);
  CHECK(!rep.min_crossings);
  CHECK(rep.round_trip);
  CHECK(rep.genus_preserved);
  CHECK(rep.zeta_normal);
  CHECK(rep.zeta_boundary);
  CHECK(rep.degree_condition);
  CHECK(rep.weight_sum);
  CHECK(rep.crossing_sum);
  CHECK(rep.edge_count_bounds);
  CHECK(rep.vertex_count_bound);
  CHECK(rep.degree_bound);
  CHECK(!rep.all_ok());
  CHECK(genus(build_walk_graph(xi)) == 1);
  CHECK(genus(t.u) == 1);
}

TEST_CASE("orientation bits separate walks with equal orientation-free data") {
  // Two admissible walks that agree on (U, k, gamma) and even on the vertex
  // and edge-id sequences of the traversal; only the direction bits of the
  // final two chain crossings differ.
  auto a = WalkPath::closed({1, 2, 3, 1, 4, 5, 6, 5, 4, 1, 3, 2, 1});
  auto b = WalkPath::closed({1, 2, 3, 1, 4, 5, 6, 5, 4, 1, 2, 3, 1});
  REQUIRE(is_normal(a));
  REQUIRE(is_normal(b));
  REQUIRE(has_no_single_crossing(a));
  REQUIRE(has_no_single_crossing(b));

  auto ta = reduce_path(a);
  auto tb = reduce_path(b);
  CHECK(ta.u.edges == tb.u.edges);
  CHECK(ta.k == tb.k);
  CHECK(ta.gamma == tb.gamma);
  CHECK(ta.zeta1.vertices == tb.zeta1.vertices);
  CHECK(ta.zeta1.edge_ids == tb.zeta1.edge_ids);
  CHECK(ta.zeta1.forward != tb.zeta1.forward);
  CHECK(ta.signature() != tb.signature());
  CHECK(ta.zeta_string() == tb.zeta_string());  // orientation-free rendering

  // Round trips tell them apart again.
  CHECK(reconstruct_path(ta) == a);
  CHECK(reconstruct_path(tb) == b);
  CHECK(verify_reduction(a).all_ok());
  CHECK(verify_reduction(b).all_ok());
}

TEST_CASE("directed pair contraction") {
  auto p = WalkPath::pair({1, 2, 3}, {1, 2, 3});
  auto t = reduce_path(p);
  CHECK(t.u.directed);
  CHECK(t.u.vertices == std::vector<int>{1, 2});
  REQUIRE(t.u.edges.size() == 1);
  CHECK(t.u.edges[0] == std::pair(1, 2));
  CHECK(t.k == std::vector<int>{2});
  CHECK(t.gamma == 2);
  CHECK(t.edge_crossings() == std::vector<int>{2});
  CHECK(t.zeta_string() == "12 12");
  CHECK(reconstruct_path(t) == p);
  CHECK(verify_reduction(p).all_ok());
}

TEST_CASE("frozen fixture: closed walk of genus four") {
  auto xi = read_walk_file(kFixtures + "/closed_walk_genus4.txt", WalkMode::hermitian);
  CHECK(xi.ell() == 22);
  CHECK(xi.max_label() == 18);
  REQUIRE(is_normal(xi));
  REQUIRE(has_no_single_crossing(xi));

  auto g = build_walk_graph(xi);
  CHECK(g.num_vertices() == 18);
  CHECK(g.num_edges() == 21);
  CHECK(genus(g) == 4);

  auto t = reduce_path(xi);
  CHECK(t.u.num_vertices() == 7);
  CHECK(t.u.num_edges() == 10);
  CHECK(genus(t.u) == 4);
  CHECK(t.gamma == 6);
  CHECK(t.k == std::vector<int>{3, 4, 1, 1, 2, 1, 2, 1, 3, 3});
  CHECK(t.zeta_string() ==
        "1a2b3c4d4c3e2b3c4d4c3f5g6g5h7i7j2e3f5h7i7j2a1");
  CHECK(reconstruct_path(t) == xi);
  CHECK(verify_reduction(xi).all_ok());
}

TEST_CASE("frozen fixture: directed pair of genus six") {
  auto xi = read_walk_file(kFixtures + "/walk_pair_genus6.txt", WalkMode::directed_pair);
  CHECK(xi.ell() == 26);
  CHECK(xi.max_label() == 15);
  REQUIRE(is_normal(xi));
  REQUIRE(has_no_single_crossing(xi));

  auto g = build_walk_graph(xi);
  CHECK(g.num_vertices() == 15);
  CHECK(g.num_edges() == 20);
  CHECK(genus(g) == 6);

  auto t = reduce_path(xi);
  CHECK(t.u.num_vertices() == 9);
  CHECK(t.u.num_edges() == 14);
  CHECK(genus(t.u) == 6);
  CHECK(t.gamma == 9);
  CHECK(t.k == std::vector<int>{1, 2, 2, 1, 1, 2, 1, 2, 1, 1, 1, 2, 2, 1});
  const std::vector<std::pair<int, int>> edges = {
      {1, 2}, {2, 3}, {3, 4}, {4, 5}, {5, 6}, {6, 6}, {6, 7},
      {7, 7}, {7, 5}, {5, 4}, {4, 8}, {8, 9}, {3, 3}, {8, 2}};
  CHECK(t.u.edges == edges);
  CHECK(t.zeta_string() == "12345666775677545489 12334823334823489");
  // Every contracted edge is crossed at least twice, and the crossing-weight
  // products account for all 2l steps.
  auto m = t.edge_crossings();
  long long steps = 0;
  for (std::size_t e = 0; e < m.size(); ++e) {
    CHECK(m[e] >= 2);
    steps += static_cast<long long>(m[e]) * t.k[e];
  }
  CHECK(steps == 52);
  CHECK(reconstruct_path(t) == xi);
  CHECK(verify_reduction(xi).all_ok());
}

TEST_CASE("fixture files survive a write/read round trip") {
  auto xi = read_walk_file(kFixtures + "/closed_walk_genus4.txt", WalkMode::hermitian);
  std::string tmp = "walk_roundtrip_tmp.txt";
  write_walk_file(tmp, xi);
  CHECK(read_walk_file(tmp, WalkMode::hermitian) == xi);
  std::remove(tmp.c_str());

  auto p = read_walk_file(kFixtures + "/walk_pair_genus6.txt", WalkMode::directed_pair);
  write_walk_file(tmp, p);
  CHECK(read_walk_file(tmp, WalkMode::directed_pair) == p);
  std::remove(tmp.c_str());

  CHECK_THROWS(read_walk_file(kFixtures + "/closed_walk_genus4.txt",
                              WalkMode::directed_pair));  // one line, not two
  CHECK_THROWS(read_walk_file("no_such_file.txt", WalkMode::hermitian));
}

TEST_CASE("exhaustive enumeration at tiny sizes") {
  auto e1 = enumerate_paths(1, 1, WalkMode::hermitian);
  REQUIRE(e1.all_closed.size() == 1);
  CHECK(e1.all_closed[0].seq1 == std::vector<int>{1, 1, 1});
  CHECK(e1.admissible.size() == 1);

  auto e2 = enumerate_paths(2, 1, WalkMode::hermitian);
  CHECK(e2.all_closed.size() == 4);
  CHECK(e2.admissible.size() == 4);

  // (a, b, c, b, a) with c != a: 3 * 3 * 2 walks, all admissible.
  auto e3 = enumerate_paths(3, 2, WalkMode::hermitian);
  CHECK(e3.all_closed.size() == 18);
  CHECK(e3.admissible.size() == 18);

  auto d1 = enumerate_paths(2, 1, WalkMode::directed_pair);
  CHECK(d1.all_closed.size() == 4);
  CHECK(d1.admissible.size() == 4);

  CHECK_THROWS(enumerate_paths(10, 4, WalkMode::hermitian));  // 10^9 candidates
}

TEST_CASE("direct normal enumeration matches brute-force filtering") {
  // Hermitian, l = 1 and 2 by hand; l = 2 and 3 against the filtered list.
  auto n1 = enumerate_normal(1, WalkMode::hermitian);
  auto s1 = closed_seqs(n1);
  CHECK(s1 == std::multiset<std::vector<int>>{{1, 1, 1}, {1, 2, 1}});

  auto n2 = enumerate_normal(2, WalkMode::hermitian);
  CHECK(n2.size() == 3);

  for (int ell : {2, 3}) {
    // n = 2l dominates every normal walk's label count.
    auto brute = enumerate_paths(2 * ell, ell, WalkMode::hermitian);
    std::multiset<std::vector<int>> want;
    for (const auto& w : brute.admissible)
      if (is_normal(w)) want.insert(w.seq1);
    CHECK(closed_seqs(enumerate_normal(ell, WalkMode::hermitian)) == want);
  }

  // Directed: same cross-check on pairs.
  for (int ell : {1, 2}) {
    auto brute = enumerate_paths(2 * ell + 1, ell, WalkMode::directed_pair);
    std::multiset<std::pair<std::vector<int>, std::vector<int>>> want, got;
    for (const auto& w : brute.admissible)
      if (is_normal(w)) want.insert({w.seq1, w.seq2});
    for (const auto& w : enumerate_normal(ell, WalkMode::directed_pair))
      got.insert({w.seq1, w.seq2});
    CHECK(got == want);
  }
}

TEST_CASE("every small normal walk verifies its own reduction") {
  for (int ell : {1, 2, 3}) {
    for (const auto& w : enumerate_normal(ell, WalkMode::hermitian)) {
      auto rep = verify_reduction(w);
      CHECK(rep.all_ok());
    }
    if (ell <= 2)
      for (const auto& w : enumerate_normal(ell, WalkMode::directed_pair)) {
        auto rep = verify_reduction(w);
        CHECK(rep.all_ok());
      }
  }
}

TEST_CASE("sampler produces valid normal walks deterministically") {
  Rng rng(2024);
  SampleStats stats;
  auto walks = sample_normal_paths(8, 6, 100, rng, &stats);
  REQUIRE(walks.size() == 100);
  CHECK(stats.accepted == 100);
  CHECK(stats.attempts >= stats.accepted);
  CHECK(stats.acceptance_rate() > 0.0);
  for (const auto& w : walks) {
    CHECK(w.ell() == 6);
    CHECK(is_normal(w));
    CHECK(has_no_single_crossing(w));
  }
  Rng rng2(2024);
  auto again = sample_normal_paths(8, 6, 100, rng2);
  CHECK(std::equal(walks.begin(), walks.end(), again.begin()));
}

TEST_CASE("finite-support ensemble validation") {
  auto tri = FiniteSupportEnsemble::rademacher(3, {{0, 1}, {1, 2}, {0, 2}}, 2, true);
  CHECK_NOTHROW(tri.validate());

  auto bad = tri;
  bad.support[0] = {1, 0};  // hermitian support must list i < j
  CHECK_THROWS(bad.validate());

  auto mean = tri;
  mean.entries[0] = EntrySupport{{1, 2}, {Rational(1, 2), Rational(1, 2)}};
  CHECK_THROWS(mean.validate());  // mean 3/2, not centered

  auto probs = tri;
  probs.entries[0] = EntrySupport{{1, -1}, {Rational(1, 2), Rational(1, 3)}};
  CHECK_THROWS(probs.validate());

  auto diag = tri;
  diag.support[0] = {1, 1};
  CHECK_THROWS(diag.validate());
}

TEST_CASE("both moment routes agree exactly on sign ensembles") {
  auto tri = FiniteSupportEnsemble::rademacher(3, complete_support(3), 2, true);
  auto k4 = FiniteSupportEnsemble::rademacher(4, complete_support(4), 2, true);
  auto p4 = FiniteSupportEnsemble::rademacher(4, {{0, 1}, {1, 2}, {2, 3}}, 2, true);

  for (const auto* spec : {&tri, &k4, &p4}) {
    for (int ell : {1, 2, 3}) {
      for (auto target : {MomentTarget::nb_b, MomentTarget::h_directed}) {
        auto walk_route = path_sum_moment(*spec, ell, target);
        auto trace_route = exact_trace_moment(*spec, ell, target);
        REQUIRE(walk_route.exact);
        REQUIRE(trace_route.exact);
        CHECK(walk_route.value == trace_route.value);
      }
    }
  }

  // Closed forms worked out independently of both implementations:
  // one-step nonbacktracking traces are (n-1) sum_f E|H_f|^2.
  CHECK(exact_trace_moment(tri, 1, MomentTarget::nb_b).value == Rational(6));
  CHECK(exact_trace_moment(k4, 1, MomentTarget::nb_b).value == Rational(18));
  CHECK(exact_trace_moment(p4, 1, MomentTarget::nb_b).value == Rational(9));
  // Triangle two-step values: 12/q^4 and 18/q^4 with q^2 = 2.
  CHECK(exact_trace_moment(tri, 2, MomentTarget::nb_b).value == Rational(3));
  CHECK(exact_trace_moment(tri, 2, MomentTarget::h_directed).value == Rational(9, 2));
  CHECK(exact_trace_moment(k4, 2, MomentTarget::nb_b).value == Rational(18));
  CHECK(exact_trace_moment(p4, 2, MomentTarget::nb_b).value == Rational(3));
  // Directed one-step traces are sum_{ij} E|H_ij|^2.
  CHECK(exact_trace_moment(tri, 1, MomentTarget::h_directed).value == Rational(3));
}

TEST_CASE("moment routes agree on asymmetric entry distributions") {
  FiniteSupportEnsemble spec;
  spec.n = 4;
  spec.hermitian = true;
  spec.q_squared = 3;
  spec.support = {{0, 1}, {1, 2}, {2, 3}, {0, 2}};
  // Two entries take values -1 and 2 with probabilities 2/3 and 1/3 (mean
  // zero, second moment 2); the others are signs.
  EntrySupport skew{{-1, 2}, {Rational(2, 3), Rational(1, 3)}};
  EntrySupport sign{{1, -1}, {Rational(1, 2), Rational(1, 2)}};
  spec.entries = {skew, skew, sign, sign};
  spec.validate();

  for (int ell : {1, 2}) {
    for (auto target : {MomentTarget::nb_b, MomentTarget::h_directed}) {
      auto a = path_sum_moment(spec, ell, target);
      auto b = exact_trace_moment(spec, ell, target);
      CHECK(a.value == b.value);
    }
  }
  // (n-1) sum_f E|n_f|^2 / q^2 = 3 * (2+2+1+1) * 2 / 3 = 12.
  CHECK(exact_trace_moment(spec, 1, MomentTarget::nb_b).value == Rational(12));
}

TEST_CASE("moment guards") {
  auto big = FiniteSupportEnsemble::rademacher(8, complete_support(8), 2, true);
  CHECK_THROWS(exact_trace_moment(big, 1, MomentTarget::nb_b));  // 2^28 draws
  auto tri = FiniteSupportEnsemble::rademacher(3, complete_support(3), 2, true);
  CHECK_THROWS(path_sum_moment(tri, 0, MomentTarget::nb_b));
}

TEST_CASE("envelope constant and admissibility threshold") {
  auto r = moment_envelope(16, 2, 2.0, 1024.0, MomentTarget::nb_b, 0.1);
  CHECK(r.c0_fitted == doctest::Approx(1024.0 / (256.0 * 256.0 * 4.0)));
  double cap = std::min(0.1 * 2.0 * std::log(16.0),
                        std::pow(16.0, 1.0 / 6.0 - 0.1) / 2.0);
  CHECK(r.ell_cap == doctest::Approx(cap));
  CHECK(!r.admissible);  // 2 > 0.55

  auto rd = moment_envelope(16, 2, 2.0, 1024.0, MomentTarget::h_directed, 0.1);
  CHECK(rd.c0_fitted == doctest::Approx(1024.0 / (16.0 * 256.0 * 4.0)));

  CHECK_THROWS(moment_envelope(16, 2, 2.0, 1.0, MomentTarget::nb_b, 0.2));
  CHECK_THROWS(moment_envelope(16, 2, 2.0, 1.0, MomentTarget::nb_b, 1.0 / 6.0));
}
