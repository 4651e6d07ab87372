#include "nbspectra/walks.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "nbspectra/nbop.hpp"

namespace nbspectra {

namespace {

void require(bool cond, const char* msg) {
  if (!cond) throw std::invalid_argument(msg);
}

// Canonical step key: unordered (min, max) in hermitian mode, as-is in
// directed mode. Loops come out as (v, v) either way.
std::pair<int, int> step_key(int a, int b, bool directed) {
  if (directed || a <= b) return {a, b};
  return {b, a};
}

}  // namespace

int WalkPath::max_label() const {
  int m = 0;
  for (int v : seq1) m = std::max(m, v);
  for (int v : seq2) m = std::max(m, v);
  return m;
}

WalkPath WalkPath::closed(std::vector<int> xi) {
  require(xi.size() >= 3 && xi.size() % 2 == 1,
          "WalkPath: closed walk needs odd length >= 3");
  const int two_l = static_cast<int>(xi.size()) - 1;
  const int l = two_l / 2;
  for (int v : xi) require(v >= 1, "WalkPath: labels are 1-based");
  require(xi.front() == xi.back(), "WalkPath: walk must close up");
  require(xi[l - 1] == xi[l + 1], "WalkPath: midpoint must reflect");
  for (int i = 1; i < two_l; ++i)
    if (i != l)
      require(xi[i - 1] != xi[i + 1], "WalkPath: backtracking step");
  WalkPath p;
  p.mode = WalkMode::hermitian;
  p.seq1 = std::move(xi);
  return p;
}

WalkPath WalkPath::pair(std::vector<int> xi1, std::vector<int> xi2) {
  require(xi1.size() >= 2 && xi1.size() == xi2.size(),
          "WalkPath: pair needs two equal-length walks, length >= 2");
  for (int v : xi1) require(v >= 1, "WalkPath: labels are 1-based");
  for (int v : xi2) require(v >= 1, "WalkPath: labels are 1-based");
  require(xi1.front() == xi2.front() && xi1.back() == xi2.back(),
          "WalkPath: pair must share first and last vertices");
  WalkPath p;
  p.mode = WalkMode::directed_pair;
  p.seq1 = std::move(xi1);
  p.seq2 = std::move(xi2);
  return p;
}

std::map<std::pair<int, int>, int> crossing_counts(const WalkPath& xi) {
  const bool directed = xi.mode == WalkMode::directed_pair;
  std::map<std::pair<int, int>, int> counts;
  for (std::size_t i = 1; i < xi.seq1.size(); ++i)
    ++counts[step_key(xi.seq1[i - 1], xi.seq1[i], directed)];
  for (std::size_t i = 1; i < xi.seq2.size(); ++i)
    ++counts[step_key(xi.seq2[i - 1], xi.seq2[i], directed)];
  return counts;
}

bool has_no_single_crossing(const WalkPath& xi) {
  for (const auto& [e, m] : crossing_counts(xi))
    if (m == 1) return false;
  return true;
}

int MultiGraph::degree(int v) const {
  int d = 0;
  for (const auto& [a, b] : edges) {
    if (a == v) ++d;
    if (b == v) ++d;  // loop counts twice
  }
  return d;
}

int MultiGraph::max_degree() const {
  int m = 0;
  for (int v : vertices) m = std::max(m, degree(v));
  return m;
}

bool MultiGraph::connected() const {
  if (vertices.size() <= 1) return true;
  std::unordered_map<int, int> pos;
  for (std::size_t i = 0; i < vertices.size(); ++i) pos[vertices[i]] = static_cast<int>(i);
  std::vector<int> parent(vertices.size());
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  };
  for (const auto& [a, b] : edges) parent[find(pos.at(a))] = find(pos.at(b));
  const int root = find(0);
  for (std::size_t i = 1; i < vertices.size(); ++i)
    if (find(static_cast<int>(i)) != root) return false;
  return true;
}

int genus(const MultiGraph& g) {
  if (!g.connected()) throw std::invalid_argument("genus: graph is disconnected");
  return g.num_edges() - g.num_vertices() + 1;
}

MultiGraph build_walk_graph(const WalkPath& xi) {
  MultiGraph g;
  g.directed = xi.mode == WalkMode::directed_pair;
  std::vector<int> verts(xi.seq1);
  verts.insert(verts.end(), xi.seq2.begin(), xi.seq2.end());
  std::sort(verts.begin(), verts.end());
  verts.erase(std::unique(verts.begin(), verts.end()), verts.end());
  g.vertices = std::move(verts);
  for (const auto& [e, m] : crossing_counts(xi)) g.edges.push_back(e);
  return g;
}

bool is_normal(const WalkPath& xi) {
  int seen = 0;
  auto scan = [&](const std::vector<int>& s) {
    for (int v : s) {
      if (v > seen) {
        if (v != seen + 1) return false;
        ++seen;
      }
    }
    return true;
  };
  return scan(xi.seq1) && scan(xi.seq2);
}

WalkPath normalize_path(const WalkPath& xi) {
  std::unordered_map<int, int> relabel;
  auto scan = [&](const std::vector<int>& s) {
    for (int v : s)
      if (!relabel.count(v)) {
        const int next = static_cast<int>(relabel.size()) + 1;
        relabel[v] = next;
      }
  };
  scan(xi.seq1);
  scan(xi.seq2);
  auto apply = [&](std::vector<int> s) {
    for (int& v : s) v = relabel.at(v);
    return s;
  };
  return xi.mode == WalkMode::hermitian
             ? WalkPath::closed(apply(xi.seq1))
             : WalkPath::pair(apply(xi.seq1), apply(xi.seq2));
}

namespace {

// One contracted chain: the walk's vertex run between consecutive kept
// vertices, interior vertices all of degree two.
struct ChainCrossing {
  std::vector<int> run;  // as traversed; run.size() - 1 = weight
};

std::vector<ChainCrossing> cut_at_kept(const std::vector<int>& seq,
                                       const std::unordered_map<int, int>& tau) {
  std::vector<ChainCrossing> out;
  std::vector<int> cur{seq.front()};
  for (std::size_t i = 1; i < seq.size(); ++i) {
    cur.push_back(seq[i]);
    if (tau.count(seq[i])) {
      out.push_back({cur});
      cur = {seq[i]};
    }
  }
  if (cur.size() != 1)
    throw std::logic_error("reduce_path: walk does not end on a kept vertex");
  return out;
}

std::vector<int> reversed(std::vector<int> v) {
  std::reverse(v.begin(), v.end());
  return v;
}

}  // namespace

ReducedTriple reduce_path(const WalkPath& xi) {
  if (!is_normal(xi))
    throw std::invalid_argument("reduce_path: walk is not normal (normalize first)");
  const bool directed = xi.mode == WalkMode::directed_pair;
  const MultiGraph g = build_walk_graph(xi);
  const int l = xi.ell();
  const int mid1 = directed ? xi.seq1.back() : xi.seq1[l];

  // Keep the two distinguished endpoints and everything of degree != 2.
  std::unordered_map<int, int> tau;
  {
    std::vector<int> kept;
    for (int v : g.vertices)
      if (v == xi.seq1.front() || v == mid1 || g.degree(v) != 2)
        kept.push_back(v);
    std::sort(kept.begin(), kept.end());
    for (std::size_t i = 0; i < kept.size(); ++i)
      tau[kept[i]] = static_cast<int>(i) + 1;
  }
  if (directed) {
    // Degree-two interior vertices of a walk pair are entered and left once.
    std::unordered_map<int, std::pair<int, int>> inout;
    for (const auto& [a, b] : g.edges) {
      ++inout[a].second;
      ++inout[b].first;
    }
    for (int v : g.vertices)
      if (!tau.count(v) && (inout[v].first != 1 || inout[v].second != 1))
        throw std::logic_error("reduce_path: contracted vertex is not a pass-through");
  }

  std::vector<std::vector<ChainCrossing>> walks;
  walks.push_back(cut_at_kept(xi.seq1, tau));
  if (directed) walks.push_back(cut_at_kept(xi.seq2, tau));

  // Edge identity: the chain's vertex run, up to reversal in hermitian mode.
  // Ids follow first-crossing order; the first traversal direction is the
  // reference for later orientation bits.
  std::map<std::vector<int>, int> id_of;
  std::vector<std::vector<int>> first_run;
  ReducedTriple t;
  t.mode = xi.mode;
  for (std::size_t w = 0; w < walks.size(); ++w) {
    ZetaPath& z = w == 0 ? t.zeta1 : t.zeta2;
    z.vertices.push_back(tau.at(walks[w].front().run.front()));
    for (const ChainCrossing& c : walks[w]) {
      std::vector<int> key = c.run;
      if (!directed) key = std::min(key, reversed(key));
      auto [it, fresh] = id_of.try_emplace(key, static_cast<int>(first_run.size()));
      if (fresh) {
        first_run.push_back(c.run);
        t.k.push_back(static_cast<int>(c.run.size()) - 1);
      }
      z.edge_ids.push_back(it->second);
      z.forward.push_back(c.run == first_run[it->second]);
      z.vertices.push_back(tau.at(c.run.back()));
    }
  }

  t.u.directed = directed;
  t.u.vertices.resize(tau.size());
  std::iota(t.u.vertices.begin(), t.u.vertices.end(), 1);
  t.u.edges.resize(first_run.size());
  for (const auto& [key, id] : id_of)
    t.u.edges[id] = step_key(tau.at(key.front()), tau.at(key.back()), directed);
  t.gamma = tau.at(mid1);
  return t;
}

std::vector<int> ReducedTriple::edge_crossings() const {
  std::vector<int> m(k.size(), 0);
  for (int e : zeta1.edge_ids) ++m[e];
  for (int e : zeta2.edge_ids) ++m[e];
  return m;
}

std::string ReducedTriple::zeta_string() const {
  std::string out;
  if (mode == WalkMode::hermitian) {
    for (std::size_t i = 0; i < zeta1.edge_ids.size(); ++i) {
      out += std::to_string(zeta1.vertices[i]);
      const int id = zeta1.edge_ids[i];
      out += id < 26 ? std::string(1, static_cast<char>('a' + id))
                     : "(" + std::to_string(id) + ")";
    }
    out += std::to_string(zeta1.vertices.back());
  } else {
    for (int v : zeta1.vertices) out += std::to_string(v);
    out += ' ';
    for (int v : zeta2.vertices) out += std::to_string(v);
  }
  return out;
}

std::string ReducedTriple::signature() const {
  std::ostringstream os;
  os << (mode == WalkMode::hermitian ? 'h' : 'd') << '|' << u.num_vertices() << '|';
  for (const auto& [a, b] : u.edges) os << a << ',' << b << ';';
  os << '|';
  for (int w : k) os << w << ',';
  os << '|' << gamma;
  for (const ZetaPath* z : {&zeta1, &zeta2}) {
    os << '|';
    for (std::size_t i = 0; i < z->edge_ids.size(); ++i)
      os << z->vertices[i] << '.' << z->edge_ids[i] << '.' << (z->forward[i] ? '+' : '-')
         << ';';
    if (!z->vertices.empty()) os << z->vertices.back();
  }
  return os.str();
}

WalkPath reconstruct_path(const ReducedTriple& t) {
  const bool directed = t.mode == WalkMode::directed_pair;
  int next = 0;
  std::unordered_map<int, int> label;  // U vertex -> original label
  auto label_of = [&](int u) {
    auto [it, fresh] = label.try_emplace(u, next + 1);
    if (fresh) ++next;
    return it->second;
  };
  std::vector<std::vector<int>> chain(t.k.size());  // first-crossing direction

  auto replay = [&](const ZetaPath& z) {
    std::vector<int> seq{label_of(z.vertices.front())};
    for (std::size_t i = 0; i < z.edge_ids.size(); ++i) {
      const int id = z.edge_ids[i];
      if (chain[id].empty()) {
        if (!z.forward[i])
          throw std::invalid_argument("reconstruct_path: first crossing marked reversed");
        std::vector<int> run{label_of(z.vertices[i])};
        for (int j = 1; j < t.k[id]; ++j) run.push_back(++next);
        run.push_back(label_of(z.vertices[i + 1]));
        chain[id] = run;
      }
      std::vector<int> run = z.forward[i] ? chain[id] : reversed(chain[id]);
      if (run.front() != label_of(z.vertices[i]) ||
          run.back() != label_of(z.vertices[i + 1]))
        throw std::invalid_argument("reconstruct_path: traversal endpoints disagree");
      seq.insert(seq.end(), run.begin() + 1, run.end());
    }
    return seq;
  };

  std::vector<int> s1 = replay(t.zeta1);
  if (!directed) return WalkPath::closed(std::move(s1));
  std::vector<int> s2 = replay(t.zeta2);
  return WalkPath::pair(std::move(s1), std::move(s2));
}

namespace {

bool zeta_is_normal(const ReducedTriple& t) {
  int seen = 0;
  auto scan = [&](const std::vector<int>& s) {
    for (int v : s) {
      if (v > seen) {
        if (v != seen + 1) return false;
        ++seen;
      }
    }
    return true;
  };
  if (!scan(t.zeta1.vertices) || !scan(t.zeta2.vertices)) return false;
  return seen == t.u.num_vertices();
}

}  // namespace

ReductionReport verify_reduction(const WalkPath& xi) {
  const ReducedTriple t = reduce_path(xi);
  const MultiGraph g = build_walk_graph(xi);
  const int gu = genus(t.u);
  ReductionReport r;
  r.round_trip = reconstruct_path(t) == xi;
  r.genus_preserved = gu == genus(g);
  r.zeta_normal = zeta_is_normal(t);
  if (t.mode == WalkMode::hermitian) {
    r.zeta_boundary = t.zeta1.vertices.front() == 1 && t.zeta1.vertices.back() == 1;
  } else {
    r.zeta_boundary = t.zeta1.vertices.front() == 1 && t.zeta2.vertices.front() == 1 &&
                      t.zeta1.vertices.back() == t.gamma &&
                      t.zeta2.vertices.back() == t.gamma;
  }
  r.degree_condition = true;
  for (int v : t.u.vertices) {
    const int d = t.u.degree(v);
    r.degree_condition &= (v == 1 || v == t.gamma) ? d >= 1 : d >= 3;
  }
  r.weight_sum = std::accumulate(t.k.begin(), t.k.end(), 0) == g.num_edges();
  const std::vector<int> m = t.edge_crossings();
  long long cross = 0;
  for (std::size_t e = 0; e < m.size(); ++e) cross += static_cast<long long>(m[e]) * t.k[e];
  r.crossing_sum = cross == 2LL * xi.ell();
  r.min_crossings = std::all_of(m.begin(), m.end(), [](int c) { return c >= 2; });
  r.edge_count_bounds = t.u.num_edges() >= std::max(gu, 1) &&
                        t.u.num_edges() <= 3 * gu + 1;
  r.vertex_count_bound = t.u.num_vertices() <= 2 * gu + 2;
  int deg1 = 0;
  for (int v : t.u.vertices) deg1 += t.u.degree(v) == 1;
  r.degree_bound = t.u.max_degree() <= 2 * gu + deg1;
  return r;
}

namespace {

double candidate_space(int n, int exponent) {
  return std::pow(static_cast<double>(n), exponent);
}

void enumerate_closed_rec(int n, int l, std::vector<int>& xi, int p,
                          const std::function<void(const std::vector<int>&)>& emit) {
  const int two_l = 2 * l;
  if (p > two_l) {
    emit(xi);
    return;
  }
  // Positions l+1 and 2l are forced by the midpoint and closure conditions.
  if (p == l + 1 || p == two_l) {
    const int v = p == two_l ? xi[0] : xi[l - 1];
    const bool exempt = p - 1 == l;
    if (p >= 2 && !exempt && xi[p - 2] == v) return;
    xi[p] = v;
    enumerate_closed_rec(n, l, xi, p + 1, emit);
    return;
  }
  for (int v = 1; v <= n; ++v) {
    if (p >= 2 && p - 1 != l && xi[p - 2] == v) continue;
    xi[p] = v;
    enumerate_closed_rec(n, l, xi, p + 1, emit);
  }
}

}  // namespace

EnumeratedWalks enumerate_paths(int n, int ell, WalkMode mode) {
  require(n >= 1 && ell >= 1, "enumerate_paths: need n >= 1, ell >= 1");
  EnumeratedWalks out;
  if (mode == WalkMode::hermitian) {
    if (candidate_space(n, 2 * ell + 1) > 1e8)
      throw std::invalid_argument("enumerate_paths: n^(2l+1) exceeds 1e8");
    std::vector<int> xi(2 * ell + 1);
    for (int v0 = 1; v0 <= n; ++v0) {
      xi[0] = v0;
      enumerate_closed_rec(n, ell, xi, 1, [&](const std::vector<int>& s) {
        out.all_closed.push_back(WalkPath::closed(s));
      });
    }
  } else {
    if (candidate_space(n, 2 * ell) > 1e8)
      throw std::invalid_argument("enumerate_paths: n^(2l) exceeds 1e8");
    std::vector<int> x1(ell + 1), x2(ell + 1);
    std::function<void(int)> rec2 = [&](int p) {
      if (p == ell) {
        out.all_closed.push_back(WalkPath::pair(x1, x2));
        return;
      }
      for (int v = 1; v <= n; ++v) {
        x2[p] = v;
        rec2(p + 1);
      }
    };
    std::function<void(int)> rec1 = [&](int p) {
      if (p == static_cast<int>(x1.size())) {
        x2[0] = x1[0];
        x2[ell] = x1[ell];
        rec2(1);
        return;
      }
      for (int v = 1; v <= n; ++v) {
        x1[p] = v;
        rec1(p + 1);
      }
    };
    rec1(0);
  }
  for (const WalkPath& p : out.all_closed)
    if (has_no_single_crossing(p)) out.admissible.push_back(p);
  return out;
}

std::vector<WalkPath> enumerate_normal(int ell, WalkMode mode) {
  require(ell >= 1, "enumerate_normal: need ell >= 1");
  std::vector<WalkPath> out;
  if (mode == WalkMode::hermitian) {
    const int two_l = 2 * ell;
    std::vector<int> xi(two_l + 1);
    xi[0] = 1;
    std::function<void(int, int)> rec = [&](int p, int maxv) {
      if (p > two_l) {
        WalkPath w = WalkPath::closed(xi);
        if (has_no_single_crossing(w)) out.push_back(std::move(w));
        return;
      }
      if (p == ell + 1 || p == two_l) {
        const int v = p == two_l ? xi[0] : xi[ell - 1];
        if (p >= 2 && p - 1 != ell && xi[p - 2] == v) return;
        xi[p] = v;
        rec(p + 1, maxv);
        return;
      }
      const int top = std::min(maxv + 1, two_l);
      for (int v = 1; v <= top; ++v) {
        if (p >= 2 && p - 1 != ell && xi[p - 2] == v) continue;
        xi[p] = v;
        rec(p + 1, std::max(maxv, v));
      }
    };
    rec(1, 1);
  } else {
    std::vector<int> x1(ell + 1), x2(ell + 1);
    x1[0] = 1;
    x2[0] = 1;
    std::function<void(int, int)> rec2 = [&](int p, int maxv) {
      if (p == ell) {
        if (x2[ell] > maxv) return;  // the shared endpoint must exist already
        WalkPath w = WalkPath::pair(x1, x2);
        if (has_no_single_crossing(w)) out.push_back(std::move(w));
        return;
      }
      for (int v = 1; v <= maxv + 1; ++v) {
        x2[p] = v;
        rec2(p + 1, std::max(maxv, v));
      }
    };
    std::function<void(int, int)> rec1 = [&](int p, int maxv) {
      if (p == ell + 1) {
        x2[ell] = x1[ell];
        rec2(1, maxv);
        return;
      }
      for (int v = 1; v <= maxv + 1; ++v) {
        x1[p] = v;
        rec1(p + 1, std::max(maxv, v));
      }
    };
    rec1(1, 1);
  }
  return out;
}

std::vector<WalkPath> sample_normal_paths(int n, int ell, int count, Rng& rng,
                                          SampleStats* stats, double bias,
                                          long long max_attempts) {
  require(n >= 2 && ell >= 1 && count >= 0, "sample_normal_paths: bad arguments");
  std::vector<WalkPath> out;
  SampleStats local;
  const int two_l = 2 * ell;
  std::vector<int> xi(two_l + 1);
  std::vector<std::vector<int>> adj(n + 1);  // visited-edge adjacency, labels 1..n
  while (static_cast<int>(out.size()) < count && local.attempts < max_attempts) {
    ++local.attempts;
    for (auto& a : adj) a.clear();
    xi[0] = static_cast<int>(rng.below(static_cast<std::uint64_t>(n))) + 1;
    bool ok = true;
    for (int p = 1; p <= two_l && ok; ++p) {
      const int banned = (p >= 2 && p - 1 != ell) ? xi[p - 2] : 0;
      int v;
      if (p == ell + 1) {
        v = xi[ell - 1];
      } else if (p == two_l) {
        v = xi[0];
        if (v == banned) ok = false;
      } else {
        const std::vector<int>& nb = adj[xi[p - 1]];
        v = 0;
        if (!nb.empty() && rng.uniform() < bias) {
          // Prefer an already-used edge so crossings have a chance to pair up.
          const int pick = nb[rng.below(nb.size())];
          if (pick != banned) v = pick;
        }
        while (v == 0) {
          const int cand = static_cast<int>(rng.below(static_cast<std::uint64_t>(n))) + 1;
          if (cand != banned) v = cand;
        }
      }
      if (!ok) break;
      xi[p] = v;
      adj[xi[p - 1]].push_back(v);
      if (v != xi[p - 1]) adj[v].push_back(xi[p - 1]);
    }
    if (!ok) continue;
    WalkPath w = WalkPath::closed(xi);
    if (!has_no_single_crossing(w)) continue;
    ++local.accepted;
    out.push_back(normalize_path(w));
  }
  if (stats) *stats = local;
  if (static_cast<int>(out.size()) < count)
    throw std::runtime_error("sample_normal_paths: attempt budget exhausted");
  return out;
}

FiniteSupportEnsemble FiniteSupportEnsemble::rademacher(
    int n, std::vector<std::pair<int, int>> support, long long q_squared,
    bool hermitian) {
  FiniteSupportEnsemble s;
  s.n = n;
  s.hermitian = hermitian;
  s.q_squared = q_squared;
  s.support = std::move(support);
  s.entries.assign(s.support.size(),
                   EntrySupport{{1, -1}, {Rational(1, 2), Rational(1, 2)}});
  s.validate();
  return s;
}

void FiniteSupportEnsemble::validate() const {
  require(n >= 1 && q_squared >= 1, "FiniteSupportEnsemble: bad n or q");
  require(support.size() == entries.size(), "FiniteSupportEnsemble: size mismatch");
  std::map<std::pair<int, int>, int> seen;
  for (std::size_t s = 0; s < support.size(); ++s) {
    const auto [i, j] = support[s];
    require(i >= 0 && i < n && j >= 0 && j < n && i != j,
            "FiniteSupportEnsemble: support must be off-diagonal, in range");
    require(!hermitian || i < j, "FiniteSupportEnsemble: hermitian support lists i < j");
    require(++seen[support[s]] == 1, "FiniteSupportEnsemble: duplicate support entry");
    const EntrySupport& e = entries[s];
    require(!e.numerators.empty() && e.numerators.size() == e.probs.size(),
            "FiniteSupportEnsemble: malformed entry support");
    Rational total(0), mean(0);
    for (std::size_t v = 0; v < e.numerators.size(); ++v) {
      total += e.probs[v];
      mean += e.probs[v] * Rational(e.numerators[v]);
    }
    require(total == Rational(1), "FiniteSupportEnsemble: probabilities must sum to 1");
    require(mean == Rational(0), "FiniteSupportEnsemble: entries must be mean zero");
  }
}

namespace {

// Full n^2-space trace of B^l B^{*l} for an integer-weighted matrix: l-1
// support-restricted applications per start edge, then one expansion over
// every row of the full edge space.
long long nb_full_trace_int(const EdgeIndex& idx, const std::vector<long long>& w,
                            int ell) {
  const int m = idx.m();
  const int n = idx.n;
  std::vector<long long> x(m), y(m), rows(n);
  long long total = 0;
  for (int f = 0; f < m; ++f) {
    std::fill(x.begin(), x.end(), 0LL);
    x[f] = 1;
    for (int step = 0; step < ell - 1; ++step) {
      detail::nb_apply_restricted<long long>(idx, w, x, y, rows);
      std::swap(x, y);
    }
    for (int j = 0; j < n; ++j) {
      long long s = 0;
      for (int e = idx.row_begin[j]; e < idx.row_begin[j + 1]; ++e) s += w[e] * x[e];
      const long long out_deg = idx.row_begin[j + 1] - idx.row_begin[j];
      total += (n - out_deg) * s * s;
      for (int e = idx.row_begin[j]; e < idx.row_begin[j + 1]; ++e) {
        const long long v = s - w[e] * x[e];
        total += v * v;
      }
    }
  }
  return total;
}

long long dense_power_trace_int(const std::vector<long long>& s, int n, int ell) {
  std::vector<long long> p(s), tmp(static_cast<std::size_t>(n) * n);
  for (int step = 1; step < ell; ++step) {
    std::fill(tmp.begin(), tmp.end(), 0LL);
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < n; ++k) {
        const long long pik = p[static_cast<std::size_t>(i) * n + k];
        if (pik == 0) continue;
        for (int j = 0; j < n; ++j)
          tmp[static_cast<std::size_t>(i) * n + j] += pik * s[static_cast<std::size_t>(k) * n + j];
      }
    p.swap(tmp);
  }
  long long total = 0;
  for (long long v : p) total += v * v;
  return total;
}

}  // namespace

ExactMoment exact_trace_moment(const FiniteSupportEnsemble& spec, int ell,
                               MomentTarget target) {
  spec.validate();
  require(ell >= 1, "exact_trace_moment: need ell >= 1");
  double realizations = 1.0;
  for (const EntrySupport& e : spec.entries) realizations *= static_cast<double>(e.numerators.size());
  if (realizations > 1e7)
    throw std::invalid_argument("exact_trace_moment: more than 1e7 realizations");
  if (target == MomentTarget::h_directed && spec.n > 64)
    throw std::invalid_argument("exact_trace_moment: dense target needs n <= 64");

  ExactMoment out;
  Rational acc(0);
  std::vector<std::size_t> pick(spec.support.size(), 0);
  const int n = spec.n;
  while (true) {
    Rational weight(1);
    for (std::size_t s = 0; s < pick.size(); ++s) weight *= spec.entries[s].probs[pick[s]];

    long long trace = 0;
    if (target == MomentTarget::nb_b) {
      std::vector<Triplet> trip;
      for (std::size_t s = 0; s < pick.size(); ++s) {
        const int num = spec.entries[s].numerators[pick[s]];
        if (num == 0) continue;
        const auto [i, j] = spec.support[s];
        trip.push_back({i, j, cplx(static_cast<double>(num), 0.0)});
        if (spec.hermitian) trip.push_back({j, i, cplx(static_cast<double>(num), 0.0)});
      }
      const SparseMatrix h = SparseMatrix::from_triplets(n, std::move(trip), spec.hermitian);
      const EdgeIndex idx = build_edge_index(h);
      std::vector<long long> w(idx.m());
      for (int e = 0; e < idx.m(); ++e)
        w[e] = std::llround(h.at(idx.edges[e].first, idx.edges[e].second).real());
      trace = nb_full_trace_int(idx, w, ell);
    } else {
      std::vector<long long> s(static_cast<std::size_t>(n) * n, 0);
      for (std::size_t e = 0; e < pick.size(); ++e) {
        const int num = spec.entries[e].numerators[pick[e]];
        const auto [i, j] = spec.support[e];
        s[static_cast<std::size_t>(i) * n + j] = num;
        if (spec.hermitian) s[static_cast<std::size_t>(j) * n + i] = num;
      }
      trace = dense_power_trace_int(s, n, ell);
    }
    acc += weight * Rational(trace);
    ++out.terms;

    std::size_t s = 0;
    for (; s < pick.size(); ++s) {
      if (++pick[s] < spec.entries[s].numerators.size()) break;
      pick[s] = 0;
    }
    if (s == pick.size()) break;
  }
  out.value = acc / Rational(spec.q_squared).pow(ell);
  out.value_double = out.value.to_double();
  return out;
}

namespace {

struct SupportLookup {
  std::map<std::pair<int, int>, int> index;
  explicit SupportLookup(const FiniteSupportEnsemble& spec) {
    for (std::size_t s = 0; s < spec.support.size(); ++s)
      index[spec.support[s]] = static_cast<int>(s);
  }
  // Entry holding the step (a, b), or -1 when the value is identically zero.
  int at(int a, int b, bool hermitian) const {
    auto it = index.find(hermitian ? step_key(a, b, false) : std::make_pair(a, b));
    return it == index.end() ? -1 : it->second;
  }
};

// E[value^m] as an exact numerator polynomial; the q powers are divided out
// once at top level since every pair carries exactly 2l of them.
Rational entry_moment(const EntrySupport& e, int m) {
  Rational acc(0);
  for (std::size_t v = 0; v < e.numerators.size(); ++v)
    acc += e.probs[v] * Rational(e.numerators[v]).pow(m);
  return acc;
}

// 0..n-1 adjacency over the ensemble support (both directions).
std::vector<std::vector<int>> support_adjacency(const FiniteSupportEnsemble& spec) {
  std::vector<std::vector<int>> adj(spec.n);
  for (const auto& [i, j] : spec.support) {
    adj[i].push_back(j);
    if (spec.hermitian) adj[j].push_back(i);
  }
  for (auto& a : adj) {
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
  }
  return adj;
}

}  // namespace

ExactMoment path_sum_moment(const FiniteSupportEnsemble& spec, int ell,
                            MomentTarget target) {
  spec.validate();
  require(ell >= 1, "path_sum_moment: need ell >= 1");
  const int pair_exponent = target == MomentTarget::nb_b ? 2 * ell - 1 : 2 * ell;
  if (std::pow(static_cast<double>(spec.n), pair_exponent) > 1e7)
    throw std::invalid_argument("path_sum_moment: pair space exceeds 1e7");

  const SupportLookup lookup(spec);
  const std::vector<std::vector<int>> adj = support_adjacency(spec);
  const int n = spec.n;
  ExactMoment out;
  Rational acc(0);
  std::vector<int> counts(spec.support.size(), 0);
  std::vector<int> touched;
  std::vector<int> x1(ell + 1), x2(ell + 1);

  auto add_step = [&](int a, int b) {
    const int s = lookup.at(a, b, spec.hermitian);
    if (s < 0) return false;
    if (counts[s]++ == 0) touched.push_back(s);
    return true;
  };
  auto drop_step = [&](int a, int b) {
    const int s = lookup.at(a, b, spec.hermitian);
    if (--counts[s] == 0) touched.erase(std::find(touched.begin(), touched.end(), s));
  };
  auto flush_term = [&](Rational multiplicity) {
    Rational term = multiplicity;
    for (int s : touched) {
      term *= entry_moment(spec.entries[s], counts[s]);
      if (term == Rational(0)) return;
    }
    acc += term;
    ++out.terms;
  };

  if (target == MomentTarget::nb_b) {
    // Both walks advance only along support steps; walk two shares the start
    // vertex and the final step with walk one, and the free head of the
    // full-space start edge contributes the n - |{x1_1, x2_1}| multiplicity.
    std::function<void(int)> rec2 = [&](int p) {
      if (p >= ell - 1) {
        // Interior done; check the constraints that touch the pinned tail,
        // then account for the tail steps.
        if (ell >= 3 && x2[ell - 3] == x2[ell - 1]) return;
        if (ell >= 2 && x2[ell - 2] == x2[ell]) return;
        std::vector<std::pair<int, int>> tail;
        if (ell == 1) {
          tail.push_back({x2[0], x2[1]});
        } else {
          tail.push_back({x2[ell - 2], x2[ell - 1]});
          tail.push_back({x2[ell - 1], x2[ell]});
        }
        std::size_t done = 0;
        bool ok = true;
        for (std::size_t t = 0; t < tail.size(); ++t) {
          if (!add_step(tail[t].first, tail[t].second)) {
            ok = false;
            break;
          }
          ++done;
        }
        if (ok) flush_term(Rational(n - (x1[1] == x2[1] ? 1 : 2)));
        while (done > 0) {
          --done;
          drop_step(tail[done].first, tail[done].second);
        }
        return;
      }
      for (int v : adj[x2[p - 1]]) {
        if (p >= 2 && x2[p - 2] == v) continue;
        x2[p] = v;
        if (!add_step(x2[p - 1], v)) continue;
        rec2(p + 1);
        drop_step(x2[p - 1], v);
      }
    };
    std::function<void(int)> rec1 = [&](int p) {
      if (p == ell + 1) {
        x2[0] = x1[0];
        x2[ell - 1] = x1[ell - 1];
        x2[ell] = x1[ell];
        rec2(1);
        return;
      }
      for (int v : adj[x1[p - 1]]) {
        if (p >= 2 && x1[p - 2] == v) continue;
        x1[p] = v;
        if (!add_step(x1[p - 1], v)) continue;
        rec1(p + 1);
        drop_step(x1[p - 1], v);
      }
    };
    for (int v0 = 0; v0 < n; ++v0) {
      x1[0] = v0;
      rec1(1);
    }
  } else {
    std::function<void(int)> rec2 = [&](int p) {
      if (p == ell) {
        if (!add_step(x2[ell - 1], x2[ell])) return;
        flush_term(Rational(1));
        drop_step(x2[ell - 1], x2[ell]);
        return;
      }
      for (int v : adj[x2[p - 1]]) {
        x2[p] = v;
        if (!add_step(x2[p - 1], v)) continue;
        rec2(p + 1);
        drop_step(x2[p - 1], v);
      }
    };
    std::function<void(int)> rec1 = [&](int p) {
      if (p == ell + 1) {
        x2[0] = x1[0];
        x2[ell] = x1[ell];
        rec2(1);
        return;
      }
      for (int v : adj[x1[p - 1]]) {
        x1[p] = v;
        if (!add_step(x1[p - 1], v)) continue;
        rec1(p + 1);
        drop_step(x1[p - 1], v);
      }
    };
    for (int v0 = 0; v0 < n; ++v0) {
      x1[0] = v0;
      rec1(1);
    }
  }

  out.value = acc / Rational(spec.q_squared).pow(ell);
  out.value_double = out.value.to_double();
  return out;
}

EnvelopeReport moment_envelope(int n, int ell, double q, double measured,
                               MomentTarget target, double delta, double kappa) {
  require(n >= 2 && ell >= 1 && q > 0.0 && delta > 0.0 && delta < 1.0 / 6.0 &&
              kappa > 0.0,
          "moment_envelope: bad arguments");
  EnvelopeReport r;
  const double scale = target == MomentTarget::nb_b
                           ? static_cast<double>(n) * n
                           : static_cast<double>(n);
  r.c0_fitted = measured / (scale * std::pow(static_cast<double>(ell), 8) * q * q);
  r.ell_cap = std::min(delta * q * std::log(static_cast<double>(n)),
                       std::pow(static_cast<double>(n), 1.0 / 6.0 - delta) /
                           (q * std::pow(kappa, 1.0 / 6.0)));
  r.admissible = static_cast<double>(ell) <= r.ell_cap;
  return r;
}

WalkPath read_walk_file(const std::string& path, WalkMode mode) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open walk file: " + path);
  // Lines whose first non-space character is '#' are comments.
  std::vector<std::vector<int>> lines;
  std::string line;
  while (std::getline(is, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    std::vector<int> seq;
    int v;
    while (ls >> v) seq.push_back(v);
    if (ls.fail() && !ls.eof())
      throw std::runtime_error("non-integer token in walk file: " + path);
    if (!seq.empty()) lines.push_back(std::move(seq));
  }
  if (mode == WalkMode::hermitian) {
    std::vector<int> xi;
    for (const auto& seq : lines) xi.insert(xi.end(), seq.begin(), seq.end());
    return WalkPath::closed(std::move(xi));
  }
  if (lines.size() != 2)
    throw std::runtime_error("walk pair file needs exactly two nonempty lines: " + path);
  return WalkPath::pair(std::move(lines[0]), std::move(lines[1]));
}

void write_walk_file(const std::string& path, const WalkPath& xi) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write walk file: " + path);
  auto line = [&](const std::vector<int>& s) {
    for (std::size_t i = 0; i < s.size(); ++i) os << (i ? " " : "") << s[i];
    os << '\n';
  };
  line(xi.seq1);
  if (xi.mode == WalkMode::directed_pair) line(xi.seq2);
}

}  // namespace nbspectra
