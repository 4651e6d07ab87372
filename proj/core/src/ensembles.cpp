#include "nbspectra/ensembles.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace nbspectra {

namespace {

void require(bool cond, const char* msg) {
  if (!cond) throw std::invalid_argument(msg);
}

/// Bernoulli(p) sweep over columns [lo, hi) via geometric skips; one extra
/// skip is always drawn past the end so stream consumption is deterministic.
template <class Emit>
void bernoulli_run(Rng& rng, int lo, int hi, double p, Emit emit) {
  if (lo >= hi || p <= 0.0) return;
  if (p >= 1.0) {
    for (int j = lo; j < hi; ++j) emit(j);
    return;
  }
  const std::uint64_t len = static_cast<std::uint64_t>(hi - lo);
  std::uint64_t pos = rng.geometric_skip(p);
  while (pos < len) {
    emit(lo + static_cast<int>(pos));
    const std::uint64_t skip = rng.geometric_skip(p);
    if (skip >= len - pos - 1) break;
    pos += 1 + skip;
  }
}

bool is_er_kind(EnsembleKind k) {
  return k == EnsembleKind::hermitian_er || k == EnsembleKind::directed_er ||
         k == EnsembleKind::sbm;
}

}  // namespace

EnsembleSpec EnsembleSpec::hermitian_er(ProbabilityProfile p) {
  EnsembleSpec s;
  s.kind = EnsembleKind::hermitian_er;
  s.dim = p.n();
  s.params = derive_er_parameters(p);
  s.profile = std::move(p);
  return s;
}

EnsembleSpec EnsembleSpec::directed_er(ProbabilityProfile p) {
  EnsembleSpec s = hermitian_er(std::move(p));
  s.kind = EnsembleKind::directed_er;
  return s;
}

EnsembleSpec EnsembleSpec::sbm(std::vector<int> block_sizes, Eigen::MatrixXd rates) {
  EnsembleSpec s = hermitian_er(build_sbm_profile(std::move(block_sizes), std::move(rates)));
  s.kind = EnsembleKind::sbm;
  return s;
}

EnsembleSpec EnsembleSpec::rademacher(int n, double q,
                                      std::vector<std::pair<int, int>> support) {
  require(n >= 1 && q > 0.0, "rademacher spec: need n >= 1 and q > 0");
  for (auto& [i, j] : support) {
    if (i > j) std::swap(i, j);
    require(i >= 0 && j < n && i != j,
            "rademacher spec: support must be off-diagonal and in range");
  }
  std::sort(support.begin(), support.end());
  require(std::adjacent_find(support.begin(), support.end()) == support.end(),
          "rademacher spec: duplicate support entry");

  std::vector<int> deg(n, 0);
  for (const auto& [i, j] : support) {
    ++deg[i];
    ++deg[j];
  }
  const int max_deg = support.empty() ? 0 : *std::max_element(deg.begin(), deg.end());

  EnsembleSpec s;
  s.kind = EnsembleKind::rademacher;
  s.dim = n;
  s.sign_scale = q;
  s.support = std::move(support);
  s.profile = ProbabilityProfile::homogeneous(n, 0.0);
  // Variance-profile analogues: entries have E|H_ij|^2 = 1/q^2 on support.
  s.params.q = s.params.q_raw = q;
  s.params.d = q * q;
  s.params.kappa = max_deg > 0 ? static_cast<double>(n) / max_deg : 0.0;
  return s;
}

ProbabilityProfile build_sbm_profile(std::vector<int> block_sizes,
                                     Eigen::MatrixXd rates) {
  return ProbabilityProfile::blocks(std::move(block_sizes), std::move(rates));
}

SparseMatrix sample_adjacency(const EnsembleSpec& spec, SeedSpec seed) {
  require(is_er_kind(spec.kind), "sample_adjacency: spec is not an ER family");
  require(spec.params.d > 0.0, "sample_adjacency: degenerate profile, d = 0");
  const ProbabilityProfile& prof = spec.profile;
  const int n = spec.dim;
  const bool herm = spec.hermitian();
  Rng rng(seed);

  std::vector<Triplet> trips;
  trips.reserve(static_cast<std::size_t>(std::min(
      (herm ? 2.0 : 1.0) * spec.params.d * n * 1.5 + 64.0, 1e9)));
  auto emit = [&](int i, int j) {
    trips.push_back({i, j, cplx(1.0, 0.0)});
    if (herm) trips.push_back({j, i, cplx(1.0, 0.0)});
  };

  std::vector<int> bounds;  // block column boundaries, when applicable
  if (const auto* b = prof.as_blocks()) {
    bounds.push_back(0);
    for (int sz : b->sizes) bounds.push_back(bounds.back() + sz);
  }
  // Sweep columns [lo, hi) of row i; the range never contains i itself.
  auto sweep = [&](int i, int lo, int hi) {
    if (lo >= hi) return;
    if (prof.is_homogeneous()) {
      bernoulli_run(rng, lo, hi, prof(i, lo), [&](int j) { emit(i, j); });
    } else if (!bounds.empty()) {
      for (std::size_t b = 0; b + 1 < bounds.size(); ++b) {
        const int s = std::max(bounds[b], lo);
        const int e = std::min(bounds[b + 1], hi);
        if (s < e) bernoulli_run(rng, s, e, prof(i, s), [&](int j) { emit(i, j); });
      }
    } else {
      for (int j = lo; j < hi; ++j)
        if (rng.bernoulli(prof(i, j))) emit(i, j);
    }
  };
  for (int i = 0; i < n; ++i) {
    if (herm) {
      sweep(i, i + 1, n);
    } else {
      sweep(i, 0, i);
      sweep(i, i + 1, n);
    }
  }
  return SparseMatrix::from_triplets(n, std::move(trips), herm);
}

namespace {

ErSample materialize_centered(const EnsembleSpec& spec, SeedSpec seed) {
  require(spec.dim <= 2048,
          "centered ER materialization is dense in n; use CenteredErOperator above n = 2048");
  SparseMatrix a = sample_adjacency(spec, seed);
  const ProbabilityProfile& prof = spec.profile;
  const int n = spec.dim;
  const bool herm = spec.hermitian();
  const double inv_sqrt_d = 1.0 / std::sqrt(spec.params.d);

  std::vector<Triplet> trips;
  std::vector<char> in_row(n, 0);
  for (int i = 0; i < n; ++i) {
    for (int c : a.row_cols(i)) in_row[c] = 1;
    for (int j = herm ? i + 1 : 0; j < n; ++j) {
      if (j == i) continue;
      const double p = prof(i, j);
      if (p <= 0.0) continue;
      const double v = (in_row[j] - p) * inv_sqrt_d;
      if (v == 0.0) continue;
      trips.push_back({i, j, cplx(v, 0.0)});
      if (herm) trips.push_back({j, i, cplx(v, 0.0)});
    }
    for (int c : a.row_cols(i)) in_row[c] = 0;
  }
  return {std::move(a), SparseMatrix::from_triplets(n, std::move(trips), herm)};
}

}  // namespace

ErSample sample_inhomogeneous_er(const EnsembleSpec& spec, SeedSpec seed) {
  require(spec.kind == EnsembleKind::hermitian_er || spec.kind == EnsembleKind::sbm,
          "sample_inhomogeneous_er: spec is not a hermitian ER family");
  return materialize_centered(spec, seed);
}

ErSample sample_directed_er(const EnsembleSpec& spec, SeedSpec seed) {
  require(spec.kind == EnsembleKind::directed_er,
          "sample_directed_er: spec is not a directed ER family");
  return materialize_centered(spec, seed);
}

SparseMatrix sample_rademacher(const EnsembleSpec& spec, SeedSpec seed) {
  require(spec.kind == EnsembleKind::rademacher,
          "sample_rademacher: spec is not a rademacher family");
  Rng rng(seed);
  std::vector<Triplet> trips;
  trips.reserve(2 * spec.support.size());
  const double scale = 1.0 / spec.sign_scale;
  for (const auto& [i, j] : spec.support) {
    const double v = rng.coin() ? scale : -scale;
    trips.push_back({i, j, cplx(v, 0.0)});
    trips.push_back({j, i, cplx(v, 0.0)});
  }
  return SparseMatrix::from_triplets(spec.dim, std::move(trips), true);
}

CenteredErOperator::CenteredErOperator(const EnsembleSpec& spec, SeedSpec seed)
    : a_(sample_adjacency(spec, seed)),
      profile_(spec.profile),
      d_(spec.params.d),
      inv_sqrt_d_(1.0 / std::sqrt(spec.params.d)),
      hermitian_(spec.hermitian()) {
  if (!profile_.is_homogeneous() && profile_.as_blocks() == nullptr)
    require(n() <= 2048, "dense-profile centering sweeps O(n^2); use n <= 2048");
}

void CenteredErOperator::apply_adjacency(const Eigen::VectorXd& x,
                                         Eigen::VectorXd& y) const {
  const int nn = n();
  y.resize(nn);
  for (int i = 0; i < nn; ++i) {
    double s = 0.0;
    for (int c : a_.row_cols(i)) s += x[c];  // adjacency entries are exactly 1
    y[i] = s;
  }
}

void CenteredErOperator::apply(const Eigen::VectorXd& x, Eigen::VectorXd& y) const {
  apply_adjacency(x, y);
  const int nn = n();
  if (profile_.is_homogeneous()) {
    const double p = nn >= 2 ? profile_(0, 1) : 0.0;
    const double total = x.sum();
    for (int i = 0; i < nn; ++i) y[i] -= p * (total - x[i]);
  } else if (const auto* b = profile_.as_blocks()) {
    const int nb = static_cast<int>(b->sizes.size());
    Eigen::VectorXd block_sum = Eigen::VectorXd::Zero(nb);
    for (int i = 0; i < nn; ++i) block_sum[profile_.block_of(i)] += x[i];
    for (int i = 0; i < nn; ++i) {
      const int bi = profile_.block_of(i);
      double s = 0.0;
      for (int bj = 0; bj < nb; ++bj) s += b->rates(bi, bj) * block_sum[bj];
      y[i] -= s - b->rates(bi, bi) * x[i];
    }
  } else {
    for (int i = 0; i < nn; ++i) {
      double s = 0.0;
      for (int j = 0; j < nn; ++j) s += profile_(i, j) * x[j];
      y[i] -= s;
    }
  }
  y *= inv_sqrt_d_;
}

double CenteredErOperator::row_variance_sum(int i) const {
  // sum_j (A_ij - p_ij)^2 = sum_{j in row} (1 - 2 p_ij) + sum_j p_ij^2.
  double s = profile_.row_sum_sq(i);
  for (int c : a_.row_cols(i)) s += 1.0 - 2.0 * profile_(i, c);
  return s / d_;
}

}  // namespace nbspectra
