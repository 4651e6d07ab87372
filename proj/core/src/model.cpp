#include "nbspectra/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace nbspectra {

ProbabilityProfile ProbabilityProfile::homogeneous(int n, double p) {
  if (n <= 0) throw std::invalid_argument("profile: n must be positive");
  if (p < 0.0 || p > 1.0) throw std::invalid_argument("profile: p outside [0,1]");
  ProbabilityProfile pp;
  pp.n_ = n;
  pp.rep_ = Homogeneous{p};
  return pp;
}

ProbabilityProfile ProbabilityProfile::blocks(std::vector<int> sizes,
                                              Eigen::MatrixXd rates) {
  const int k = static_cast<int>(sizes.size());
  if (k == 0 || rates.rows() != k || rates.cols() != k)
    throw std::invalid_argument("profile: block sizes / rate matrix mismatch");
  if (!rates.isApprox(rates.transpose()))
    throw std::invalid_argument("profile: block rates must be symmetric");
  if ((rates.array() < 0.0).any() || (rates.array() > 1.0).any())
    throw std::invalid_argument("profile: block rate outside [0,1]");
  ProbabilityProfile pp;
  pp.n_ = std::accumulate(sizes.begin(), sizes.end(), 0);
  if (pp.n_ <= 0) throw std::invalid_argument("profile: empty block sizes");
  pp.block_index_.reserve(pp.n_);
  for (int b = 0; b < k; ++b) {
    if (sizes[b] <= 0) throw std::invalid_argument("profile: nonpositive block");
    pp.block_index_.insert(pp.block_index_.end(), sizes[b], b);
  }
  pp.rep_ = Blocks{std::move(sizes), std::move(rates)};
  return pp;
}

ProbabilityProfile ProbabilityProfile::dense(Eigen::MatrixXd p) {
  if (p.rows() != p.cols() || p.rows() == 0)
    throw std::invalid_argument("profile: matrix must be square");
  if (!p.isApprox(p.transpose()))
    throw std::invalid_argument("profile: matrix must be symmetric");
  if ((p.array() < 0.0).any() || (p.array() > 1.0).any())
    throw std::invalid_argument("profile: entry outside [0,1]");
  for (int i = 0; i < p.rows(); ++i)
    if (p(i, i) != 0.0)
      throw std::invalid_argument("profile: diagonal must be zero");
  ProbabilityProfile pp;
  pp.n_ = static_cast<int>(p.rows());
  pp.rep_ = Dense{std::move(p)};
  return pp;
}

double ProbabilityProfile::operator()(int i, int j) const {
  if (i == j) return 0.0;
  if (const auto* h = std::get_if<Homogeneous>(&rep_)) return h->p;
  if (const auto* b = std::get_if<Blocks>(&rep_))
    return b->rates(block_index_[i], block_index_[j]);
  return std::get<Dense>(rep_).p(i, j);
}

double ProbabilityProfile::row_sum(int i) const {
  if (const auto* h = std::get_if<Homogeneous>(&rep_))
    return (n_ - 1) * h->p;
  if (const auto* b = std::get_if<Blocks>(&rep_)) {
    const int bi = block_index_[i];
    double s = 0.0;
    for (int c = 0; c < static_cast<int>(b->sizes.size()); ++c)
      s += b->rates(bi, c) * b->sizes[c];
    return s - b->rates(bi, bi);  // exclude the vertex itself
  }
  return std::get<Dense>(rep_).p.row(i).sum();
}

double ProbabilityProfile::row_sum_sq(int i) const {
  if (const auto* h = std::get_if<Homogeneous>(&rep_))
    return (n_ - 1) * h->p * h->p;
  if (const auto* b = std::get_if<Blocks>(&rep_)) {
    const int bi = block_index_[i];
    double s = 0.0;
    for (int c = 0; c < static_cast<int>(b->sizes.size()); ++c)
      s += b->rates(bi, c) * b->rates(bi, c) * b->sizes[c];
    return s - b->rates(bi, bi) * b->rates(bi, bi);
  }
  return std::get<Dense>(rep_).p.row(i).squaredNorm();
}

double ProbabilityProfile::max_entry() const {
  if (const auto* h = std::get_if<Homogeneous>(&rep_))
    return n_ >= 2 ? h->p : 0.0;
  if (const auto* b = std::get_if<Blocks>(&rep_)) {
    // A diagonal rate only matters when its block has at least two vertices.
    double m = 0.0;
    const int k = static_cast<int>(b->sizes.size());
    for (int r = 0; r < k; ++r)
      for (int c = 0; c < k; ++c) {
        if (r == c && b->sizes[r] < 2) continue;
        m = std::max(m, b->rates(r, c));
      }
    return m;
  }
  return std::get<Dense>(rep_).p.maxCoeff();
}

int ProbabilityProfile::block_of(int i) const {
  return block_index_.empty() ? 0 : block_index_[i];
}

EnsembleParams derive_er_parameters(const ProbabilityProfile& profile) {
  EnsembleParams out;
  const int n = profile.n();
  for (int i = 0; i < n; ++i) out.d = std::max(out.d, profile.row_sum(i));
  if (out.d <= 0.0)
    throw std::invalid_argument("derive_er_parameters: degenerate profile (d = 0)");
  out.kappa = profile.max_entry() * n / out.d;
  out.q_raw = std::sqrt(out.d);
  out.q = std::min(out.q_raw,
                   std::pow(static_cast<double>(n), 1.0 / 13.0) *
                       std::pow(out.kappa, -1.0 / 12.0));
  return out;
}

namespace {

AssumptionReport finish_report(const SparseMatrix& h, double row_max,
                               double entry_max, const EnsembleParams& params) {
  AssumptionReport r;
  r.row_second_moment = {row_max <= 1.0 + 1e-12, row_max, 1.0};
  const double entry_bound = params.kappa / h.n();
  r.entry_second_moment = {entry_max <= entry_bound * (1.0 + 1e-12), entry_max,
                           entry_bound};
  double mag = 0.0;
  for (int i = 0; i < h.n(); ++i)
    for (cplx v : h.row_vals(i)) mag = std::max(mag, std::abs(v));
  const double mag_bound = 1.0 / params.q;
  r.entry_magnitude = {mag <= mag_bound * (1.0 + 1e-12), mag, mag_bound};
  return r;
}

}  // namespace

AssumptionReport validate_assumptions(const SparseMatrix& h,
                                      const ProbabilityProfile& profile,
                                      const EnsembleParams& params) {
  if (h.n() != profile.n())
    throw std::invalid_argument("validate_assumptions: dimension mismatch");
  double row_max = 0.0, entry_max = 0.0;
  for (int i = 0; i < h.n(); ++i) {
    // E|H_ij|^2 = p(1-p)/d entrywise; row sums available in closed form for
    // homogeneous/block profiles, otherwise O(n) per row.
    double s = 0.0;
    for (int j = 0; j < h.n(); ++j) {
      const double p = profile(i, j);
      const double var = p * (1.0 - p) / params.d;
      s += var;
      entry_max = std::max(entry_max, var);
    }
    row_max = std::max(row_max, s);
  }
  return finish_report(h, row_max, entry_max, params);
}

AssumptionReport validate_assumptions_variance(const SparseMatrix& h,
                                               double entry_variance,
                                               const EnsembleParams& params) {
  double row_max = 0.0;
  for (int i = 0; i < h.n(); ++i)
    row_max = std::max(row_max, entry_variance * h.row_nnz(i));
  const double entry_max = entry_variance;
  return finish_report(h, row_max, entry_max, params);
}

}  // namespace nbspectra
