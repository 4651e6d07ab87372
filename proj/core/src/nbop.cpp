#include "nbspectra/nbop.hpp"

#include <algorithm>

namespace nbspectra {

int EdgeIndex::index_of(int i, int j) const {
  if (i < 0 || i >= n || j < 0 || j >= n) return -1;
  auto first = edges.begin() + row_begin[i];
  auto last = edges.begin() + row_begin[i + 1];
  auto it = std::lower_bound(first, last, std::make_pair(i, j));
  if (it != last && *it == std::make_pair(i, j))
    return static_cast<int>(it - edges.begin());
  return -1;
}

EdgeIndex build_edge_index(const SparseMatrix& h) {
  EdgeIndex idx;
  idx.n = h.n();
  idx.edges.reserve(h.nnz());
  idx.row_begin.assign(idx.n + 1, 0);
  for (int i = 0; i < idx.n; ++i) {
    for (int j : h.row_cols(i)) idx.edges.emplace_back(i, j);
    idx.row_begin[i + 1] = static_cast<int>(idx.edges.size());
  }
  idx.reverse_edge.resize(idx.edges.size());
  for (int e = 0; e < idx.m(); ++e) {
    auto [i, j] = idx.edges[e];
    idx.reverse_edge[e] = idx.index_of(j, i);
  }
  return idx;
}

NbOperator::NbOperator(const SparseMatrix& h) : h_(h), idx_(build_edge_index(h)) {
  w_.reserve(idx_.m());
  for (const auto& [i, j] : idx_.edges) w_.push_back(h_.at(i, j));
  row_.resize(idx_.n);
}

void NbOperator::apply(std::span<const cplx> x, std::span<cplx> y) const {
  if (static_cast<int>(x.size()) != m() || static_cast<int>(y.size()) != m())
    throw std::invalid_argument("NbOperator::apply: dimension mismatch");
  detail::nb_apply_restricted<cplx>(idx_, w_, x, y, row_);
}

void NbOperator::apply_full(std::span<const cplx> x, std::span<cplx> y) const {
  check_full_mode();
  const int n = idx_.n;
  if (static_cast<int>(x.size()) != n * n || static_cast<int>(y.size()) != n * n)
    throw std::invalid_argument("NbOperator::apply_full: dimension mismatch");
  // S_j depends only on the support components of x.
  for (int j = 0; j < n; ++j) {
    cplx s(0.0);
    for (int f = idx_.row_begin[j]; f < idx_.row_begin[j + 1]; ++f) {
      const int l = idx_.edges[f].second;
      s += w_[f] * x[static_cast<std::size_t>(j) * n + l];
    }
    row_[j] = s;
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      cplx v = row_[j];
      const int r = idx_.index_of(j, i);
      if (r >= 0) v -= w_[r] * x[static_cast<std::size_t>(j) * n + i];
      y[static_cast<std::size_t>(i) * n + j] = v;
    }
}

Eigen::MatrixXcd NbOperator::dense() const {
  if (m() > 4096)
    throw std::invalid_argument("NbOperator::dense: m > 4096");
  Eigen::MatrixXcd b = Eigen::MatrixXcd::Zero(m(), m());
  for (int e = 0; e < m(); ++e) {
    auto [i, j] = idx_.edges[e];
    for (int f = idx_.row_begin[j]; f < idx_.row_begin[j + 1]; ++f)
      if (idx_.edges[f].second != i) b(e, f) = w_[f];
  }
  return b;
}

Eigen::MatrixXcd NbOperator::dense_full() const {
  check_full_mode();
  const int n = idx_.n;
  const int nn = n * n;
  Eigen::MatrixXcd b = Eigen::MatrixXcd::Zero(nn, nn);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int f = idx_.row_begin[j]; f < idx_.row_begin[j + 1]; ++f) {
        const int l = idx_.edges[f].second;
        if (l != i) b(i * n + j, j * n + l) = w_[f];
      }
  return b;
}

NbOperator build_nb_operator(const SparseMatrix& h) { return NbOperator(h); }

}  // namespace nbspectra
