#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "nbspectra/sparse.hpp"

namespace nbspectra {

/// Directed support edges of H in row-major order, with the reverse-edge map
/// needed by the two-pass nonbacktracking matvec.
struct EdgeIndex {
  int n = 0;
  std::vector<std::pair<int, int>> edges;  // (i, j) with H_ij != 0, sorted
  std::vector<int> row_begin;              // size n+1; edges (j, *) live in
                                           // [row_begin[j], row_begin[j+1])
  std::vector<int> reverse_edge;           // position of (j, i), or -1

  int m() const { return static_cast<int>(edges.size()); }
  int index_of(int i, int j) const;        // -1 when (i,j) is not a support edge
};

EdgeIndex build_edge_index(const SparseMatrix& h);

namespace detail {

/// One application of the nonbacktracking matrix restricted to support edges:
///   y_(i,j) = sum_{l != i, (j,l) in support} w_(j,l) x_(j,l)
/// computed as y_e = S_j - w_rev(e) x_rev(e), where S_j sums row j once.
/// Works for any ring scalar; the exact walk oracles instantiate integers.
template <class Scalar>
void nb_apply_restricted(const EdgeIndex& idx, std::span<const Scalar> w,
                         std::span<const Scalar> x, std::span<Scalar> y,
                         std::span<Scalar> scratch_rows) {
  for (int j = 0; j < idx.n; ++j) {
    Scalar s{};
    for (int f = idx.row_begin[j]; f < idx.row_begin[j + 1]; ++f) s += w[f] * x[f];
    scratch_rows[j] = s;
  }
  for (int e = 0; e < idx.m(); ++e) {
    const int j = idx.edges[e].second;
    Scalar v = scratch_rows[j];
    const int r = idx.reverse_edge[e];
    if (r >= 0) v -= w[r] * x[r];
    y[e] = v;
  }
}

}  // namespace detail

/// The nonbacktracking matrix B of H:
///   B_{(i,j),(k,l)} = H_kl 1{j = k} 1{i != l}.
/// Restricted mode indexes the m support edges of H; full mode indexes all
/// n^2 ordered pairs (validation only, n <= 64). The nonzero spectra of the
/// two modes coincide.
class NbOperator {
 public:
  explicit NbOperator(const SparseMatrix& h);

  int n() const { return idx_.n; }
  int m() const { return idx_.m(); }
  const EdgeIndex& edges() const { return idx_; }
  const std::vector<cplx>& edge_values() const { return w_; }
  const SparseMatrix& matrix() const { return h_; }

  /// y = B x on support edges (length m). Two-pass, O(m + n).
  void apply(std::span<const cplx> x, std::span<cplx> y) const;

  /// y = B x on all n^2 ordered pairs, row-major e = i*n + j. Guarded.
  void apply_full(std::span<const cplx> x, std::span<cplx> y) const;

  /// Dense m x m restriction. Guarded to m <= 4096.
  Eigen::MatrixXcd dense() const;

  /// Dense n^2 x n^2 matrix. Guarded to n <= 64.
  Eigen::MatrixXcd dense_full() const;

 private:
  void check_full_mode() const {
    if (idx_.n > 64)
      throw std::invalid_argument(
          "NbOperator: full n^2 mode is validation-only (n <= 64)");
  }

  SparseMatrix h_;
  EdgeIndex idx_;
  std::vector<cplx> w_;            // H value per support edge
  mutable std::vector<cplx> row_;  // scratch S_j
};

NbOperator build_nb_operator(const SparseMatrix& h);

}  // namespace nbspectra
