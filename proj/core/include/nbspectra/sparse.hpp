#pragma once

#include <complex>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace nbspectra {

using cplx = std::complex<double>;

struct Triplet {
  int i = 0;
  int j = 0;
  cplx v;
};

/// Sparse complex matrix in CSR form with 0-based indices.
///
/// Invariants enforced at construction: indices lie in [0, n), the diagonal
/// is zero, no stored entry is exactly zero (exact zeros are dropped), no
/// duplicates, and when the Hermitian flag is set every stored (i,j) has a
/// stored (j,i) equal to its conjugate.
class SparseMatrix {
 public:
  SparseMatrix() = default;

  static SparseMatrix from_triplets(int n, std::vector<Triplet> entries,
                                    bool hermitian);
  static SparseMatrix zero(int n, bool hermitian = true);

  int n() const { return n_; }
  std::size_t nnz() const { return col_.size(); }
  bool is_hermitian() const { return hermitian_; }
  /// True when every stored value has zero imaginary part.
  bool is_real() const;

  bool has(int i, int j) const { return find(i, j) >= 0; }
  /// Value at (i,j), zero when absent.
  cplx at(int i, int j) const;

  /// Row slice accessors; columns within a row are strictly increasing.
  std::span<const int> row_cols(int i) const;
  std::span<const cplx> row_vals(int i) const;
  int row_nnz(int i) const { return ptr_[i + 1] - ptr_[i]; }

  std::vector<Triplet> triplets() const;

  /// Sum_j |H_ij|^2 for one row.
  double row_sum_sq(int i) const;

  /// y = H x.
  void apply(std::span<const cplx> x, std::span<cplx> y) const;

  /// Dense copy; guarded to n <= 4096.
  Eigen::MatrixXcd dense() const;

  /// Relabeled copy: entry (i,j) moves to (perm[i], perm[j]).
  SparseMatrix permuted(const std::vector<int>& perm) const;

 private:
  int find(int i, int j) const;  // CSR position or -1

  int n_ = 0;
  bool hermitian_ = true;
  std::vector<int> ptr_{0};  // size n_+1
  std::vector<int> col_;
  std::vector<cplx> val_;
};

/// max_{i,j} |H_ij| and max_i sqrt(sum_j |H_ij|^2). The operator norm slot is
/// filled by callers that have run an eigensolver.
struct NormReport {
  double norm_2inf = 0.0;
  double norm_1inf = 0.0;
  std::optional<double> opnorm;
};

NormReport compute_norms(const SparseMatrix& h);

/// MatrixMarket-style coordinate I/O (1-based indices in the file).
void write_matrix_market(std::ostream& os, const SparseMatrix& h);
SparseMatrix read_matrix_market(std::istream& is);
void write_matrix_market_file(const std::string& path, const SparseMatrix& h);
SparseMatrix read_matrix_market_file(const std::string& path);

}  // namespace nbspectra
