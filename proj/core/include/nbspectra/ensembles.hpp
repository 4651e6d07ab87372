#pragma once

#include <utility>
#include <vector>

#include <Eigen/Core>

#include "nbspectra/model.hpp"
#include "nbspectra/rng.hpp"
#include "nbspectra/sparse.hpp"

namespace nbspectra {

enum class EnsembleKind {
  hermitian_er,
  directed_er,
  sbm,
  rademacher,
};

/// One sampleable random-matrix family. ER kinds center a Bernoulli
/// adjacency, H = d^{-1/2}(A - EA); the rademacher kind puts independent
/// signs / q on a fixed symmetric support (every entry takes finitely many
/// values, so expectations can be enumerated exactly).
struct EnsembleSpec {
  EnsembleKind kind = EnsembleKind::hermitian_er;
  ProbabilityProfile profile;  // ER and sbm kinds
  EnsembleParams params;       // derived once at construction
  int dim = 0;

  // rademacher only: entries sigma_ij / sign_scale on `support`, i < j
  std::vector<std::pair<int, int>> support;
  double sign_scale = 1.0;

  int n() const { return dim; }
  bool hermitian() const { return kind != EnsembleKind::directed_er; }
  bool finite_support() const { return kind == EnsembleKind::rademacher; }

  static EnsembleSpec hermitian_er(ProbabilityProfile p);
  static EnsembleSpec directed_er(ProbabilityProfile p);
  static EnsembleSpec sbm(std::vector<int> block_sizes, Eigen::MatrixXd rates);
  static EnsembleSpec rademacher(int n, double q,
                                 std::vector<std::pair<int, int>> support);
};

/// p_ij = rates[block(i)][block(j)] with zero diagonal.
ProbabilityProfile build_sbm_profile(std::vector<int> block_sizes,
                                     Eigen::MatrixXd rates);

struct ErSample {
  SparseMatrix a;  // 0/1 adjacency
  SparseMatrix h;  // d^{-1/2}(A - P) on the support of P
};

/// Adjacency only, any n. The same seed always reproduces the same matrix,
/// bit for bit, regardless of which sampler consumes it.
SparseMatrix sample_adjacency(const EnsembleSpec& spec, SeedSpec seed);

/// Materializing samplers. The centered matrix is dense wherever P is, so
/// these are guarded to n <= 2048; above that use CenteredErOperator.
ErSample sample_inhomogeneous_er(const EnsembleSpec& spec, SeedSpec seed);
ErSample sample_directed_er(const EnsembleSpec& spec, SeedSpec seed);

SparseMatrix sample_rademacher(const EnsembleSpec& spec, SeedSpec seed);

/// H = d^{-1/2}(A - P) applied without materializing the dense centering
/// part: Ax runs over the sparse adjacency and Px collapses to block partial
/// sums, so one apply costs O(nnz(A) + n) for homogeneous and block
/// profiles (dense profiles fall back to an O(n^2) sweep).
class CenteredErOperator {
 public:
  CenteredErOperator(const EnsembleSpec& spec, SeedSpec seed);

  int n() const { return static_cast<int>(a_.n()); }
  bool hermitian() const { return hermitian_; }
  double d() const { return d_; }
  const SparseMatrix& adjacency() const { return a_; }

  /// y = H x.
  void apply(const Eigen::VectorXd& x, Eigen::VectorXd& y) const;
  /// y = A x (raw adjacency, for lambda_2(A) style statistics).
  void apply_adjacency(const Eigen::VectorXd& x, Eigen::VectorXd& y) const;

  /// sum_j |H_ij|^2 for this realization, computed in closed form from the
  /// adjacency row and the profile.
  double row_variance_sum(int i) const;

 private:
  SparseMatrix a_;
  ProbabilityProfile profile_;
  double d_ = 0.0;
  double inv_sqrt_d_ = 0.0;
  bool hermitian_ = true;
};

}  // namespace nbspectra
