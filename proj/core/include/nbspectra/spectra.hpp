#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "nbspectra/nbop.hpp"
#include "nbspectra/sparse.hpp"

namespace nbspectra {

struct SpectralConfig {
  double tol = 1e-10;
  int max_iter = 4000;
  int restarts = 3;
  std::uint64_t seed = 1;
  /// Compare the iterative estimate against a dense solve when the operator
  /// is small enough; the result lands in RadiusReport::dense_rho.
  bool cross_validate = false;
};

/// Eigenvalues of a dense matrix (nonsymmetric QR under the hood). Real
/// input takes the real solver path. Guarded to dimension <= 4096; throws on
/// solver failure.
std::vector<cplx> dense_spectrum(const Eigen::MatrixXcd& a);

struct RadiusReport {
  double rho = 0.0;
  bool converged = false;
  int iterations = 0;
  /// Gelfand samples r_k = ||B^k x||^{1/k} from the best restart. Diagnostic
  /// only: each sample is biased, not a bound.
  std::vector<double> gelfand;
  std::optional<double> dense_rho;
};

/// Spectral radius of the restricted nonbacktracking operator by power
/// iteration with random complex restarts; the estimate is read off a 2-dim
/// Ritz projection so complex conjugate dominant pairs converge too.
RadiusReport spectral_radius(const NbOperator& b, const SpectralConfig& cfg = {});

struct HermitianExtremes {
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  double opnorm = 0.0;  // max(|lambda_min|, |lambda_max|)
  bool converged = false;
  int iterations = 0;
};

/// Extreme eigenvalues of a Hermitian matrix: dense solve for n <= 512,
/// Lanczos with full reorthogonalization above. Throws if H is not flagged
/// Hermitian.
HermitianExtremes hermitian_extremes(const SparseMatrix& h,
                                     const SpectralConfig& cfg = {});

/// Matrix-free Lanczos on a self-adjoint real operator. `want_second_largest`
/// additionally reports the second-largest eigenvalue (adjacency lambda_2).
struct LanczosResult {
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  double lambda_second = 0.0;
  bool converged = false;
  int iterations = 0;
};
LanczosResult lanczos_extremes(
    Eigen::Index dim,
    const std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)>& apply,
    const SpectralConfig& cfg = {}, bool want_second_largest = false);

/// Largest real point of the restricted spectrum: eigenvalues with
/// |Im| <= imag_tol * (1 + |lambda|). Empty spectrum or no real eigenvalue
/// gives nullopt. Dense path, m <= 4096.
std::optional<double> max_real_eigenvalue(const NbOperator& b,
                                          double imag_tol = 1e-8);

enum class TraceMomentMode { exact_small, stochastic };

struct TraceMomentResult {
  double value = 0.0;
  double std_error = 0.0;  // stochastic mode only
  int probes = 0;
  bool exact = false;
};

/// tr B^l B^{*l} over the full n^2-dimensional space (columns off the support
/// vanish; rows off the support do not). exact_small sums ||B^l delta_f||^2
/// column by column (m <= 2048); stochastic uses Hutchinson sign probes.
TraceMomentResult trace_moment(const NbOperator& b, int ell, TraceMomentMode mode,
                               std::uint64_t seed = 1, int probes = 64);

}  // namespace nbspectra
