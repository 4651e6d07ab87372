#pragma once

#include <optional>

#include <Eigen/Core>

#include "nbspectra/sparse.hpp"
#include "nbspectra/spectra.hpp"

namespace nbspectra {

/// The rational matrices of the Ihara-Bass style identity:
///   H(lambda)_ij = lambda H_ij / (lambda^2 - H_ij H_ji)   on support,
///   m_i(lambda)  = 1 + sum_k H_ik H_ki / (lambda^2 - H_ik H_ki),
/// and lambda lies in the spectrum of B iff det(M(lambda) - H(lambda)) = 0,
/// valid whenever lambda^2 != H_ij H_ji for every ordered pair. Since the
/// diagonal vanishes, that always includes the condition |lambda|^2 > 0.
struct LambdaMatrices {
  Eigen::MatrixXcd h_lambda;
  Eigen::VectorXcd m_lambda;  // diagonal of M(lambda)
  double guard = 0.0;         // min over all pairs of |lambda^2 - H_ij H_ji|
};

/// Throws when the guard drops to eps_guard or below, naming the offending
/// pair.
LambdaMatrices lambda_matrices(const SparseMatrix& h, cplx lambda,
                               double eps_guard = 1e-10);

/// det(M(lambda) - H(lambda)) in log form: det = exp(log_abs + i phase).
/// log_abs is -inf at an exact root.
struct LogDet {
  double log_abs = 0.0;
  double phase = 0.0;
};
LogDet ib_determinant(const SparseMatrix& h, cplx lambda,
                      double eps_guard = 1e-10);

/// Lifts a null vector y of M(lambda) - H(lambda) to an eigenvector of the
/// full n^2 nonbacktracking matrix:
///   x_(j,i) = (lambda y_i - H_ij y_j) / (lambda^2 - H_ij H_ji),
/// returned row-major (component (a,b) at a*n + b). Requires n <= 64,
/// nonzero y, and residual ||(M - H(lambda)) y|| <= resid_tol ||y||.
Eigen::VectorXcd recover_b_eigvec(const SparseMatrix& h, cplx lambda,
                                  const Eigen::VectorXcd& y,
                                  double eps_guard = 1e-10,
                                  double resid_tol = 1e-8);

/// f(x) = x + 1/x for x >= 1, and 2 on [0, 1]. Throws for negative x.
double f_profile(double x);

/// The two norm bounds driven by rho(B):
///   thm: ||H|| <= ||H||_{2->inf} f(rho(B)/||H||_{2->inf}) + 7 ||H||_{1->inf}
///   cor: ||H|| <= 2||H||_{2->inf} + (rho(B)-||H||_{2->inf})_+^2/||H||_{2->inf}
///                 + 7 ||H||_{1->inf}
struct BoundReport {
  double opnorm = 0.0;
  double rho_b = 0.0;
  double norm_2inf = 0.0;
  double norm_1inf = 0.0;
  double thm_bound = 0.0;
  double cor_bound = 0.0;
  bool thm_ok = true;
  bool cor_ok = true;
  double slack = 1e-8;
};

/// rho_b may be supplied (e.g. from a dense solve); otherwise it is computed
/// densely for m <= 4096 and iteratively above.
BoundReport norm_bound(const SparseMatrix& h,
                       std::optional<double> rho_b = std::nullopt,
                       const SpectralConfig& cfg = {});

/// lambda_0 = max{1 + sqrt(delta), max(spectrum(B) on the real line)}.
/// delta must lie in [0, 1].
double lambda0(const SparseMatrix& h, double delta);

/// Positive semidefiniteness margin of (lambda_0 + 1/lambda_0 + 6 delta) - H.
/// Hypotheses checked (throws listing failures): max |H_ij| <= delta and
/// max_i sum_j |H_ij|^2 <= 1 + delta, delta in [0, 1], H Hermitian.
struct PsdGapReport {
  double lambda0 = 0.0;
  double cap = 0.0;         // lambda_0 + 1/lambda_0 + 6 delta
  double lambda_max = 0.0;  // top eigenvalue of H
  double gap = 0.0;         // cap - lambda_max
};
PsdGapReport psd_gap(const SparseMatrix& h, double delta);

}  // namespace nbspectra
