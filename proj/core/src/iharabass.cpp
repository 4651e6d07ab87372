#include "nbspectra/iharabass.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace nbspectra {

namespace {

void check_guard(const SparseMatrix& h, cplx lambda, double eps_guard,
                 double* guard_out) {
  const cplx l2 = lambda * lambda;
  // Any pair with H_ij H_ji = 0 exists (the diagonal at minimum), so the
  // identity's hypothesis demands lambda^2 itself stay away from zero.
  double guard = std::abs(l2);
  int gi = -1, gj = -1;
  if (guard <= eps_guard)
    throw std::invalid_argument(
        "ihara-bass guard: lambda^2 within " + std::to_string(eps_guard) +
        " of H_ij H_ji = 0 (off-support pair)");
  for (int i = 0; i < h.n(); ++i) {
    auto cols = h.row_cols(i);
    auto vals = h.row_vals(i);
    for (std::size_t k = 0; k < cols.size(); ++k) {
      const cplx prod = vals[k] * h.at(cols[k], i);
      const double dist = std::abs(l2 - prod);
      if (dist < guard) {
        guard = dist;
        gi = i;
        gj = cols[k];
      }
    }
  }
  if (guard <= eps_guard)
    throw std::invalid_argument("ihara-bass guard: lambda^2 within " +
                                std::to_string(eps_guard) + " of H_ij H_ji at (" +
                                std::to_string(gi) + "," + std::to_string(gj) +
                                ")");
  if (guard_out) *guard_out = guard;
}

}  // namespace

LambdaMatrices lambda_matrices(const SparseMatrix& h, cplx lambda,
                               double eps_guard) {
  LambdaMatrices out;
  check_guard(h, lambda, eps_guard, &out.guard);
  const int n = h.n();
  const cplx l2 = lambda * lambda;
  out.h_lambda = Eigen::MatrixXcd::Zero(n, n);
  out.m_lambda = Eigen::VectorXcd::Ones(n);
  for (int i = 0; i < n; ++i) {
    auto cols = h.row_cols(i);
    auto vals = h.row_vals(i);
    for (std::size_t k = 0; k < cols.size(); ++k) {
      const cplx prod = vals[k] * h.at(cols[k], i);
      const cplx den = l2 - prod;
      out.h_lambda(i, cols[k]) = lambda * vals[k] / den;
      out.m_lambda[i] += prod / den;
    }
  }
  return out;
}

LogDet ib_determinant(const SparseMatrix& h, cplx lambda, double eps_guard) {
  check_guard(h, lambda, eps_guard, nullptr);
  // The whole evaluation runs in extended precision: near the excluded set
  // the matrix entries scale like 1/guard, the LU pivot products inflate
  // accordingly, and the roundoff floor of a double LU can sit within a few
  // digits of |det| at a genuine root. Widening internally keeps the floor
  // far below the 1e-8-relative drops callers look for.
  using lcplx = std::complex<long double>;
  const int n = h.n();
  const lcplx lam(lambda.real(), lambda.imag());
  const lcplx l2 = lam * lam;
  std::vector<lcplx> a(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i) a[static_cast<std::size_t>(i) * n + i] = 1.0L;
  for (int i = 0; i < n; ++i) {
    auto cols = h.row_cols(i);
    auto vals = h.row_vals(i);
    for (std::size_t k = 0; k < cols.size(); ++k) {
      const cplx w = h.at(cols[k], i);
      const lcplx v(vals[k].real(), vals[k].imag());
      const lcplx prod = v * lcplx(w.real(), w.imag());
      const lcplx den = l2 - prod;
      a[static_cast<std::size_t>(i) * n + cols[k]] -= lam * v / den;
      a[static_cast<std::size_t>(i) * n + i] += prod / den;
    }
  }
  long double log_abs = 0.0L;
  long double phase = 0.0L;
  for (int c = 0; c < n; ++c) {
    int p = c;
    long double best = std::abs(a[static_cast<std::size_t>(c) * n + c]);
    for (int r = c + 1; r < n; ++r) {
      const long double mag = std::abs(a[static_cast<std::size_t>(r) * n + c]);
      if (mag > best) {
        best = mag;
        p = r;
      }
    }
    if (p != c) {
      for (int j = 0; j < n; ++j)
        std::swap(a[static_cast<std::size_t>(p) * n + j],
                  a[static_cast<std::size_t>(c) * n + j]);
      phase += std::numbers::pi_v<long double>;  // row swap flips the sign
    }
    const lcplx piv = a[static_cast<std::size_t>(c) * n + c];
    log_abs += std::log(std::abs(piv));
    phase += std::arg(piv);
    if (std::abs(piv) == 0.0L) break;  // exact zero pivot: det is zero
    for (int r = c + 1; r < n; ++r) {
      const lcplx f = a[static_cast<std::size_t>(r) * n + c] / piv;
      if (f == lcplx(0.0L, 0.0L)) continue;
      a[static_cast<std::size_t>(r) * n + c] = 0.0L;
      for (int j = c + 1; j < n; ++j)
        a[static_cast<std::size_t>(r) * n + j] -=
            f * a[static_cast<std::size_t>(c) * n + j];
    }
  }
  LogDet out;
  out.log_abs = static_cast<double>(log_abs);
  out.phase = static_cast<double>(
      std::remainder(phase, 2.0L * std::numbers::pi_v<long double>));
  return out;
}

Eigen::VectorXcd recover_b_eigvec(const SparseMatrix& h, cplx lambda,
                                  const Eigen::VectorXcd& y, double eps_guard,
                                  double resid_tol) {
  const int n = h.n();
  if (n > 64)
    throw std::invalid_argument("recover_b_eigvec: full mode needs n <= 64");
  if (y.size() != n)
    throw std::invalid_argument("recover_b_eigvec: y has wrong length");
  const double ny = y.norm();
  if (ny == 0.0)
    throw std::invalid_argument("recover_b_eigvec: y must be nonzero");
  LambdaMatrices lm = lambda_matrices(h, lambda, eps_guard);
  Eigen::MatrixXcd a = -lm.h_lambda;
  a.diagonal() += lm.m_lambda;
  const double resid = (a * y).norm();
  if (resid > resid_tol * ny)
    throw std::invalid_argument(
        "recover_b_eigvec: y is not a null vector (residual " +
        std::to_string(resid / ny) + ")");

  const cplx l2 = lambda * lambda;
  Eigen::VectorXcd x(static_cast<Eigen::Index>(n) * n);
  for (int a_row = 0; a_row < n; ++a_row)
    for (int b_col = 0; b_col < n; ++b_col) {
      // Component (j,i) = (a_row, b_col) of the full edge space.
      const cplx hij = h.at(b_col, a_row);  // H_ij with i = b_col, j = a_row
      const cplx hji = h.at(a_row, b_col);
      x[static_cast<Eigen::Index>(a_row) * n + b_col] =
          (lambda * y[b_col] - hij * y[a_row]) / (l2 - hij * hji);
    }
  return x;
}

double f_profile(double x) {
  if (x < 0.0) throw std::invalid_argument("f_profile: negative argument");
  return x <= 1.0 ? 2.0 : x + 1.0 / x;
}

BoundReport norm_bound(const SparseMatrix& h, std::optional<double> rho_b,
                       const SpectralConfig& cfg) {
  BoundReport out;
  NormReport norms = compute_norms(h);
  out.norm_2inf = norms.norm_2inf;
  out.norm_1inf = norms.norm_1inf;
  if (h.nnz() == 0) return out;  // H = 0: zero bounds hold trivially

  if (h.is_hermitian()) {
    out.opnorm = hermitian_extremes(h, cfg).opnorm;
  } else {
    if (h.n() > 2048)
      throw std::invalid_argument("norm_bound: non-Hermitian path needs n <= 2048");
    out.opnorm = h.dense().jacobiSvd().singularValues()[0];
  }

  if (rho_b) {
    out.rho_b = *rho_b;
  } else {
    NbOperator b(h);
    if (b.m() <= 4096) {
      double r = 0.0;
      for (cplx ev : dense_spectrum(b.dense())) r = std::max(r, std::abs(ev));
      out.rho_b = r;
    } else {
      out.rho_b = spectral_radius(b, cfg).rho;
    }
  }

  const double s2 = out.norm_2inf;
  out.thm_bound = s2 * f_profile(out.rho_b / s2) + 7.0 * out.norm_1inf;
  const double excess = std::max(out.rho_b - s2, 0.0);
  out.cor_bound = 2.0 * s2 + excess * excess / s2 + 7.0 * out.norm_1inf;
  out.thm_ok = out.opnorm <= out.thm_bound + out.slack;
  out.cor_ok = out.opnorm <= out.cor_bound + out.slack;
  return out;
}

double lambda0(const SparseMatrix& h, double delta) {
  if (delta < 0.0 || delta > 1.0)
    throw std::invalid_argument("lambda0: delta must lie in [0, 1]");
  double v = 1.0 + std::sqrt(delta);
  NbOperator b(h);
  if (auto mre = max_real_eigenvalue(b)) v = std::max(v, *mre);
  return v;
}

PsdGapReport psd_gap(const SparseMatrix& h, double delta) {
  if (!h.is_hermitian())
    throw std::invalid_argument("psd_gap: H must be Hermitian");
  if (delta < 0.0 || delta > 1.0)
    throw std::invalid_argument("psd_gap: delta must lie in [0, 1]");
  NormReport norms = compute_norms(h);
  std::string violated;
  if (norms.norm_1inf > delta * (1.0 + 1e-12) + 1e-15)
    violated += " max|H_ij| = " + std::to_string(norms.norm_1inf) + " > delta";
  double row_max = 0.0;
  for (int i = 0; i < h.n(); ++i) row_max = std::max(row_max, h.row_sum_sq(i));
  if (row_max > (1.0 + delta) * (1.0 + 1e-12))
    violated += " max_i sum_j |H_ij|^2 = " + std::to_string(row_max) +
                " > 1 + delta";
  if (!violated.empty())
    throw std::invalid_argument("psd_gap: hypotheses violated:" + violated);

  PsdGapReport out;
  out.lambda0 = lambda0(h, delta);
  out.cap = out.lambda0 + 1.0 / out.lambda0 + 6.0 * delta;
  out.lambda_max = h.nnz() == 0 ? 0.0 : hermitian_extremes(h).lambda_max;
  out.gap = out.cap - out.lambda_max;
  return out;
}

}  // namespace nbspectra
