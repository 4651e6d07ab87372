#include "nbspectra/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "nbspectra/rng.hpp"

namespace nbspectra {

namespace {

bool is_real_matrix(const Eigen::MatrixXcd& a) {
  return a.imag().cwiseAbs().maxCoeff() == 0.0;
}

Eigen::VectorXcd random_unit_vector(int m, Rng& rng) {
  Eigen::VectorXcd x(m);
  for (int i = 0; i < m; ++i)
    x[i] = cplx(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
  const double nx = x.norm();
  if (nx == 0.0) x[0] = 1.0; else x /= nx;
  return x;
}

}  // namespace

std::vector<cplx> dense_spectrum(const Eigen::MatrixXcd& a) {
  if (a.rows() != a.cols())
    throw std::invalid_argument("dense_spectrum: matrix must be square");
  if (a.rows() > 4096)
    throw std::invalid_argument("dense_spectrum: dimension > 4096");
  std::vector<cplx> out;
  if (a.rows() == 0) return out;
  if (is_real_matrix(a)) {
    Eigen::EigenSolver<Eigen::MatrixXd> es(a.real(), /*computeEigenvectors=*/false);
    if (es.info() != Eigen::Success)
      throw std::runtime_error("dense_spectrum: real QR iteration failed");
    const auto& ev = es.eigenvalues();
    out.assign(ev.data(), ev.data() + ev.size());
  } else {
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(a, false);
    if (es.info() != Eigen::Success)
      throw std::runtime_error("dense_spectrum: complex QR iteration failed");
    const auto& ev = es.eigenvalues();
    out.assign(ev.data(), ev.data() + ev.size());
  }
  return out;
}

namespace {

// One cycle of Arnoldi from x. Returns the dominant Ritz value, its Ritz
// vector (for thick-restart-style continuation), and the residual bound
// h_{k+1,k} |s_k|. exact_break means the Krylov space closed, so the Ritz
// values are exact eigenvalues of the restriction.
struct ArnoldiCycle {
  cplx theta{0.0, 0.0};
  Eigen::VectorXcd ritz_vec;
  double residual = 0.0;
  bool exact_break = false;
  int steps = 0;
};

ArnoldiCycle arnoldi_cycle(const NbOperator& b, const Eigen::VectorXcd& x0,
                           int kdim) {
  const int m = b.m();
  Eigen::MatrixXcd v(m, kdim + 1);
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(kdim + 1, kdim);
  v.col(0) = x0 / x0.norm();

  ArnoldiCycle out;
  int k = 0;
  for (; k < kdim; ++k) {
    ++out.steps;
    Eigen::VectorXcd w(m);
    b.apply({v.col(k).data(), std::size_t(m)}, {w.data(), std::size_t(m)});
    // Modified Gram-Schmidt with one reorthogonalization pass.
    for (int pass = 0; pass < 2; ++pass)
      for (int i = 0; i <= k; ++i) {
        const cplx c = v.col(i).adjoint() * w;
        h(i, k) += c;
        w -= c * v.col(i);
      }
    const double nw = w.norm();
    h(k + 1, k) = nw;
    if (nw <= 1e-14 * std::max(1.0, h.cwiseAbs().maxCoeff())) {
      out.exact_break = true;
      ++k;
      break;
    }
    v.col(k + 1) = w / nw;
  }

  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(h.topLeftCorner(k, k));
  if (es.info() != Eigen::Success)
    throw std::runtime_error("spectral_radius: Hessenberg eigensolve failed");
  int best = 0;
  for (int i = 1; i < k; ++i)
    if (std::abs(es.eigenvalues()[i]) > std::abs(es.eigenvalues()[best])) best = i;
  out.theta = es.eigenvalues()[best];
  const Eigen::VectorXcd s = es.eigenvectors().col(best);
  out.residual = out.exact_break
                     ? 0.0
                     : std::abs(h(k, k - 1)) * std::abs(s[k - 1]) / s.norm();
  out.ritz_vec = v.leftCols(k) * s;
  return out;
}

}  // namespace

RadiusReport spectral_radius(const NbOperator& b, const SpectralConfig& cfg) {
  RadiusReport rep;
  const int m = b.m();
  if (m == 0) {
    rep.converged = true;
    return rep;
  }
  Rng rng(cfg.seed);
  const int kdim = std::min(m, 24);
  const int cycles =
      std::max(2, cfg.max_iter / (kdim * std::max(1, cfg.restarts)));

  for (int r = 0; r < std::max(1, cfg.restarts); ++r) {
    Eigen::VectorXcd x = random_unit_vector(m, rng);

    // Gelfand diagnostics for this restart: r_k = ||B^k x||^{1/k}.
    std::vector<double> gelfand;
    {
      Eigen::VectorXcd gx = x, gy(m);
      double log_acc = 0.0;
      for (int k = 1; k <= 32; ++k) {
        b.apply({gx.data(), std::size_t(m)}, {gy.data(), std::size_t(m)});
        const double ny = gy.norm();
        if (ny < 1e-300) {
          gelfand.push_back(0.0);
          break;
        }
        log_acc += std::log(ny);
        gelfand.push_back(std::exp(log_acc / k));
        gx = gy / ny;
      }
    }

    double est = 0.0;
    bool this_converged = false;
    for (int c = 0; c < cycles; ++c) {
      auto cyc = arnoldi_cycle(b, x, kdim);
      rep.iterations += cyc.steps;
      est = std::abs(cyc.theta);
      if (cyc.residual <= cfg.tol * std::max(1.0, est)) {
        this_converged = true;
        break;
      }
      const double nv = cyc.ritz_vec.norm();
      if (nv < 1e-300) break;
      x = cyc.ritz_vec / nv;
    }

    if (est >= rep.rho) {
      rep.rho = est;
      rep.gelfand = std::move(gelfand);
    }
    rep.converged = rep.converged || this_converged;
  }

  if (cfg.cross_validate && m <= 4096) {
    double d = 0.0;
    for (cplx ev : dense_spectrum(b.dense())) d = std::max(d, std::abs(ev));
    rep.dense_rho = d;
  }
  return rep;
}

namespace {

template <class Scalar>
struct LanczosOut {
  Eigen::VectorXd ritz;      // ascending
  Eigen::VectorXd residual;  // same order
  int iterations = 0;
  bool breakdown = false;
};

/// Lanczos with full reorthogonalization. Returns converged Ritz data for the
/// tridiagonal section built so far.
template <class Scalar>
LanczosOut<Scalar> lanczos_run(
    Eigen::Index dim,
    const std::function<void(const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>&,
                             Eigen::Matrix<Scalar, Eigen::Dynamic, 1>&)>& apply,
    const SpectralConfig& cfg, int needed_extremes) {
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  LanczosOut<Scalar> out;
  const int kmax = static_cast<int>(std::min<Eigen::Index>(
      dim, std::min(cfg.max_iter, 500)));

  Rng rng(cfg.seed);
  Vec v(dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    if constexpr (std::is_same_v<Scalar, cplx>)
      v[i] = cplx(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
    else
      v[i] = rng.uniform(-1.0, 1.0);
  }
  v /= v.norm();

  std::vector<Vec> basis;
  basis.push_back(v);
  std::vector<double> alpha, beta;
  Vec w(dim);

  auto tridiag_eigs = [&](Eigen::VectorXd& vals, Eigen::MatrixXd& vecs) {
    const int k = static_cast<int>(alpha.size());
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(k, k);
    for (int i = 0; i < k; ++i) {
      t(i, i) = alpha[i];
      if (i + 1 < k) t(i, i + 1) = t(i + 1, i) = beta[i];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
    vals = es.eigenvalues();
    vecs = es.eigenvectors();
  };

  for (int k = 0; k < kmax; ++k) {
    out.iterations = k + 1;
    apply(basis[k], w);
    double a;
    if constexpr (std::is_same_v<Scalar, cplx>)
      a = (basis[k].adjoint() * w)[0].real();
    else
      a = basis[k].dot(w);
    alpha.push_back(a);
    w -= a * basis[k];
    if (k > 0) w -= Scalar(beta[k - 1]) * basis[k - 1];
    // Two passes of full reorthogonalization keep the basis numerically
    // orthogonal at desk scale.
    for (int pass = 0; pass < 2; ++pass)
      for (const Vec& u : basis) {
        if constexpr (std::is_same_v<Scalar, cplx>)
          w -= (u.adjoint() * w)[0] * u;
        else
          w -= u.dot(w) * u;
      }
    const double nb = w.norm();
    if (nb < 1e-12) {
      out.breakdown = true;  // exact invariant subspace
      break;
    }
    beta.push_back(nb);
    basis.push_back(w / nb);

    if ((k + 1) % 10 == 0 || k + 1 == kmax) {
      Eigen::VectorXd vals;
      Eigen::MatrixXd vecs;
      tridiag_eigs(vals, vecs);
      const int kk = static_cast<int>(vals.size());
      int conv = 0;
      auto resid = [&](int idx) {
        return nb * std::abs(vecs(kk - 1, idx));
      };
      // Extremes converge first in Lanczos; check the ones we need.
      bool ok = true;
      for (int t = 0; t < needed_extremes && t < kk; ++t) {
        if (resid(t) > cfg.tol * std::max(1.0, std::abs(vals[t]))) ok = false;
        if (resid(kk - 1 - t) > cfg.tol * std::max(1.0, std::abs(vals[kk - 1 - t])))
          ok = false;
      }
      (void)conv;
      if (ok && kk >= 2 * needed_extremes) {
        out.ritz = vals;
        out.residual.resize(kk);
        for (int i = 0; i < kk; ++i) out.residual[i] = resid(i);
        return out;
      }
    }
  }

  Eigen::VectorXd vals;
  Eigen::MatrixXd vecs;
  tridiag_eigs(vals, vecs);
  const int kk = static_cast<int>(vals.size());
  out.ritz = vals;
  out.residual = Eigen::VectorXd::Zero(kk);
  if (!beta.empty() && !out.breakdown) {
    const double nb = beta.back();
    for (int i = 0; i < kk; ++i)
      out.residual[i] = nb * std::abs(vecs(kk - 1, i));
  }
  return out;
}

}  // namespace

HermitianExtremes hermitian_extremes(const SparseMatrix& h,
                                     const SpectralConfig& cfg) {
  if (!h.is_hermitian())
    throw std::invalid_argument("hermitian_extremes: matrix not flagged Hermitian");
  HermitianExtremes out;
  const int n = h.n();
  if (n == 0) {
    out.converged = true;
    return out;
  }
  if (n <= 512) {
    if (h.is_real()) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h.dense().real());
      if (es.info() != Eigen::Success)
        throw std::runtime_error("hermitian_extremes: dense solve failed");
      out.lambda_min = es.eigenvalues()[0];
      out.lambda_max = es.eigenvalues()[n - 1];
    } else {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h.dense());
      if (es.info() != Eigen::Success)
        throw std::runtime_error("hermitian_extremes: dense solve failed");
      out.lambda_min = es.eigenvalues()[0];
      out.lambda_max = es.eigenvalues()[n - 1];
    }
    out.converged = true;
  } else if (h.is_real()) {
    auto apply = [&h](const Eigen::VectorXd& x, Eigen::VectorXd& y) {
      const int n = h.n();
      for (int i = 0; i < n; ++i) {
        double acc = 0.0;
        auto cols = h.row_cols(i);
        auto vals = h.row_vals(i);
        for (std::size_t k = 0; k < cols.size(); ++k)
          acc += vals[k].real() * x[cols[k]];
        y[i] = acc;
      }
    };
    auto run = lanczos_run<double>(n, apply, cfg, 1);
    out.lambda_min = run.ritz[0];
    out.lambda_max = run.ritz[run.ritz.size() - 1];
    out.iterations = run.iterations;
    out.converged =
        run.breakdown ||
        (run.residual[0] <= cfg.tol * std::max(1.0, std::abs(out.lambda_min)) &&
         run.residual[run.ritz.size() - 1] <=
             cfg.tol * std::max(1.0, std::abs(out.lambda_max)));
  } else {
    auto apply = [&h](const Eigen::VectorXcd& x, Eigen::VectorXcd& y) {
      h.apply({x.data(), x.size()}, {y.data(), y.size()});
    };
    auto run = lanczos_run<cplx>(n, apply, cfg, 1);
    out.lambda_min = run.ritz[0];
    out.lambda_max = run.ritz[run.ritz.size() - 1];
    out.iterations = run.iterations;
    out.converged =
        run.breakdown ||
        (run.residual[0] <= cfg.tol * std::max(1.0, std::abs(out.lambda_min)) &&
         run.residual[run.ritz.size() - 1] <=
             cfg.tol * std::max(1.0, std::abs(out.lambda_max)));
  }
  out.opnorm = std::max(std::abs(out.lambda_min), std::abs(out.lambda_max));
  return out;
}

LanczosResult lanczos_extremes(
    Eigen::Index dim,
    const std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)>& apply,
    const SpectralConfig& cfg, bool want_second_largest) {
  LanczosResult out;
  if (dim == 0) {
    out.converged = true;
    return out;
  }
  auto run = lanczos_run<double>(dim, apply, cfg, want_second_largest ? 2 : 1);
  const int kk = static_cast<int>(run.ritz.size());
  out.lambda_min = run.ritz[0];
  out.lambda_max = run.ritz[kk - 1];
  out.lambda_second = kk >= 2 ? run.ritz[kk - 2] : run.ritz[kk - 1];
  out.iterations = run.iterations;
  auto ok = [&](int i) {
    return run.residual[i] <= cfg.tol * std::max(1.0, std::abs(run.ritz[i]));
  };
  out.converged = run.breakdown ||
                  (ok(0) && ok(kk - 1) && (!want_second_largest || kk < 2 || ok(kk - 2)));
  return out;
}

std::optional<double> max_real_eigenvalue(const NbOperator& b, double imag_tol) {
  if (b.m() == 0) return std::nullopt;
  if (b.m() > 4096)
    throw std::invalid_argument("max_real_eigenvalue: dense path needs m <= 4096");
  std::optional<double> best;
  for (cplx ev : dense_spectrum(b.dense())) {
    if (std::abs(ev.imag()) <= imag_tol * (1.0 + std::abs(ev))) {
      if (!best || ev.real() > *best) best = ev.real();
    }
  }
  return best;
}

namespace {

/// ||B v||^2 over the full n^2 row space, for a support-restricted v.
double full_row_expansion(const NbOperator& b, const Eigen::VectorXcd& v) {
  const EdgeIndex& idx = b.edges();
  const auto& w = b.edge_values();
  const int n = idx.n;
  double total = 0.0;
  for (int j = 0; j < n; ++j) {
    cplx s(0.0);
    for (int f = idx.row_begin[j]; f < idx.row_begin[j + 1]; ++f)
      s += w[f] * v[f];
    const int outdeg = idx.row_begin[j + 1] - idx.row_begin[j];
    total += (n - outdeg) * std::norm(s);
    for (int f = idx.row_begin[j]; f < idx.row_begin[j + 1]; ++f)
      total += std::norm(s - w[f] * v[f]);
  }
  return total;
}

}  // namespace

TraceMomentResult trace_moment(const NbOperator& b, int ell, TraceMomentMode mode,
                               std::uint64_t seed, int probes) {
  if (ell < 1) throw std::invalid_argument("trace_moment: ell must be >= 1");
  TraceMomentResult out;
  const int m = b.m();
  if (m == 0) {
    out.exact = true;
    return out;
  }

  Eigen::VectorXcd v(m), y(m);
  auto propagate = [&](Eigen::VectorXcd& x) {
    for (int step = 0; step < ell - 1; ++step) {
      b.apply({x.data(), x.size()}, {y.data(), y.size()});
      x.swap(y);
    }
  };

  if (mode == TraceMomentMode::exact_small) {
    if (m > 2048)
      throw std::invalid_argument("trace_moment: exact_small needs m <= 2048");
    double total = 0.0;
    for (int f = 0; f < m; ++f) {
      v.setZero();
      v[f] = 1.0;
      propagate(v);
      total += full_row_expansion(b, v);
    }
    out.value = total;
    out.exact = true;
    out.probes = m;
    return out;
  }

  Rng rng(seed);
  double mean = 0.0, m2 = 0.0;
  for (int p = 0; p < probes; ++p) {
    for (int f = 0; f < m; ++f) v[f] = rng.coin() ? 1.0 : -1.0;
    propagate(v);
    const double sample = full_row_expansion(b, v);
    const double delta = sample - mean;
    mean += delta / (p + 1);
    m2 += delta * (sample - mean);
  }
  out.value = mean;
  out.probes = probes;
  if (probes > 1) out.std_error = std::sqrt(m2 / (probes - 1) / probes);
  return out;
}

}  // namespace nbspectra
