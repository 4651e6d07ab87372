// Eigensolver wrappers: iterative estimates against dense oracles, known
// closed-form spectra, and the trace moments behind the growth diagnostics.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "nbspectra/nbop.hpp"
#include "nbspectra/rng.hpp"
#include "nbspectra/sparse.hpp"
#include "nbspectra/spectra.hpp"

using namespace nbspectra;

namespace {

SparseMatrix adjacency_graph(int n, const std::vector<std::pair<int, int>>& edges,
                             double scale = 1.0) {
  std::vector<Triplet> ts;
  for (auto [a, b] : edges) {
    ts.push_back({a, b, cplx(scale, 0)});
    ts.push_back({b, a, cplx(scale, 0)});
  }
  return SparseMatrix::from_triplets(n, std::move(ts), true);
}

std::vector<std::pair<int, int>> complete_edges(int n) {
  std::vector<std::pair<int, int>> e;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) e.push_back({i, j});
  return e;
}

// Outer 5-cycle, inner pentagram, spokes. 3-regular on 10 vertices.
std::vector<std::pair<int, int>> petersen_edges() {
  std::vector<std::pair<int, int>> e;
  for (int i = 0; i < 5; ++i) {
    e.push_back({i, (i + 1) % 5});
    e.push_back({i, i + 5});
    e.push_back({5 + i, 5 + (i + 2) % 5});
  }
  return e;
}

SparseMatrix random_hermitian(int n, std::uint64_t seed, double fill) {
  Rng rng(seed);
  std::vector<Triplet> ts;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      if (!rng.bernoulli(fill)) continue;
      cplx v(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
      ts.push_back({i, j, v});
      ts.push_back({j, i, std::conj(v)});
    }
  return SparseMatrix::from_triplets(n, std::move(ts), true);
}

double dense_radius(const NbOperator& b) {
  double r = 0.0;
  for (auto z : dense_spectrum(b.dense())) r = std::max(r, std::abs(z));
  return r;
}

}  // namespace

TEST_CASE("dense_spectrum on closed-form matrices") {
  Eigen::MatrixXcd rot = Eigen::MatrixXcd::Zero(2, 2);
  rot(0, 1) = cplx(-1, 0);
  rot(1, 0) = cplx(1, 0);
  auto ev = dense_spectrum(rot);
  REQUIRE(ev.size() == 2);
  std::sort(ev.begin(), ev.end(),
            [](cplx a, cplx b) { return a.imag() < b.imag(); });
  CHECK(std::abs(ev[0] - cplx(0, -1)) < 1e-12);
  CHECK(std::abs(ev[1] - cplx(0, 1)) < 1e-12);

  Eigen::MatrixXcd diag = Eigen::MatrixXcd::Zero(3, 3);
  diag(0, 0) = 3;
  diag(1, 1) = -5;
  diag(2, 2) = 2;
  auto dv = dense_spectrum(diag);
  double r = 0;
  for (auto z : dv) r = std::max(r, std::abs(z));
  CHECK(r == doctest::Approx(5.0));
}

TEST_CASE("regular graphs pin the nonbacktracking radius at d-1") {
  struct Case {
    SparseMatrix h;
    double rho;
  };
  std::vector<Case> cases;
  cases.push_back({adjacency_graph(3, complete_edges(3)), 1.0});
  cases.push_back({adjacency_graph(4, complete_edges(4)), 2.0});
  cases.push_back({adjacency_graph(5, complete_edges(5)), 3.0});
  cases.push_back({adjacency_graph(10, petersen_edges()), 2.0});

  for (auto& c : cases) {
    NbOperator b(c.h);
    CHECK(dense_radius(b) == doctest::Approx(c.rho).epsilon(1e-10));
    SpectralConfig cfg;
    cfg.cross_validate = true;
    auto rep = spectral_radius(b, cfg);
    CHECK(rep.converged);
    CHECK(rep.rho == doctest::Approx(c.rho).epsilon(1e-6));
    REQUIRE(rep.dense_rho.has_value());
    CHECK(*rep.dense_rho == doctest::Approx(c.rho).epsilon(1e-10));
  }
}

TEST_CASE("iterative radius tracks the dense radius on random matrices") {
  // Random nonbacktracking matrices occasionally carry a defective dominant
  // pair; a residual of tol then pins the eigenvalue only to ~sqrt(tol), and
  // the dense QR value is no better placed. 1e-4 reflects that, not sloppiness.
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    auto h = random_hermitian(9, seed, 0.5);
    NbOperator b(h);
    if (b.m() == 0) continue;
    double exact = dense_radius(b);
    auto rep = spectral_radius(b);
    if (exact < 1e-8) {
      CHECK(rep.rho < 1e-6);
      continue;
    }
    CHECK(std::abs(rep.rho - exact) <= 1e-4 * (1.0 + exact));
  }
}

TEST_CASE("hermitian extremes, dense and lanczos paths") {
  // Small: dense path.
  auto h = random_hermitian(40, 5, 0.4);
  auto ex = hermitian_extremes(h);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h.dense());
  CHECK(ex.lambda_min == doctest::Approx(es.eigenvalues().minCoeff()).epsilon(1e-9));
  CHECK(ex.lambda_max == doctest::Approx(es.eigenvalues().maxCoeff()).epsilon(1e-9));
  CHECK(ex.opnorm ==
        doctest::Approx(std::max(std::abs(ex.lambda_min), std::abs(ex.lambda_max))));

  // Large: Lanczos path, checked against a dense solve done here.
  auto hl = random_hermitian(600, 6, 0.05);
  auto exl = hermitian_extremes(hl);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> esl(hl.dense());
  CHECK(exl.converged);
  CHECK(exl.lambda_min ==
        doctest::Approx(esl.eigenvalues().minCoeff()).epsilon(1e-7));
  CHECK(exl.lambda_max ==
        doctest::Approx(esl.eigenvalues().maxCoeff()).epsilon(1e-7));

  auto hr = random_hermitian(5, 7, 0.9);
  auto hbad = SparseMatrix::from_triplets(3, {{0, 1, cplx(1, 0)}}, false);
  CHECK_THROWS(hermitian_extremes(hbad));
  (void)hr;
}

TEST_CASE("matrix-free lanczos on a known diagonal operator") {
  Eigen::VectorXd diag(6);
  diag << 3.0, 2.0, 1.0, -0.5, -4.0, 0.25;
  auto apply = [&](const Eigen::VectorXd& x, Eigen::VectorXd& y) {
    y = diag.cwiseProduct(x);
  };
  auto res = lanczos_extremes(6, apply, {}, true);
  CHECK(res.converged);
  CHECK(res.lambda_max == doctest::Approx(3.0).epsilon(1e-9));
  CHECK(res.lambda_min == doctest::Approx(-4.0).epsilon(1e-9));
  CHECK(res.lambda_second == doctest::Approx(2.0).epsilon(1e-8));
}

TEST_CASE("max_real_eigenvalue distinguishes real points") {
  // Triangle: spectrum of B is the cube roots of unity, twice; only 1 is real.
  auto tri = adjacency_graph(3, complete_edges(3));
  NbOperator b(tri);
  auto mr = max_real_eigenvalue(b);
  REQUIRE(mr.has_value());
  CHECK(*mr == doctest::Approx(1.0).epsilon(1e-10));

  // A single edge: B = 0, whose only spectral point 0 is real.
  auto edge = adjacency_graph(2, {{0, 1}});
  NbOperator be(edge);
  auto mre = max_real_eigenvalue(be);
  REQUIRE(mre.has_value());
  CHECK(std::abs(*mre) < 1e-12);

  // Empty support: no spectrum at all.
  NbOperator bz(SparseMatrix::zero(4));
  CHECK(!max_real_eigenvalue(bz).has_value());
}

TEST_CASE("exact trace moments match a direct dense computation") {
  for (std::uint64_t seed : {11ull, 12ull}) {
    auto h = random_hermitian(6, seed, 0.6);
    NbOperator b(h);
    if (b.m() == 0) continue;
    auto bf = b.dense_full();
    Eigen::MatrixXcd p = Eigen::MatrixXcd::Identity(bf.rows(), bf.cols());
    for (int ell = 1; ell <= 4; ++ell) {
      p = p * bf;
      double want = (p * p.adjoint()).trace().real();
      auto got = trace_moment(b, ell, TraceMomentMode::exact_small);
      CHECK(got.exact);
      CHECK(got.value == doctest::Approx(want).epsilon(1e-10));
    }
  }
}

TEST_CASE("unit-variance triangle has first trace moment 6") {
  // Entries 1/sqrt(2): per input edge ||B delta_f||^2 = (n-1)|H_f|^2 = 1,
  // summed over six support edges.
  auto tri = adjacency_graph(3, complete_edges(3), 1.0 / std::sqrt(2.0));
  NbOperator b(tri);
  auto t = trace_moment(b, 1, TraceMomentMode::exact_small);
  CHECK(t.value == doctest::Approx(6.0).epsilon(1e-14));
}

TEST_CASE("stochastic trace estimate brackets the exact value") {
  auto h = random_hermitian(10, 31, 0.4);
  NbOperator b(h);
  auto exact = trace_moment(b, 3, TraceMomentMode::exact_small);
  auto est = trace_moment(b, 3, TraceMomentMode::stochastic, 9, 256);
  CHECK(!est.exact);
  CHECK(est.probes == 256);
  CHECK(est.std_error > 0.0);
  CHECK(std::abs(est.value - exact.value) < 6 * est.std_error + 1e-9);
}

TEST_CASE("trace moments dominate the spectral radius (gelfand route)") {
  for (std::uint64_t seed : {41ull, 42ull, 43ull}) {
    auto h = random_hermitian(8, seed, 0.55);
    NbOperator b(h);
    if (b.m() == 0) continue;
    double rho = dense_radius(b);
    for (int ell = 1; ell <= 6; ++ell) {
      auto t = trace_moment(b, ell, TraceMomentMode::exact_small);
      double gel = std::pow(t.value, 1.0 / (2.0 * ell));
      CHECK(gel >= rho - 1e-9);
    }
  }
}

TEST_CASE("radius of the zero operator") {
  NbOperator bz(SparseMatrix::zero(5));
  auto rep = spectral_radius(bz);
  CHECK(rep.rho == 0.0);
  CHECK(rep.converged);
}
