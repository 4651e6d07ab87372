// Nonbacktracking operator against a from-the-definition dense oracle.
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

using namespace nbspectra;

namespace {

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

// B_{(i,j),(k,l)} = H_kl 1{j=k} 1{i!=l}, written out without any indexing
// cleverness. This is the oracle every fast path is measured against.
Eigen::MatrixXcd oracle_restricted(const SparseMatrix& h) {
  auto idx = build_edge_index(h);
  const int m = idx.m();
  Eigen::MatrixXcd b = Eigen::MatrixXcd::Zero(m, m);
  for (int e = 0; e < m; ++e)
    for (int f = 0; f < m; ++f) {
      auto [i, j] = idx.edges[e];
      auto [k, l] = idx.edges[f];
      if (j == k && i != l) b(e, f) = h.at(k, l);
    }
  return b;
}

Eigen::MatrixXcd oracle_full(const SparseMatrix& h) {
  const int n = h.n();
  Eigen::MatrixXcd b = Eigen::MatrixXcd::Zero(n * n, n * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l)
          if (j == k && i != l) b(i * n + j, k * n + l) = h.at(k, l);
  return b;
}

std::vector<double> sorted_moduli(const Eigen::MatrixXcd& m) {
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(m, false);
  std::vector<double> out;
  for (int k = 0; k < m.rows(); ++k) out.push_back(std::abs(es.eigenvalues()[k]));
  std::sort(out.rbegin(), out.rend());
  return out;
}

}  // namespace

TEST_CASE("edge index is row-major sorted with a correct reverse map") {
  auto h = random_hermitian(9, 2, 0.5);
  auto idx = build_edge_index(h);
  CHECK(idx.m() == int(h.nnz()));
  for (int e = 0; e + 1 < idx.m(); ++e) {
    CHECK(idx.edges[e] < idx.edges[e + 1]);  // lexicographic strict
  }
  for (int e = 0; e < idx.m(); ++e) {
    auto [i, j] = idx.edges[e];
    CHECK(idx.index_of(i, j) == e);
    int r = idx.reverse_edge[e];
    if (h.has(j, i)) {
      REQUIRE(r >= 0);
      CHECK(idx.edges[r] == std::pair(j, i));
    } else {
      CHECK(r == -1);
    }
  }
  CHECK(idx.index_of(0, 0) == -1);
  // Row slices cover exactly the edges leaving each source vertex.
  for (int j = 0; j < idx.n; ++j)
    for (int e = idx.row_begin[j]; e < idx.row_begin[j + 1]; ++e)
      CHECK(idx.edges[e].first == j);
}

TEST_CASE("dense restriction equals the definition oracle") {
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    auto h = random_hermitian(8, seed, 0.6);
    NbOperator b(h);
    auto diff = (b.dense() - oracle_restricted(h)).cwiseAbs().maxCoeff();
    CHECK(diff == 0.0);
  }
}

TEST_CASE("apply matches the dense oracle on random vectors") {
  auto h = random_hermitian(10, 17, 0.5);
  NbOperator b(h);
  auto bd = oracle_restricted(h);
  const int m = b.m();
  Rng rng(3);
  std::vector<cplx> x(m), y(m);
  for (auto& v : x) v = cplx(rng.uniform(-1, 1), rng.uniform(-1, 1));
  b.apply(x, y);
  Eigen::VectorXcd xe(m);
  for (int e = 0; e < m; ++e) xe[e] = x[e];
  Eigen::VectorXcd ye = bd * xe;
  for (int e = 0; e < m; ++e) CHECK(std::abs(y[e] - ye[e]) < 1e-12);
}

TEST_CASE("full mode matches its oracle and the restricted spectrum") {
  auto h = random_hermitian(6, 23, 0.5);
  NbOperator b(h);
  auto bf = b.dense_full();
  auto diff = (bf - oracle_full(h)).cwiseAbs().maxCoeff();
  CHECK(diff == 0.0);

  const int n = h.n();
  Rng rng(9);
  std::vector<cplx> x(n * n), y(n * n);
  for (auto& v : x) v = cplx(rng.uniform(-1, 1), rng.uniform(-1, 1));
  b.apply_full(x, y);
  Eigen::VectorXcd xe(n * n);
  for (int e = 0; e < n * n; ++e) xe[e] = x[e];
  Eigen::VectorXcd ye = bf * xe;
  for (int e = 0; e < n * n; ++e) CHECK(std::abs(y[e] - ye[e]) < 1e-12);

  // The full spectrum is the restricted spectrum plus exact zeros (the
  // off-support columns vanish). QR smears defective zero blocks by up to
  // ~1e-4, so compare eigenvalues only above that noise floor and settle the
  // rest with power traces, which are exactly equal for matching spectra.
  auto sr = sorted_moduli(b.dense());
  auto sf = sorted_moduli(bf);
  REQUIRE(sf.size() == std::size_t(n) * n);
  const double cut = 1e-3;
  std::size_t ka = 0, kb = 0;
  while (ka < sr.size() && sr[ka] > cut) ++ka;
  while (kb < sf.size() && sf[kb] > cut) ++kb;
  REQUIRE(ka == kb);
  for (std::size_t k = 0; k < ka; ++k)
    CHECK(sf[k] == doctest::Approx(sr[k]).epsilon(1e-7));

  Eigen::MatrixXcd pr = Eigen::MatrixXcd::Identity(b.m(), b.m());
  Eigen::MatrixXcd pf = Eigen::MatrixXcd::Identity(n * n, n * n);
  auto br = b.dense();
  for (int k = 1; k <= 8; ++k) {
    pr = pr * br;
    pf = pf * bf;
    CHECK(std::abs(pr.trace() - pf.trace()) <=
          1e-10 * (1.0 + std::abs(pr.trace())));
  }
}

TEST_CASE("triangle nonbacktracking matrix is a double 3-cycle") {
  std::vector<Triplet> ts;
  for (auto [a, c] : {std::pair{0, 1}, {1, 2}, {0, 2}}) {
    ts.push_back({a, c, cplx(1, 0)});
    ts.push_back({c, a, cplx(1, 0)});
  }
  auto h = SparseMatrix::from_triplets(3, ts, true);
  NbOperator b(h);
  CHECK(b.m() == 6);
  auto bd = b.dense();
  // Every edge has exactly one nonbacktracking continuation on a triangle.
  for (int e = 0; e < 6; ++e) {
    int nz = 0;
    for (int f = 0; f < 6; ++f)
      if (std::abs(bd(e, f)) > 0) ++nz;
    CHECK(nz == 1);
  }
  // B^3 = I: the two directed 3-cycles close after three steps.
  auto b3 = bd * bd * bd;
  CHECK((b3 - Eigen::MatrixXcd::Identity(6, 6)).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("values along edges come from the source row of H") {
  auto h = random_hermitian(7, 31, 0.6);
  NbOperator b(h);
  const auto& idx = b.edges();
  for (int e = 0; e < b.m(); ++e) {
    auto [i, j] = idx.edges[e];
    CHECK(b.edge_values()[e] == h.at(i, j));
  }
}
