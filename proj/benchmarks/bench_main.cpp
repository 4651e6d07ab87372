// Micro-benchmarks for the hot paths: operator applies, the iterative
// eigensolvers they feed, walk enumeration, and the determinant identity.

#include <cmath>
#include <set>
#include <utility>
#include <vector>

#include <benchmark/benchmark.h>

#include "nbspectra/ensembles.hpp"
#include "nbspectra/iharabass.hpp"
#include "nbspectra/nbop.hpp"
#include "nbspectra/rng.hpp"
#include "nbspectra/spectra.hpp"
#include "nbspectra/walks.hpp"

namespace {

using namespace nbspectra;

EnsembleSpec sparse_sign_spec(int n) {
  Rng rng({42, static_cast<std::uint64_t>(n)});
  std::set<std::pair<int, int>> support;
  while (static_cast<int>(support.size()) < 2 * n) {
    int i = static_cast<int>(rng.below(n));
    int j = static_cast<int>(rng.below(n));
    if (i == j) continue;
    support.insert({std::min(i, j), std::max(i, j)});
  }
  return EnsembleSpec::rademacher(
      n, 2.0, std::vector<std::pair<int, int>>(support.begin(), support.end()));
}

void BM_SparseApply(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const SparseMatrix h = sample_rademacher(sparse_sign_spec(n), {42, 7});
  std::vector<cplx> x(n, cplx(1.0, 0.5)), y(n);
  for (auto _ : state) {
    h.apply(x, y);
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(h.nnz()));
}
BENCHMARK(BM_SparseApply)->Arg(1024)->Arg(8192);

void BM_NbApply(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const SparseMatrix h = sample_rademacher(sparse_sign_spec(n), {42, 7});
  const NbOperator b(h);
  std::vector<cplx> x(b.m(), cplx(1.0, 0.5)), y(b.m());
  for (auto _ : state) {
    b.apply(x, y);
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * b.m());
}
BENCHMARK(BM_NbApply)->Arg(1024)->Arg(8192);

void BM_CenteredApply(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto spec = EnsembleSpec::hermitian_er(
      ProbabilityProfile::homogeneous(n, 20.0 / n));
  const CenteredErOperator h(spec, {42, 7});
  Eigen::VectorXd x = Eigen::VectorXd::Constant(n, 1.0), y(n);
  for (auto _ : state) {
    h.apply(x, y);
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_CenteredApply)->Arg(1000)->Arg(4000);

void BM_LanczosNorm(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto spec = EnsembleSpec::hermitian_er(
      ProbabilityProfile::homogeneous(n, 25.0 / n));
  const CenteredErOperator h(spec, {42, 7});
  SpectralConfig cfg;
  cfg.tol = 1e-8;
  cfg.max_iter = 400;
  for (auto _ : state) {
    auto r = lanczos_extremes(
        n, [&](const Eigen::VectorXd& x, Eigen::VectorXd& y) { h.apply(x, y); },
        cfg);
    benchmark::DoNotOptimize(r.lambda_max);
  }
}
BENCHMARK(BM_LanczosNorm)->Arg(1000)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_SpectralRadius(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const SparseMatrix h = sample_rademacher(sparse_sign_spec(n), {42, 7});
  const NbOperator b(h);
  SpectralConfig cfg;
  cfg.tol = 1e-8;
  cfg.max_iter = 1000;
  for (auto _ : state) {
    auto r = spectral_radius(b, cfg);
    benchmark::DoNotOptimize(r.rho);
  }
}
BENCHMARK(BM_SpectralRadius)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);

void BM_IbDeterminant(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Rng rng({42, static_cast<std::uint64_t>(n)});
  std::vector<Triplet> ts;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      if (!rng.bernoulli(8.0 / n)) continue;
      const cplx v(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
      if (std::abs(v) < 0.05) continue;
      ts.push_back({i, j, v});
      ts.push_back({j, i, std::conj(v)});
    }
  const SparseMatrix h = SparseMatrix::from_triplets(n, std::move(ts), true);
  const cplx lambda(1.7, 0.4);
  for (auto _ : state) {
    auto d = ib_determinant(h, lambda);
    benchmark::DoNotOptimize(d.log_abs);
  }
}
BENCHMARK(BM_IbDeterminant)->Arg(32)->Arg(128);

void BM_EnumerateNormal(benchmark::State& state) {
  const int ell = static_cast<int>(state.range(0));
  for (auto _ : state) {
    auto walks = enumerate_normal(ell, WalkMode::hermitian);
    benchmark::DoNotOptimize(walks.size());
    state.counters["walks"] = static_cast<double>(walks.size());
  }
}
BENCHMARK(BM_EnumerateNormal)->Arg(3)->Arg(4);

void BM_SampleNormalPaths(benchmark::State& state) {
  Rng rng({42, 7});
  for (auto _ : state) {
    auto walks = sample_normal_paths(8, 6, 256, rng);
    benchmark::DoNotOptimize(walks.data());
  }
  state.SetItemsProcessed(state.iterations() * 256);
}
BENCHMARK(BM_SampleNormalPaths);

void BM_ReducePath(benchmark::State& state) {
  Rng rng({42, 7});
  const auto walks = sample_normal_paths(8, 6, 64, rng);
  std::size_t k = 0;
  for (auto _ : state) {
    auto t = reduce_path(walks[k % walks.size()]);
    benchmark::DoNotOptimize(t.gamma);
    ++k;
  }
}
BENCHMARK(BM_ReducePath);

}  // namespace

BENCHMARK_MAIN();
