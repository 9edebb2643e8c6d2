#include "triproxy/random.hpp"
#include "triproxy/spectral.hpp"

#include <benchmark/benchmark.h>

using namespace triproxy;

namespace {

ProbTensor random_triple(std::size_t k, std::size_t nz, std::size_t nc, std::size_t nv, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::vector<double>> z, c;
  for (std::size_t w = 0; w < k; ++w) {
    z.push_back(dirichlet_ones(rng, nz));
    c.push_back(dirichlet_ones(rng, nc));
  }
  const auto wv = dirichlet_ones(rng, k * nv);
  std::vector<double> vals(nz * nc * nv, 0.0);
  for (std::size_t a = 0; a < nz; ++a) {
    for (std::size_t b = 0; b < nc; ++b) {
      for (std::size_t v = 0; v < nv; ++v) {
        for (std::size_t w = 0; w < k; ++w) vals[(a * nc + b) * nv + v] += z[w][a] * c[w][b] * wv[w * nv + v];
      }
    }
  }
  return ProbTensor::from_weights({VarSpace::categorical("Z", nz), VarSpace::categorical("C", nc),
                                   VarSpace::categorical("V", nv)},
                                  vals);
}

void BM_HsDecompose(benchmark::State& state) {
  const auto k = static_cast<std::size_t>(state.range(0));
  const auto joint = random_triple(k, k + 2, 4, k + 2, 7);
  HsOptions o;
  o.latent_dim = k;
  for (auto _ : state) benchmark::DoNotOptimize(hs_decompose(joint, o));
}
BENCHMARK(BM_HsDecompose)->DenseRange(2, 6);

void BM_Hungarian(benchmark::State& state) {
  const auto n = state.range(0);
  Rng rng(3);
  Eigen::MatrixXd cost(n, n);
  for (Eigen::Index i = 0; i < n * n; ++i) cost(i / n, i % n) = uniform01(rng);
  for (auto _ : state) benchmark::DoNotOptimize(min_cost_assignment(cost));
}
BENCHMARK(BM_Hungarian)->RangeMultiplier(2)->Range(4, 64);

}  // namespace
