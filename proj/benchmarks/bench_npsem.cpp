#include "triproxy/dag.hpp"
#include "triproxy/npsem.hpp"

#include <benchmark/benchmark.h>

using namespace triproxy;

namespace {

const char* const kFigures[] = {"fig2a", "fig4a", "fig5a", "fig7a"};

void BM_ObservableJoint(benchmark::State& state) {
  const auto* id = kFigures[state.range(0)];
  const auto m = random_figure_model(id, 1, GeneratorOptions{});
  state.SetLabel(id);
  for (auto _ : state) benchmark::DoNotOptimize(observable_joint(m));
}
BENCHMARK(BM_ObservableJoint)->DenseRange(0, 3);

void BM_CounterfactualJoint(benchmark::State& state) {
  const auto* id = kFigures[state.range(0)];
  const auto m = random_figure_model(id, 1, GeneratorOptions{});
  state.SetLabel(id);
  for (auto _ : state) benchmark::DoNotOptimize(counterfactual_joint(m, {m.role_node("X")}));
}
BENCHMARK(BM_CounterfactualJoint)->DenseRange(0, 3);

void BM_DSeparationAllPairs(benchmark::State& state) {
  const auto g = builtin::figure("fig7a");
  const auto& nodes = g.nodes();
  for (auto _ : state) {
    int n = 0;
    for (const auto& a : nodes) {
      for (const auto& b : nodes) {
        if (a < b) n += d_separated(g, {{a}, {b}, {}});
      }
    }
    benchmark::DoNotOptimize(n);
  }
}
BENCHMARK(BM_DSeparationAllPairs);

void BM_ClassifyDesigns(benchmark::State& state) {
  const auto g = builtin::figure("fig1a");
  for (auto _ : state) benchmark::DoNotOptimize(classify_designs(g));
}
BENCHMARK(BM_ClassifyDesigns);

}  // namespace
