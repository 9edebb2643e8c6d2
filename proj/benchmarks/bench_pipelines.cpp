#include "triproxy/bounds.hpp"
#include "triproxy/npsem.hpp"
#include "triproxy/pipelines.hpp"

#include <benchmark/benchmark.h>

using namespace triproxy;

namespace {

const char* const kFigures[] = {"fig2a", "fig3a", "fig4a", "fig5a"};

void BM_Identify(benchmark::State& state) {
  const auto* id = kFigures[state.range(0)];
  GeneratorOptions g;
  g.latent_dim = 3;
  const auto m = random_figure_model(id, 2, g);
  const auto joint = observable_joint(m);
  PipelineOptions o;
  o.hs.latent_dim = 3;
  const auto design = static_cast<DesignTag>(static_cast<int>(*figure_design(id)));
  state.SetLabel(id);
  for (auto _ : state) benchmark::DoNotOptimize(estimands(identify(design, joint, o)));
}
BENCHMARK(BM_Identify)->DenseRange(0, 3);

void BM_Bounds(benchmark::State& state) {
  GeneratorOptions g;
  g.outcome = OutcomeShape::RankInvariant;
  const auto m = random_figure_model("fig6a", 2, g);
  const auto joint = observable_joint(m);
  PipelineOptions o;
  for (auto _ : state) benchmark::DoNotOptimize(bounds(DesignTag::Outcome, joint, o));
}
BENCHMARK(BM_Bounds);

}  // namespace
