#include <benchmark/benchmark.h>

#include "vicsim/comm.hpp"
#include "vicsim/fusion.hpp"
#include "vicsim/idapm.hpp"
#include "vicsim/loss.hpp"
#include "vicsim/pipeline.hpp"
#include "vicsim/ptcm.hpp"
#include "vicsim/rng.hpp"
#include "vicsim/scenario.hpp"
#include "vicsim/sensing.hpp"

namespace {

using namespace vicsim;

const Scenario& suite_scenario() {
  static const Scenario s =
      generate_scenario(ScenarioTemplate::OccludedCrossing, 3, 6);
  return s;
}

void BM_RenderView(benchmark::State& state) {
  const Scenario& s = suite_scenario();
  const GridSpec spec = GridSpec::default_spec();
  for (auto _ : state) {
    benchmark::DoNotOptimize(render_view(s, 2, SensorKind::Infra, spec));
  }
}
BENCHMARK(BM_RenderView);

void BM_RelevanceFrame(benchmark::State& state) {
  const Scenario& s = suite_scenario();
  const PtcmParams params;
  for (auto _ : state) {
    benchmark::DoNotOptimize(relevance_all(s, 3, params));
  }
}
BENCHMARK(BM_RelevanceFrame);

void BM_GtHeatmap(benchmark::State& state) {
  const Scenario& s = suite_scenario();
  const PtcmParams params;
  const auto reps = relevance_all(s, 3, params);
  const GridSpec spec = GridSpec::default_spec();
  for (auto _ : state) {
    benchmark::DoNotOptimize(render_gt_heatmap(s, 3, reps, spec, params.horizon));
  }
}
BENCHMARK(BM_GtHeatmap);

void BM_BlockifyAndFuse(benchmark::State& state) {
  const Scenario& s = suite_scenario();
  const GridSpec spec = GridSpec::default_spec();
  const SensorView ego = render_view(s, 3, SensorKind::Ego, spec);
  const SensorView infra = render_view(s, 3, SensorKind::Infra, spec);
  const PtcmParams params;
  const Heatmap heat =
      render_gt_heatmap(s, 3, relevance_all(s, 3, params), spec, params.horizon);
  const CellMask mask = build_mask(heat, 0.1);
  for (auto _ : state) {
    const auto blocks = blockify(mask, infra.occupancy, 4);
    benchmark::DoNotOptimize(fuse(ego.occupancy, blocks));
  }
}
BENCHMARK(BM_BlockifyAndFuse);

void BM_Detect(benchmark::State& state) {
  const Scenario& s = suite_scenario();
  const GridSpec spec = GridSpec::default_spec();
  const SensorView infra = render_view(s, 3, SensorKind::Infra, spec);
  for (auto _ : state) {
    benchmark::DoNotOptimize(detect(infra.occupancy, 3, 1.0));
  }
}
BENCHMARK(BM_Detect);

void BM_LossGrid(benchmark::State& state) {
  const GridSpec spec = GridSpec::default_spec();
  Heatmap pred(spec, 0.0), gt(spec, 0.0);
  SeededRng rng(1);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    pred.cells()[i] = rng.next_double();
    gt.cells()[i] = rng.next_double();
  }
  const LossParams params;
  for (auto _ : state) {
    benchmark::DoNotOptimize(batch_loss(pred, gt, params));
  }
}
BENCHMARK(BM_LossGrid);

void BM_PredictorForward(benchmark::State& state) {
  const auto batch = make_synthetic_batch(0, 1);
  const auto model = HeatmapPredictor::random_init(1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(model.forward(batch[0].features));
  }
}
BENCHMARK(BM_PredictorForward);

void BM_TrainIteration(benchmark::State& state) {
  const auto batch = make_synthetic_batch(0, 8);
  const auto model = HeatmapPredictor::random_init(1);
  const LossParams loss_cfg;
  std::vector<double> grad(model.weights().size(), 0.0);
  for (auto _ : state) {
    std::fill(grad.begin(), grad.end(), 0.0);
    double loss = 0.0;
    for (const auto& sample : batch) {
      loss += model.loss_and_gradient(sample.features, sample.target, loss_cfg, &grad);
    }
    benchmark::DoNotOptimize(loss);
  }
}
BENCHMARK(BM_TrainIteration);

void BM_FullPipelineFrame(benchmark::State& state) {
  RunConfig cfg;
  cfg.tmpl = ScenarioTemplate::OccludedCrossing;
  cfg.first_seed = 3;
  cfg.scenario_count = 1;
  cfg.n_agents = 4;
  const auto scenarios = load_or_generate_scenarios(cfg);
  for (auto _ : state) {
    benchmark::DoNotOptimize(run_scenarios(cfg, scenarios));
  }
}
BENCHMARK(BM_FullPipelineFrame)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
