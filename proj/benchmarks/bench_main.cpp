#include <benchmark/benchmark.h>

#include <vector>

#include "fewmeta/glmm_binomial.hpp"
#include "fewmeta/harness.hpp"
#include "fewmeta/nnhm_bayes.hpp"
#include "fewmeta/nnhm_freq.hpp"
#include "fewmeta/poisson_pl.hpp"
#include "fewmeta/simgen.hpp"

using namespace fewmeta;

namespace {

const std::vector<TwoByTwoTable> kTables{{12, 50, 8, 50}, {30, 120, 22, 120}, {7, 40, 11, 40}};

std::vector<StudyEstimate> estimates() { return study_estimates(kTables, Measure::LogOddsRatio); }

}  // namespace

static void BM_EstimateTau(benchmark::State& state) {
  const auto est = estimates();
  const auto method = static_cast<TauMethod>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(estimate_tau(est, method));
  state.SetLabel(to_string(method));
}
BENCHMARK(BM_EstimateTau)->DenseRange(0, 3);

static void BM_MuPosterior(benchmark::State& state) {
  const auto est = estimates();
  const HalfNormalPrior prior(state.range(0) == 0 ? 0.5 : 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(mu_posterior(est, prior));
}
BENCHMARK(BM_MuPosterior)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

static void BM_FitGlmm(benchmark::State& state) {
  GlmmSpec spec;
  spec.model = static_cast<GlmmModel>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(fit_glmm(kTables, spec));
  state.SetLabel(to_string(spec.model));
}
BENCHMARK(BM_FitGlmm)->DenseRange(0, 3)->Unit(benchmark::kMillisecond);

static void BM_FitPl(benchmark::State& state) {
  std::vector<CorrectedTable> t;
  for (const auto& x : kTables) t.push_back(apply_continuity_correction(x));
  for (auto _ : state) benchmark::DoNotOptimize(fit_pl(t));
}
BENCHMARK(BM_FitPl);

static void BM_GenerateMeta(benchmark::State& state) {
  ScenarioSpec spec;
  spec.k = static_cast<int>(state.range(0));
  spec.i_squared = 0.5;
  std::uint64_t r = 0;
  for (auto _ : state) benchmark::DoNotOptimize(generate_meta(spec, r++));
}
BENCHMARK(BM_GenerateMeta)->Arg(2)->Arg(10);

static void BM_RunScenario(benchmark::State& state) {
  ScenarioSpec spec;
  spec.design = Design::OneLarge;
  spec.k = 3;
  spec.p0 = 0.7;
  spec.i_squared = 0.75;
  spec.reps = 200;
  const std::vector<Method> methods{make_method("NN-DL/WALD"), make_method("NN-DL/HKSJ"),
                                    make_method("NN-REML/MHKSJ")};
  for (auto _ : state) benchmark::DoNotOptimize(run_scenario(spec, methods, static_cast<int>(state.range(0))));
}
BENCHMARK(BM_RunScenario)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
