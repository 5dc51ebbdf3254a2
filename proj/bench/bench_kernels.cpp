// Serial reference against the OpenMP path for the heavy kernels.
// Arg 0 runs serially, arg 1 in parallel with every available thread.
#include <benchmark/benchmark.h>

#include "crowd/panel.hpp"
#include "crowd/resample.hpp"
#include "crowd/rules.hpp"
#include "crowd/stats.hpp"
#include "crowd/synth.hpp"

using namespace crowd;

namespace {

Exec exec_for(const benchmark::State& st) { return st.range(0) ? Exec{} : Exec::serial(); }

const std::vector<QuestionPanel>& panels() {
    static const auto p = [] {
        auto qs = load_questions(CROWD_DATA_DIR "/questions.csv");
        auto cfg = load_config(CROWD_DATA_DIR "/default_model.json");
        auto model = CrowdModel::from_questions(qs, cfg.rho);
        return build_panels(simulate(model, cfg.deliberation, 280, 1));
    }();
    return p;
}

void BM_ErrorCurveWithin(benchmark::State& st) {
    CurveOptions opt;
    opt.iterations = 200;
    opt.seed = 1;
    opt.combinations = 200;
    opt.exec = exec_for(st);
    const auto& panel = panels()[0];  // build outside the timed loop
    for (auto _ : st)
        benchmark::DoNotOptimize(error_curve(panel, Stage::I1, SamplingMode::WithinGroups, {5, 25, 125}, opt));
}

void BM_ErrorCurveBetween(benchmark::State& st) {
    CurveOptions opt;
    opt.iterations = 100;
    opt.seed = 1;
    opt.combinations = 200;
    opt.exec = exec_for(st);
    for (auto _ : st)
        benchmark::DoNotOptimize(error_curve(panels()[0], Stage::I1, SamplingMode::BetweenGroups, {5, 25}, opt));
}

void BM_RuleBenchmark(benchmark::State& st) {
    RuleBenchOptions opt;
    opt.iterations = 1000;
    opt.seed = 1;
    opt.exec = exec_for(st);
    for (auto _ : st) benchmark::DoNotOptimize(rule_benchmark(panels(), opt));
}

void BM_SquaredRank(benchmark::State& st) {
    std::vector<double> a, b;
    for (const auto& g : panels()[0].groups) {
        a.push_back(g.mean(Stage::I1));
        b.push_back(g.mean(Stage::I2));
    }
    for (auto _ : st) benchmark::DoNotOptimize(squared_rank_homogeneity(a, b, 1, 10000, exec_for(st)));
}

void BM_Simulate(benchmark::State& st) {
    auto qs = load_questions(CROWD_DATA_DIR "/questions.csv");
    auto cfg = load_config(CROWD_DATA_DIR "/default_model.json");
    auto model = CrowdModel::from_questions(qs, cfg.rho);
    for (auto _ : st) benchmark::DoNotOptimize(simulate(model, cfg.deliberation, 1036, 1, exec_for(st)));
}

}  // namespace

BENCHMARK(BM_ErrorCurveWithin)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ErrorCurveBetween)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RuleBenchmark)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SquaredRank)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Simulate)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
