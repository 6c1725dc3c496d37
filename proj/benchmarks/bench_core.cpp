#include <benchmark/benchmark.h>

#include <fsan/experiments.hpp>
#include <fsan/music.hpp>
#include <fsan/sdp.hpp>
#include <fsan/toeplitz.hpp>

using namespace fsan;

namespace
{

const SpectralModel& three_tone()
{
    static const SpectralModel m({{FrequencyTuple{0.35, 0.51}, 1.0},
                                  {FrequencyTuple{0.31, 0.59}, 1.0},
                                  {FrequencyTuple{0.37, 0.57}, 1.0}});
    return m;
}

void BM_LevelToeplitz(benchmark::State& state)
{
    const auto n = static_cast<Index>(state.range(0));
    const DimsSpec dims{n, n};
    const HalfSpectrumTensor b = model_tensor(three_tone(), dims);
    for (auto _ : state)
    {
        benchmark::DoNotOptimize(build_level_toeplitz(b));
    }
}
BENCHMARK(BM_LevelToeplitz)->Arg(4)->Arg(8)->Arg(12);

void BM_LevelToeplitzAdjoint(benchmark::State& state)
{
    const auto n = static_cast<Index>(state.range(0));
    const DimsSpec dims{n, n};
    const CMatrix m = build_level_toeplitz(model_tensor(three_tone(), dims));
    for (auto _ : state)
    {
        benchmark::DoNotOptimize(adjoint_level_toeplitz(m, dims));
    }
}
BENCHMARK(BM_LevelToeplitzAdjoint)->Arg(4)->Arg(8)->Arg(12);

void BM_ShiftedToeplitz(benchmark::State& state)
{
    const DimsSpec dims{8, 8};
    const HalfSpectrumTensor b = model_tensor(three_tone(), dims);
    const GCoefficients g      = BandSystem::accurate_prior().g_constraints().front();
    for (auto _ : state)
    {
        benchmark::DoNotOptimize(build_tg(b, g));
    }
}
BENCHMARK(BM_ShiftedToeplitz);

void BM_Music(benchmark::State& state)
{
    const DimsSpec dims{8, 8};
    const CMatrix t = build_level_toeplitz(model_tensor(three_tone(), dims));
    const BandSystem bands = BandSystem::accurate_prior();
    for (auto _ : state)
    {
        benchmark::DoNotOptimize(music_frequencies(t, dims, bands, std::nullopt));
    }
}
BENCHMARK(BM_Music)->Unit(benchmark::kMillisecond);

void BM_SolveThreeTone(benchmark::State& state)
{
    const TrialConfig cfg  = fig1_config(1);
    const TrialData data   = draw_trial(cfg);
    const SDPInstance inst = assemble(data.observation, cfg.dims, cfg.bands);
    for (auto _ : state)
    {
        benchmark::DoNotOptimize(solve(inst));
    }
}
BENCHMARK(BM_SolveThreeTone)->Unit(benchmark::kMillisecond)->Iterations(3);

} // namespace

BENCHMARK_MAIN();
