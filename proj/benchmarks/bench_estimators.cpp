#include <benchmark/benchmark.h>

#include "fearfactor/cross_section.hpp"
#include "fearfactor/factor_extraction.hpp"
#include "fearfactor/implied_variance.hpp"
#include "fearfactor/market_data.hpp"
#include "fearfactor/rng.hpp"
#include "fearfactor/synth.hpp"

using namespace fearfactor;

namespace {

void BM_FilterAndVariance(benchmark::State& state) {
    const auto strikes = static_cast<double>(state.range(0));
    const auto raw = synth::bs_chain(100.0, 0.01, 0.3, 30, 100.0 - strikes, 100.0 + strikes, 1.0);
    for (auto _ : state) {
        const auto filtered = market_data::filter_chain(raw);
        if (const auto* chain = std::get_if<market_data::OptionChain>(&filtered))
            benchmark::DoNotOptimize(implied_variance::compute_variance(*chain));
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_FilterAndVariance)->Arg(10)->Arg(40);

void BM_EmPcaWindow(benchmark::State& state) {
    synth::FactorPanelSpec spec;
    spec.n_firms = static_cast<int>(state.range(0));
    spec.n_days = 252;
    spec.mask_rate = 0.1;
    const auto panel = synth::factor_panel(spec).panel;
    for (auto _ : state) benchmark::DoNotOptimize(factors::em_pca(panel));
}
BENCHMARK(BM_EmPcaWindow)->Arg(25)->Arg(200)->Unit(benchmark::kMillisecond);

cross_section::DatedMatrix random_monthly(int months, int cols, std::uint64_t seed) {
    CounterRng rng(seed, 0);
    cross_section::DatedMatrix m;
    for (int c = 0; c < cols; ++c) m.names.push_back("C" + std::to_string(c));
    m.values.resize(months, cols);
    for (int t = 0; t < months; ++t) {
        m.dates.push_back(Date(1990 + t / 12, static_cast<unsigned>(t % 12 + 1), 28));
        for (int c = 0; c < cols; ++c) m.values(t, c) = 0.01 + 0.05 * rng.normal();
    }
    return m;
}

void BM_FamaMacBeth(benchmark::State& state) {
    const auto assets = random_monthly(480, static_cast<int>(state.range(0)), 1);
    const auto factors = random_monthly(480, 6, 2);
    for (auto _ : state) benchmark::DoNotOptimize(cross_section::fama_macbeth(assets, factors));
}
BENCHMARK(BM_FamaMacBeth)->Arg(25)->Arg(100)->Unit(benchmark::kMicrosecond);

void BM_ThreePass(benchmark::State& state) {
    const auto assets = random_monthly(480, static_cast<int>(state.range(0)), 3);
    const auto factors = random_monthly(480, 1, 4);
    for (auto _ : state) benchmark::DoNotOptimize(cross_section::three_pass(assets, factors.series(0), {}));
}
BENCHMARK(BM_ThreePass)->Arg(25)->Arg(100)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
