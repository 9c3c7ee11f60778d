#include <benchmark/benchmark.h>
#include <cmath>

#include "peering/calibration.hpp"
#include "peering/equilibrium.hpp"
#include "peering/market.hpp"
#include "peering_oracles/oracles.hpp"

using namespace peering;

namespace {

MarketModel calibrated() {
    MarketModel m;
    m.population = ConsumerPopulation::from_means(56.110793, 18.902701, 27.748988);
    m.costs = {16.495883, 18.994330, 3.0, 10.0};
    m.p_video_base = 21.58;
    m.pass_through = 1.0;
    return m;
}

void market_evaluate(benchmark::State& state) {
    const MarketModel m = calibrated();
    const PriceVector prices = m.prices(50, 20, 4.59);
    const MarketQuadrature q{std::pow(10.0, -static_cast<double>(state.range(0)))};
    for (auto _ : state) benchmark::DoNotOptimize(evaluate_market(m.population, prices, q));
}
BENCHMARK(market_evaluate)->Arg(6)->Arg(10)->Arg(12)->Unit(benchmark::kMillisecond);

void isp_objective_coarse(benchmark::State& state) {
    const MarketModel m = calibrated();
    double pb = 45;
    for (auto _ : state) {
        benchmark::DoNotOptimize(isp_objective(m, pb, 20, 4, 1e-6));
        pb = pb > 55 ? 45 : pb + 0.25;
    }
}
BENCHMARK(isp_objective_coarse)->Unit(benchmark::kMicrosecond);

void monte_carlo_market(benchmark::State& state) {
    const MarketModel m = calibrated();
    const PriceVector prices = m.prices(50, 20, 4.59);
    for (auto _ : state)
        benchmark::DoNotOptimize(oracles::sample_market(m.population, prices, state.range(0), 1));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(monte_carlo_market)->Arg(1 << 20)->Unit(benchmark::kMillisecond);

void tier_prices_warm(benchmark::State& state) {
    const MarketModel m = calibrated();
    for (auto _ : state)
        benchmark::DoNotOptimize(maximize_tier_prices_given_fee(m, 2.0, {}, std::array<double, 2>{50, 21}));
}
BENCHMARK(tier_prices_warm)->Unit(benchmark::kMillisecond);

void calibration_solve(benchmark::State& state) {
    for (auto _ : state) benchmark::DoNotOptimize(calibrate(MarketTargets{}));
}
BENCHMARK(calibration_solve)->Unit(benchmark::kMillisecond)->Iterations(3);

}  // namespace
