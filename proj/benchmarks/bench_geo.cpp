#include <benchmark/benchmark.h>

#include "peering/geo.hpp"
#include "peering/io/records.hpp"

using namespace peering;

namespace {

const std::vector<geo::County>& counties() {
    static const auto c = io::load_counties(PEERING_SOURCE_DIR "/data/us_counties_approx.csv");
    return c;
}

const std::vector<geo::IxpSite>& ixps() {
    static const auto x = io::load_ixps(PEERING_SOURCE_DIR "/data/ixps_default.csv");
    return x;
}

void haversine(benchmark::State& state) {
    geo::GeoPoint a{39.04, -77.49}, b{34.05, -118.24};
    for (auto _ : state) {
        benchmark::DoNotOptimize(geo::haversine_km(a, b));
        a.lon += 1e-9;
    }
}
BENCHMARK(haversine);

void load_county_table(benchmark::State& state) {
    for (auto _ : state)
        benchmark::DoNotOptimize(io::load_counties(PEERING_SOURCE_DIR "/data/us_counties_approx.csv"));
}
BENCHMARK(load_county_table)->Unit(benchmark::kMillisecond);

void build_topology(benchmark::State& state) {
    for (auto _ : state) benchmark::DoNotOptimize(geo::Topology::build(counties(), ixps()));
}
BENCHMARK(build_topology)->Unit(benchmark::kMillisecond);

void backbone_distances(benchmark::State& state) {
    const auto topo = geo::Topology::build(counties(), ixps());
    const auto a = geo::PeeringAgreement::top_ranked(topo, static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(geo::distance_report(topo, a));
}
BENCHMARK(backbone_distances)->Arg(1)->Arg(6)->Arg(12)->Unit(benchmark::kMicrosecond);

void interconnection_sweep(benchmark::State& state) {
    const auto topo = geo::Topology::build(counties(), ixps());
    std::vector<std::size_t> n_range;
    for (std::size_t n = 1; n <= topo.ixp_count(); ++n) n_range.push_back(n);
    std::vector<double> xs;
    for (int i = 0; i <= 10; ++i) xs.push_back(i / 10.0);
    const auto rule = state.range(0) ? geo::SubsetRule::best_subset : geo::SubsetRule::by_rank;
    for (auto _ : state) benchmark::DoNotOptimize(geo::sweep_interconnection(topo, n_range, xs, {}, rule));
}
BENCHMARK(interconnection_sweep)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace
