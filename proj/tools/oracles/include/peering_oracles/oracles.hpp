#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "peering/equilibrium.hpp"
#include "peering/geo.hpp"
#include "peering/market.hpp"

namespace peering::oracles {

/// Sample mean and standard error.
struct Estimate {
    double mean = 0.0;
    double se = 0.0;
};

/// Per-consumer Monte Carlo estimates from classifying sampled utilities with consumer_choice.
struct MarketSample {
    Estimate share_basic, share_premium_only, share_premium_video;
    Estimate cs_basic, cs_premium_only, cs_premium_video, cs_total;  // per consumer
    std::uint64_t samples = 0;
};

/// Samples are drawn in fixed-size blocks, each from its own seeded stream, so the
/// result depends on (seed, samples) only and not on `threads`.
MarketSample sample_market(const ConsumerPopulation& pop, const PriceVector& prices, std::uint64_t samples,
                           std::uint64_t seed, unsigned threads = 1);

struct GeoSample {
    Estimate backbone_hot, backbone_cold, middle, access;
    std::uint64_t samples = 0;
};

/// Draws (source county, user county) pairs by population and measures each leg
/// directly; access distance uses a uniform point in the county's equal-area disk.
GeoSample sample_distances(const geo::Topology& topo, const geo::PeeringAgreement& agreement,
                           std::uint64_t samples, std::uint64_t seed);

template <std::size_t N>
struct GridCheck {
    std::array<double, N> best_node{};
    double best_node_value = 0.0;
    double optimum_value = 0.0;
    std::size_t nodes = 0;
    bool dominated() const { return optimum_value >= best_node_value; }
};

/// Evaluates the ISP objective on a (2k+1)^3 lattice of spacing `step` (nodes at multiples
/// of `step`) centred near `optimum`.
GridCheck<3> isp_grid_check(const MarketModel& model, const std::array<double, 3>& optimum, int half_nodes = 20,
                            double step = 0.25, double quad_tolerance = 1e-10);

/// Same for tier prices with the fee held fixed.
GridCheck<2> tier_grid_check(const MarketModel& model, double p_peering, const std::array<double, 2>& optimum,
                             int half_nodes = 20, double step = 0.25, double quad_tolerance = 1e-10);

/// |a - b| <= k * se.
inline bool within(double quadrature, const Estimate& mc, double k = 3.0) {
    return std::abs(quadrature - mc.mean) <= k * mc.se;
}

}  // namespace peering::oracles
