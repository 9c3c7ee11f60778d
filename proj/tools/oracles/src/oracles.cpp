#include "peering_oracles/oracles.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "peering/parallel.hpp"

namespace peering::oracles {

namespace {

constexpr std::uint64_t block_size = 1 << 16;

// Running sums for one quantity.
struct Moments {
    double sum = 0.0;
    double sum_sq = 0.0;

    void add(double x) {
        sum += x;
        sum_sq += x * x;
    }
    void merge(const Moments& o) {
        sum += o.sum;
        sum_sq += o.sum_sq;
    }
    Estimate estimate(std::uint64_t n) const {
        const double mean = sum / static_cast<double>(n);
        const double var = std::max(0.0, sum_sq / static_cast<double>(n) - mean * mean);
        return {mean, std::sqrt(var / static_cast<double>(n))};
    }
};

std::mt19937_64 stream(std::uint64_t seed, std::uint64_t block) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(block), static_cast<std::uint32_t>(block >> 32)};
    return std::mt19937_64(seq);
}

}  // namespace

MarketSample sample_market(const ConsumerPopulation& pop, const PriceVector& prices, std::uint64_t samples,
                           std::uint64_t seed, unsigned threads) {
    pop.validate();
    const std::uint64_t blocks = (samples + block_size - 1) / block_size;
    std::vector<std::array<Moments, 7>> acc(blocks);

    for_each_index(blocks, threads, [&](std::size_t b) {
        auto rng = stream(seed, b);
        std::normal_distribution<double> nb(pop.mu_basic, pop.sigma_basic);
        std::normal_distribution<double> np(pop.mu_premium, pop.sigma_premium);
        std::normal_distribution<double> nv(pop.mu_video, pop.sigma_video);
        const std::uint64_t n = std::min(block_size, samples - b * block_size);
        auto& m = acc[b];
        for (std::uint64_t i = 0; i < n; ++i) {
            const double ub = nb(rng), up = np(rng), uv = nv(rng);
            const Choice c = consumer_choice(ub, up, uv, prices);
            const double cs = choice_surplus(c, ub, up, uv, prices);
            const double is_b = c == Choice::basic, is_p = c == Choice::premium, is_v = c == Choice::premium_video;
            m[0].add(is_b);
            m[1].add(is_p);
            m[2].add(is_v);
            m[3].add(is_b * cs);
            m[4].add(is_p * cs);
            m[5].add(is_v * cs);
            m[6].add(cs);
        }
    });

    std::array<Moments, 7> total{};
    for (const auto& a : acc)
        for (std::size_t k = 0; k < 7; ++k) total[k].merge(a[k]);
    MarketSample out;
    out.samples = samples;
    out.share_basic = total[0].estimate(samples);
    out.share_premium_only = total[1].estimate(samples);
    out.share_premium_video = total[2].estimate(samples);
    out.cs_basic = total[3].estimate(samples);
    out.cs_premium_only = total[4].estimate(samples);
    out.cs_premium_video = total[5].estimate(samples);
    out.cs_total = total[6].estimate(samples);
    return out;
}

GeoSample sample_distances(const geo::Topology& topo, const geo::PeeringAgreement& agreement, std::uint64_t samples,
                           std::uint64_t seed) {
    agreement.validate(topo);
    std::vector<double> w(topo.county_count());
    for (std::size_t j = 0; j < w.size(); ++j) w[j] = topo.counties()[j].population;
    std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto rng = stream(seed, 0);

    auto closest = [&](std::size_t j, const std::vector<std::size_t>& candidates) {
        std::size_t best = candidates.front();
        double best_d = geo::haversine_km(topo.counties()[j].centroid(), topo.ixps()[best].location());
        for (std::size_t m : candidates) {
            const double d = geo::haversine_km(topo.counties()[j].centroid(), topo.ixps()[m].location());
            if (d < best_d || (d == best_d && topo.ixps()[m].rank < topo.ixps()[best].rank)) {
                best = m;
                best_d = d;
            }
        }
        return best;
    };
    std::vector<std::size_t> every(topo.ixp_count());
    for (std::size_t m = 0; m < every.size(); ++m) every[m] = m;

    // Cache per-county lookups; the sampling itself stays per draw.
    std::vector<std::size_t> near_all(topo.county_count()), near_agreed(topo.county_count());
    for (std::size_t j = 0; j < near_all.size(); ++j) {
        near_all[j] = closest(j, every);
        near_agreed[j] = closest(j, agreement.agreed);
    }
    auto ixp_km = [&](std::size_t a, std::size_t b) {
        return geo::haversine_km(topo.ixps()[a].location(), topo.ixps()[b].location());
    };

    Moments hot, cold, middle, access;
    for (std::uint64_t i = 0; i < samples; ++i) {
        const std::size_t s = pick(rng), u = pick(rng);
        hot.add(ixp_km(near_agreed[s], near_all[u]));
        cold.add(ixp_km(near_agreed[u], near_all[u]));
        middle.add(geo::haversine_km(topo.counties()[u].centroid(), topo.ixps()[near_all[u]].location()));
        const double r = std::sqrt(topo.counties()[u].land_area_km2 / std::numbers::pi);
        access.add(r * std::sqrt(unit(rng)));
    }
    return {hot.estimate(samples), cold.estimate(samples), middle.estimate(samples), access.estimate(samples), samples};
}

// Grid nodes sit on multiples of `step`, so the optimizer's answer is never itself a node.
template <std::size_t N>
std::array<double, N> snap(const std::array<double, N>& x, double step) {
    std::array<double, N> out{};
    for (std::size_t i = 0; i < N; ++i) out[i] = std::round(x[i] / step) * step;
    return out;
}

GridCheck<3> isp_grid_check(const MarketModel& model, const std::array<double, 3>& optimum, int half_nodes, double step,
                            double quad_tolerance) {
    GridCheck<3> g;
    g.optimum_value = isp_objective(model, optimum[0], optimum[1], optimum[2], quad_tolerance);
    g.best_node_value = -std::numeric_limits<double>::infinity();
    const auto c = snap(optimum, step);
    for (int i = -half_nodes; i <= half_nodes; ++i)
        for (int j = -half_nodes; j <= half_nodes; ++j)
            for (int k = -half_nodes; k <= half_nodes; ++k) {
                const std::array<double, 3> x{c[0] + i * step, c[1] + j * step, c[2] + k * step};
                const double v = isp_objective(model, x[0], x[1], x[2], quad_tolerance);
                ++g.nodes;
                if (v > g.best_node_value) {
                    g.best_node_value = v;
                    g.best_node = x;
                }
            }
    return g;
}

GridCheck<2> tier_grid_check(const MarketModel& model, double p_peering, const std::array<double, 2>& optimum,
                             int half_nodes, double step, double quad_tolerance) {
    GridCheck<2> g;
    g.optimum_value = isp_objective(model, optimum[0], optimum[1], p_peering, quad_tolerance);
    g.best_node_value = -std::numeric_limits<double>::infinity();
    const auto c = snap(optimum, step);
    for (int i = -half_nodes; i <= half_nodes; ++i)
        for (int j = -half_nodes; j <= half_nodes; ++j) {
            const std::array<double, 2> x{c[0] + i * step, c[1] + j * step};
            const double v = isp_objective(model, x[0], x[1], p_peering, quad_tolerance);
            ++g.nodes;
            if (v > g.best_node_value) {
                g.best_node_value = v;
                g.best_node = x;
            }
        }
    return g;
}

}  // namespace peering::oracles
