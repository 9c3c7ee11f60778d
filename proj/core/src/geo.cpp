#include "peering/geo.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <numeric>
#include <set>
#include <sstream>

#include "peering/error.hpp"
#include "peering/parallel.hpp"

namespace peering::geo {

namespace {

void check_coordinates(GeoPoint p) {
    if (!(std::abs(p.lat) <= 90.0 && std::abs(p.lon) <= 180.0)) {
        std::ostringstream os;
        os << "invalid coordinates (" << p.lat << ", " << p.lon << ")";
        throw ValidationError(os.str());
    }
}

double radians(double deg) { return deg * std::numbers::pi / 180.0; }

}  // namespace

double haversine_km(GeoPoint a, GeoPoint b) {
    check_coordinates(a);
    check_coordinates(b);
    const double dlat = radians(b.lat - a.lat);
    const double dlon = radians(b.lon - a.lon);
    const double s = std::sin(dlat / 2) * std::sin(dlat / 2) +
                     std::cos(radians(a.lat)) * std::cos(radians(b.lat)) * std::sin(dlon / 2) * std::sin(dlon / 2);
    return 2.0 * earth_radius_km * std::asin(std::min(1.0, std::sqrt(s)));
}

double pairwise_sum(std::span<const double> v) {
    if (v.size() <= 8) {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    }
    const std::size_t half = v.size() / 2;
    return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

void County::validate() const {
    if (!(std::abs(lat) <= 90.0 && std::abs(lon) <= 180.0))
        throw ValidationError("county " + fips + ": invalid centroid coordinates");
    if (!(population >= 0.0 && std::isfinite(population)))
        throw ValidationError("county " + fips + ": population must be non-negative");
    if (!(land_area_km2 > 0.0 && std::isfinite(land_area_km2)))
        throw ValidationError("county " + fips + ": land area must be positive");
}

void IxpSite::validate() const {
    if (!(std::abs(lat) <= 90.0 && std::abs(lon) <= 180.0))
        throw ValidationError("IXP " + name + ": invalid coordinates");
}

Topology Topology::build(std::vector<County> counties, std::vector<IxpSite> ixps) {
    if (counties.empty()) throw ValidationError("topology needs at least one county");
    if (ixps.empty()) throw ValidationError("topology needs at least one IXP");

    std::set<std::string> fips;
    for (const auto& c : counties) {
        c.validate();
        if (!fips.insert(c.fips).second) throw ValidationError("duplicate FIPS code " + c.fips);
    }
    std::set<int> ranks;
    for (const auto& x : ixps) {
        x.validate();
        if (!ranks.insert(x.rank).second) throw ValidationError("duplicate IXP rank " + std::to_string(x.rank));
    }

    Topology t;
    t.counties_ = std::move(counties);
    t.ixps_ = std::move(ixps);
    const std::size_t j_count = t.counties_.size(), m_count = t.ixps_.size();

    std::vector<double> pops(j_count);
    for (std::size_t j = 0; j < j_count; ++j) pops[j] = t.counties_[j].population;
    t.total_population_ = pairwise_sum(pops);
    if (!(t.total_population_ > 0.0)) throw ValidationError("total county population is zero");
    t.weight_.resize(j_count);
    for (std::size_t j = 0; j < j_count; ++j) t.weight_[j] = pops[j] / t.total_population_;

    t.by_rank_.resize(m_count);
    std::iota(t.by_rank_.begin(), t.by_rank_.end(), std::size_t{0});
    std::sort(t.by_rank_.begin(), t.by_rank_.end(),
              [&](std::size_t a, std::size_t b) { return t.ixps_[a].rank < t.ixps_[b].rank; });

    t.ixp_ixp_km_.resize(m_count * m_count);
    for (std::size_t a = 0; a < m_count; ++a)
        for (std::size_t b = 0; b < m_count; ++b)
            t.ixp_ixp_km_[a * m_count + b] = haversine_km(t.ixps_[a].location(), t.ixps_[b].location());

    t.county_ixp_km_.resize(j_count * m_count);
    t.nearest_.resize(j_count);
    for (std::size_t j = 0; j < j_count; ++j) {
        for (std::size_t m = 0; m < m_count; ++m)
            t.county_ixp_km_[j * m_count + m] = haversine_km(t.counties_[j].centroid(), t.ixps_[m].location());
        t.nearest_[j] = t.nearest_among(j, t.by_rank_);
    }
    return t;
}

std::size_t Topology::nearest_among(std::size_t county, std::span<const std::size_t> candidates) const {
    std::size_t best = candidates.front();
    for (std::size_t m : candidates.subspan(1)) {
        const double d = county_to_ixp_km(county, m), db = county_to_ixp_km(county, best);
        if (d < db || (d == db && ixps_[m].rank < ixps_[best].rank)) best = m;
    }
    return best;
}

PeeringAgreement PeeringAgreement::all(const Topology& topo) { return top_ranked(topo, topo.ixp_count()); }

PeeringAgreement PeeringAgreement::top_ranked(const Topology& topo, std::size_t n) {
    if (n < 1 || n > topo.ixp_count())
        throw ValidationError("agreement size must lie in [1, " + std::to_string(topo.ixp_count()) + "]");
    return {{topo.by_rank().begin(), topo.by_rank().begin() + static_cast<std::ptrdiff_t>(n)}};
}

void PeeringAgreement::validate(const Topology& topo) const {
    if (agreed.empty()) throw ValidationError("peering agreement is empty");
    std::set<std::size_t> seen;
    for (std::size_t k : agreed) {
        if (k >= topo.ixp_count()) throw ValidationError("agreement names IXP index " + std::to_string(k) +
                                                         " outside the topology");
        if (!seen.insert(k).second) throw ValidationError("agreement lists IXP index " + std::to_string(k) + " twice");
    }
}

void ReplicationPolicy::validate() const {
    if (!(local_fraction >= 0.0 && local_fraction <= 1.0))
        throw ValidationError("local fraction x must lie in [0, 1]");
}

void TrafficCostParams::validate() const {
    for (double v : {volume_down, unit_cost_backbone, unit_cost_middle, unit_cost_access})
        if (!(v >= 0.0 && std::isfinite(v))) throw ValidationError("traffic cost parameters must be non-negative");
}

namespace {

// Per-IXP masses accumulated with pairwise sums over each IXP's counties, in county order.
std::vector<double> masses(const Topology& topo, const std::vector<std::size_t>& assignment) {
    std::vector<std::vector<double>> parts(topo.ixp_count());
    for (std::size_t j = 0; j < topo.county_count(); ++j) parts[assignment[j]].push_back(topo.weight(j));
    std::vector<double> out(topo.ixp_count());
    for (std::size_t m = 0; m < out.size(); ++m) out[m] = pairwise_sum(parts[m]);
    return out;
}

double weighted_sum(const Topology& topo, const auto& term) {
    std::vector<double> v(topo.county_count());
    for (std::size_t j = 0; j < v.size(); ++j) v[j] = topo.weight(j) * term(j);
    return pairwise_sum(v);
}

double hot_from(const Topology& topo, const std::vector<double>& entry, const std::vector<double>& exit) {
    std::vector<double> terms;
    terms.reserve(entry.size() * exit.size());
    for (std::size_t k = 0; k < entry.size(); ++k)
        for (std::size_t m = 0; m < exit.size(); ++m) terms.push_back(entry[k] * exit[m] * topo.ixp_to_ixp_km(k, m));
    return pairwise_sum(terms);
}

double cold_from(const Topology& topo, const std::vector<std::size_t>& agreed_nearest) {
    return weighted_sum(topo, [&](std::size_t j) { return topo.ixp_to_ixp_km(agreed_nearest[j], topo.nearest_ixp(j)); });
}

}  // namespace

std::vector<double> exit_distribution(const Topology& topo) {
    std::vector<std::size_t> a(topo.county_count());
    for (std::size_t j = 0; j < a.size(); ++j) a[j] = topo.nearest_ixp(j);
    return masses(topo, a);
}

std::vector<std::size_t> nearest_agreed(const Topology& topo, const PeeringAgreement& agreement) {
    agreement.validate(topo);
    std::vector<std::size_t> out(topo.county_count());
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = topo.nearest_among(j, agreement.agreed);
    return out;
}

std::vector<double> entry_distribution(const Topology& topo, const PeeringAgreement& agreement) {
    return masses(topo, nearest_agreed(topo, agreement));
}

double expected_backbone_hot(const Topology& topo, const PeeringAgreement& agreement) {
    return hot_from(topo, entry_distribution(topo, agreement), exit_distribution(topo));
}

double expected_backbone_cold(const Topology& topo, const PeeringAgreement& agreement) {
    return cold_from(topo, nearest_agreed(topo, agreement));
}

double expected_middle_mile(const Topology& topo) {
    return weighted_sum(topo, [&](std::size_t j) { return topo.county_to_ixp_km(j, topo.nearest_ixp(j)); });
}

double expected_access(const Topology& topo) {
    return weighted_sum(topo, [&](std::size_t j) {
        return 2.0 / 3.0 * std::sqrt(topo.counties()[j].land_area_km2 / std::numbers::pi);
    });
}

DistanceReport distance_report(const Topology& topo, const PeeringAgreement& agreement) {
    const auto na = nearest_agreed(topo, agreement);
    return {hot_from(topo, masses(topo, na), exit_distribution(topo)), cold_from(topo, na),
            expected_middle_mile(topo), expected_access(topo)};
}

double partial_replication_cost(double ed_hot, double ed_cold, const ReplicationPolicy& policy,
                                const TrafficCostParams& params) {
    policy.validate();
    params.validate();
    const double x = policy.local_fraction;
    return params.unit_cost_backbone * params.volume_down * (x * ed_cold + (1.0 - x) * ed_hot);
}

double partial_replication_cost(const Topology& topo, const PeeringAgreement& agreement,
                                const ReplicationPolicy& policy, const TrafficCostParams& params) {
    const auto na = nearest_agreed(topo, agreement);
    return partial_replication_cost(hot_from(topo, masses(topo, na), exit_distribution(topo)), cold_from(topo, na),
                                    policy, params);
}

std::vector<InterconnectionRow> sweep_interconnection(const Topology& topo, const std::vector<std::size_t>& n_range,
                                                      const std::vector<double>& x_list,
                                                      const TrafficCostParams& params, SubsetRule rule,
                                                      unsigned threads) {
    params.validate();
    for (double x : x_list) ReplicationPolicy{x}.validate();
    const std::size_t m_count = topo.ixp_count();
    for (std::size_t n : n_range)
        if (n < 1 || n > m_count)
            throw ValidationError("agreement size " + std::to_string(n) + " outside [1, " + std::to_string(m_count) +
                                  "]");
    if (rule == SubsetRule::best_subset && m_count > max_best_subset_ixps)
        throw ValidationError("best-subset search is limited to " + std::to_string(max_best_subset_ixps) +
                              " IXPs; topology has " + std::to_string(m_count));

    const auto exit = exit_distribution(topo);
    struct Candidate {
        std::vector<std::size_t> agreed;
        double hot = 0.0;
        double cold = 0.0;
    };
    auto evaluate = [&](std::vector<std::size_t> agreed) {
        std::vector<std::size_t> na(topo.county_count());
        for (std::size_t j = 0; j < na.size(); ++j) na[j] = topo.nearest_among(j, agreed);
        return Candidate{std::move(agreed), hot_from(topo, masses(topo, na), exit), cold_from(topo, na)};
    };

    // Candidates per requested N: one for by-rank, every subset of that size otherwise.
    std::vector<std::vector<Candidate>> candidates(n_range.size());
    for_each_index(n_range.size(), threads, [&](std::size_t i) {
        const std::size_t n = n_range[i];
        if (rule == SubsetRule::by_rank) {
            candidates[i].push_back(evaluate(PeeringAgreement::top_ranked(topo, n).agreed));
            return;
        }
        for (unsigned mask = 0; mask < (1u << m_count); ++mask) {
            if (static_cast<std::size_t>(std::popcount(mask)) != n) continue;
            std::vector<std::size_t> agreed;
            for (std::size_t m = 0; m < m_count; ++m)
                if (mask & (1u << m)) agreed.push_back(m);
            candidates[i].push_back(evaluate(std::move(agreed)));
        }
    });

    std::vector<InterconnectionRow> rows;
    for (std::size_t i = 0; i < n_range.size(); ++i)
        for (double x : x_list) {
            const Candidate* best = nullptr;
            double best_cost = 0.0;
            for (const auto& c : candidates[i]) {
                const double cost = partial_replication_cost(c.hot, c.cold, {x}, params);
                if (!best || cost < best_cost) {
                    best = &c;
                    best_cost = cost;
                }
            }
            rows.push_back({n_range[i], x, best->hot, best->cold, best_cost, best->agreed});
        }
    return rows;
}

double estimate_cd(double cost_with_agreement, double cost_baseline, double video_subscribers) {
    if (!(video_subscribers > 0.0)) throw ValidationError("video subscriber count must be positive");
    return (cost_with_agreement - cost_baseline) / video_subscribers;
}

}  // namespace peering::geo
