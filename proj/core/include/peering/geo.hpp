#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace peering::geo {

inline constexpr double earth_radius_km = 6371.0;

struct GeoPoint {
    double lat = 0.0;  // degrees
    double lon = 0.0;
};

/// Great-circle distance in km. Throws ValidationError for |lat| > 90 or |lon| > 180.
double haversine_km(GeoPoint a, GeoPoint b);

/// Fixed-order pairwise sum; the result does not depend on threading.
double pairwise_sum(std::span<const double> values);

struct County {
    std::string fips;
    std::string name;
    double lat = 0.0;
    double lon = 0.0;
    double population = 0.0;
    double land_area_km2 = 1.0;

    GeoPoint centroid() const { return {lat, lon}; }
    void validate() const;
};

struct IxpSite {
    std::string name;
    std::string metro;
    double lat = 0.0;
    double lon = 0.0;
    int rank = 0;  // 1 = largest

    GeoPoint location() const { return {lat, lon}; }
    void validate() const;
};

/// Counties, IXPs and each county's nearest IXP. Immutable once built.
class Topology {
public:
    /// Throws ValidationError on empty input, invalid records, duplicate FIPS codes,
    /// duplicate IXP ranks or zero total population.
    static Topology build(std::vector<County> counties, std::vector<IxpSite> ixps);

    const std::vector<County>& counties() const { return counties_; }
    const std::vector<IxpSite>& ixps() const { return ixps_; }
    std::size_t county_count() const { return counties_.size(); }
    std::size_t ixp_count() const { return ixps_.size(); }

    /// Index into ixps() of the county's closest IXP (ties go to the lower rank).
    std::size_t nearest_ixp(std::size_t county) const { return nearest_[county]; }
    /// P(j) = p_j / p.
    double weight(std::size_t county) const { return weight_[county]; }
    double total_population() const { return total_population_; }

    double county_to_ixp_km(std::size_t county, std::size_t ixp) const {
        return county_ixp_km_[county * ixps_.size() + ixp];
    }
    double ixp_to_ixp_km(std::size_t a, std::size_t b) const { return ixp_ixp_km_[a * ixps_.size() + b]; }

    /// IXP indices ordered by rank, largest first.
    const std::vector<std::size_t>& by_rank() const { return by_rank_; }

    /// Closest IXP among `candidates` (ties to lower rank).
    std::size_t nearest_among(std::size_t county, std::span<const std::size_t> candidates) const;

private:
    std::vector<County> counties_;
    std::vector<IxpSite> ixps_;
    std::vector<std::size_t> nearest_;
    std::vector<double> weight_;
    std::vector<double> county_ixp_km_;
    std::vector<double> ixp_ixp_km_;
    std::vector<std::size_t> by_rank_;
    double total_population_ = 0.0;
};

/// The IXPs (indices into Topology::ixps()) where the content provider and the ISP interconnect.
struct PeeringAgreement {
    std::vector<std::size_t> agreed;

    static PeeringAgreement all(const Topology& topo);
    /// The `n` highest-ranked IXPs.
    static PeeringAgreement top_ranked(const Topology& topo, std::size_t n);

    /// Throws ValidationError unless non-empty, in range and free of duplicates.
    void validate(const Topology& topo) const;
};

struct ReplicationPolicy {
    double local_fraction = 0.0;  // x: share of requests served from the IXP nearest the user

    void validate() const;
};

struct TrafficCostParams {
    double volume_down = 1.0;
    double unit_cost_backbone = 1.0;
    double unit_cost_middle = 1.0;
    double unit_cost_access = 1.0;

    void validate() const;
};

struct DistanceReport {
    double ed_backbone_hot = 0.0;
    double ed_backbone_cold = 0.0;
    double ed_middle = 0.0;
    double ed_access = 0.0;
};

/// Population mass of the counties whose nearest IXP is m, per IXP.
std::vector<double> exit_distribution(const Topology& topo);

/// Population mass of the counties whose nearest agreed IXP is k, per IXP
/// (zero for IXPs outside the agreement).
std::vector<double> entry_distribution(const Topology& topo, const PeeringAgreement& agreement);

/// Nearest agreed IXP for each county.
std::vector<std::size_t> nearest_agreed(const Topology& topo, const PeeringAgreement& agreement);

/// Backbone distance when the sender hands off at the agreed IXP nearest the source.
double expected_backbone_hot(const Topology& topo, const PeeringAgreement& agreement);

/// Backbone distance when content is served from the agreed IXP nearest the user.
double expected_backbone_cold(const Topology& topo, const PeeringAgreement& agreement);

/// Population-weighted centroid-to-nearest-IXP distance.
double expected_middle_mile(const Topology& topo);

/// Population-weighted mean distance to the centre of an equal-area disk county (2r/3).
double expected_access(const Topology& topo);

DistanceReport distance_report(const Topology& topo, const PeeringAgreement& agreement);

/// c^b * V * (x * ED_cold + (1 - x) * ED_hot).
double partial_replication_cost(const Topology& topo, const PeeringAgreement& agreement,
                                 const ReplicationPolicy& policy, const TrafficCostParams& params);

double partial_replication_cost(double ed_hot, double ed_cold, const ReplicationPolicy& policy,
                                const TrafficCostParams& params);

enum class SubsetRule { by_rank, best_subset };

/// Exhaustive search is limited to this many IXPs.
inline constexpr std::size_t max_best_subset_ixps = 15;

struct InterconnectionRow {
    std::size_t n_agreed = 0;
    double local_fraction = 0.0;
    double ed_backbone_hot = 0.0;
    double ed_backbone_cold = 0.0;
    double cost = 0.0;
    std::vector<std::size_t> agreed;
};

/// Cost for every (N, x) pair, rows ordered by N then by x as given.
std::vector<InterconnectionRow> sweep_interconnection(const Topology& topo, const std::vector<std::size_t>& n_range,
                                                      const std::vector<double>& x_list,
                                                      const TrafficCostParams& params, SubsetRule rule,
                                                      unsigned threads = 1);

/// Per-subscriber incremental cost implied by two cost levels.
double estimate_cd(double cost_with_agreement, double cost_baseline, double video_subscribers);

}  // namespace peering::geo
