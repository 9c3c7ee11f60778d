#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "peering/calibration.hpp"
#include "peering/equilibrium.hpp"
#include "peering/geo.hpp"

namespace peering::io {

/// A parsed scenario file. The market is given either explicitly (population
/// plus all costs) or as calibration targets; never both.
struct Scenario {
    std::string source;    // path of the scenario file
    std::string base_dir;  // relative paths inside the file resolve against this

    // market
    double n_consumers = 1e6;
    double p_video_base = 0.0;
    double pass_through = 1.0;
    std::optional<ConsumerPopulation> population;
    std::optional<MarketTargets> targets;

    // costs; in calibration mode c_basic and c_premium_increment are solved for
    CostVector costs{0.0, 0.0, 0.0, 10.0};

    // sweeps
    std::vector<double> fee_grid;
    Interval fee_range{-5.0, 10.0};
    std::vector<double> cd_grid;
    double regulator_scan_step = 0.25;

    // geo
    std::string counties_path;
    std::string ixps_path;
    std::vector<std::size_t> n_range;
    std::vector<double> x_list;
    geo::SubsetRule subset_rule = geo::SubsetRule::by_rank;
    geo::TrafficCostParams traffic;

    // oracle
    std::size_t mc_samples = 10'000'000;
    std::size_t mc_price_points = 20;
    std::size_t grid_scenarios = 5;
    std::size_t geo_mc_samples = 1'000'000;

    // output
    std::string output_dir = "results";

    bool calibration_mode() const { return targets.has_value(); }

    /// The market model in explicit mode. Throws ValidationError in calibration mode.
    MarketModel explicit_model() const;

    /// Throws ValidationError naming what `experiment` needs but the scenario lacks.
    void require(std::string_view experiment) const;
};

/// Reads a YAML scenario. Unknown keys are rejected and every missing required
/// key is listed in one ValidationError. YAML syntax errors raise ParseError.
Scenario load_scenario(const std::string& path);
Scenario parse_scenario(const std::string& text, const std::string& source, const std::string& base_dir);

/// Canonical key=value dump of every semantic input (defaults included, output directory excluded).
std::string canonical_form(const Scenario& s);

/// FNV-1a over the canonical form plus the bytes of the referenced data files, as 16 hex digits.
std::string fingerprint(const Scenario& s);

}  // namespace peering::io
