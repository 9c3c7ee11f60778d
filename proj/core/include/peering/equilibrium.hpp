#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "peering/market.hpp"

namespace peering {

/// Everything held fixed while prices are optimized: utilities, costs and the
/// streaming-price rule P^v = P^v_0 + alpha * P^d.
struct MarketModel {
    ConsumerPopulation population;
    CostVector costs;
    double p_video_base = 0.0;
    double pass_through = 1.0;

    PriceVector prices(double p_basic, double p_premium_increment, double p_peering) const {
        return PriceVector::with_fee(p_basic, p_premium_increment, p_video_base, pass_through, p_peering);
    }

    void validate() const;
};

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

struct OptimizerOptions {
    double coarse_step = 1.0;
    double coarse_halfwidth = 20.0;
    std::size_t multistarts = 4;
    double seed_separation = 3.0;    // between coarse-grid seeds (max-norm)
    double warm_start_offset = 2.0;  // axis offsets around a supplied seed
    double simplex_xtol = 0.005;
    double certificate_step = 0.25;
    double agreement_xtol = 0.05;
    double agreement_rel = 1e-6;
    double coarse_quad_tolerance = 1e-6;
    double quad_tolerance = 1e-10;
    bool polish = true;
};

struct IspOptimum {
    double p_basic = 0.0;
    double p_premium_increment = 0.0;
    double p_peering = 0.0;
    double profit = 0.0;  // whole population
};

struct TierOptimum {
    double p_basic = 0.0;
    double p_premium_increment = 0.0;
    double profit = 0.0;
};

/// Per-consumer ISP profit at the given prices, with P^v following the model's rule.
double isp_objective(const MarketModel& model, double p_basic, double p_premium_increment,
                     double p_peering, double quad_tolerance = 1e-10);

/// Joint ISP choice of (P^b, P^p, P^d). Multistart simplex search, Newton polish, and a
/// +-certificate_step grid check around the answer. Throws ConvergenceError when the
/// starts disagree or the certificate fails.
IspOptimum maximize_isp_prices(const MarketModel& model, const OptimizerOptions& opts = {},
                               const std::optional<std::array<double, 3>>& seed = std::nullopt);

/// ISP tier prices with the peering fee held fixed.
TierOptimum maximize_tier_prices_given_fee(const MarketModel& model, double p_peering,
                                           const OptimizerOptions& opts = {},
                                           const std::optional<std::array<double, 2>>& seed = std::nullopt);

/// A market evaluated at one price point.
struct EquilibriumPoint {
    PriceVector prices;
    DemandShares shares;
    SurplusBreakdown surplus;
    ProfitReport profits;
};

EquilibriumPoint evaluate_point(const MarketModel& model, const PriceVector& prices,
                                double quad_tolerance = 1e-10);

/// Best-response tier prices for `p_peering`, evaluated.
EquilibriumPoint tier_equilibrium(const MarketModel& model, double p_peering, const OptimizerOptions& opts = {},
                                  const std::optional<std::array<double, 2>>& seed = std::nullopt);

struct RegulatorOptions {
    double scan_step = 0.25;
    double resolution = 1e-4;
    double unimodality_tolerance = 1e-6;  // per consumer
    OptimizerOptions inner;
};

struct RegulatorResult {
    double p_peering = 0.0;
    EquilibriumPoint point;
    std::vector<std::pair<double, double>> cs_scan;  // (fee, total CS)
};

/// Fee that maximizes total consumer surplus when the ISP best-responds with tier prices.
/// Throws ConvergenceError if the scanned CS curve is not unimodal within tolerance.
RegulatorResult regulator_optimal_fee(const MarketModel& model, Interval fee_range,
                                      const RegulatorOptions& opts = {});

struct ProgressEvent {
    std::string_view stage;
    std::size_t index = 0;
    std::size_t total = 0;
    double residual = 0.0;
};

using ProgressSink = std::function<void(const ProgressEvent&)>;

struct SweepOptions {
    OptimizerOptions optimizer;
    RegulatorOptions regulator;
    Interval fee_range{-5.0, 10.0};
    unsigned threads = 1;
    std::size_t warm_chain = 8;  // fee-sweep points solved in sequence from one cold start
    ProgressSink progress;
};

struct FeeSweepPoint {
    double p_peering = 0.0;
    std::optional<EquilibriumPoint> point;
    std::string status = "ok";
};

/// One fixed-fee equilibrium per grid value; failures are recorded per point.
/// Progress callbacks may arrive from worker threads.
std::vector<FeeSweepPoint> sweep_fee(const MarketModel& model, const std::vector<double>& fee_grid,
                                     const SweepOptions& opts = {});

}  // namespace peering
