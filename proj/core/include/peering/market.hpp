#pragma once

#include <string_view>

#include "peering/quadrature.hpp"

namespace peering {

/// Consumers' monthly utilities for the basic tier (b), the premium increment (p)
/// and video streaming (v): three independent Normals, plus the population size.
struct ConsumerPopulation {
    double mu_basic = 0.0;
    double sigma_basic = 1.0;
    double mu_premium = 0.0;
    double sigma_premium = 1.0;
    double mu_video = 0.0;
    double sigma_video = 1.0;
    double n_consumers = 1e6;

    /// Population with every sigma set to `ratio` times its mean.
    static ConsumerPopulation from_means(double mu_basic, double mu_premium, double mu_video,
                                         double n_consumers = 1e6, double ratio = 0.25);

    /// Throws ValidationError unless all sigmas and n_consumers are positive and finite.
    void validate() const;
};

/// All prices, in money per month. `p_video` is the aggregate streaming price the
/// consumer sees; use `with_fee` to derive it from the base price and pass-through.
struct PriceVector {
    double p_basic = 0.0;
    double p_premium_increment = 0.0;
    double p_video = 0.0;
    double p_peering = 0.0;
    double p_video_base = 0.0;
    double pass_through = 1.0;

    static PriceVector with_fee(double p_basic, double p_premium_increment, double p_video_base,
                                double pass_through, double p_peering);

    double premium_total() const { return p_basic + p_premium_increment; }
    double premium_video_total() const { return p_basic + p_premium_increment + p_video; }
};

/// Marginal costs per subscriber per month. `c_video_increment` may have any sign.
struct CostVector {
    double c_basic = 0.0;
    double c_premium_increment = 0.0;
    double c_video_increment = 0.0;
    double c_vsp = 0.0;

    void validate() const;
};

enum class Choice { none, basic, premium, premium_video };

std::string_view to_string(Choice c);

/// Fractions of the population choosing each paid option; the remainder does not subscribe.
struct DemandShares {
    double basic = 0.0;
    double premium_only = 0.0;
    double premium_video = 0.0;

    double subscribing() const { return basic + premium_only + premium_video; }
    double premium() const { return premium_only + premium_video; }
};

/// Aggregate consumer surplus (money per month over the whole population).
struct SurplusBreakdown {
    double basic = 0.0;
    double premium_only = 0.0;
    double premium_video = 0.0;
    double total = 0.0;
};

struct ProfitReport {
    double isp = 0.0;
    double vsp = 0.0;
};

struct MarketOutcome {
    DemandShares shares;
    SurplusBreakdown surplus;
};

/// P^v = P^v_0 + alpha * P^d. Throws ValidationError unless 0 < alpha <= 1.
double video_price(double p_video_base, double pass_through, double p_peering);

/// Surplus-maximizing option for one consumer. Ties resolve toward the richer bundle.
Choice consumer_choice(double b, double p, double v, const PriceVector& prices);

/// Consumer surplus of a given option (zero for `none`).
double choice_surplus(Choice c, double b, double p, double v, const PriceVector& prices);

/// Options for the region integrals. Integration runs over mu +- `span_sigmas` sigma on every axis.
struct MarketQuadrature {
    double abs_tolerance = 1e-10;
    double span_sigmas = 8.0;
    unsigned max_depth = 30;
};

/// Probability mass of each choice region under the utility distribution.
DemandShares demand_shares(const ConsumerPopulation& pop, const PriceVector& prices,
                           const MarketQuadrature& quad = {});

/// Aggregate surplus per choice, scaled by n_consumers.
SurplusBreakdown aggregate_surplus(const ConsumerPopulation& pop, const PriceVector& prices,
                                   const MarketQuadrature& quad = {});

/// Shares and surplus from a single pass over the regions.
MarketOutcome evaluate_market(const ConsumerPopulation& pop, const PriceVector& prices,
                              const MarketQuadrature& quad = {});

/// ISP profit excluding fixed costs, for shares expressed as fractions of pop.n_consumers.
double isp_profit(const DemandShares& shares, const ConsumerPopulation& pop,
                  const PriceVector& prices, const CostVector& costs);

/// Aggregate streaming-provider profit excluding fixed costs.
double vsp_profit(const DemandShares& shares, const ConsumerPopulation& pop,
                  const PriceVector& prices, const CostVector& costs);

ProfitReport profits(const DemandShares& shares, const ConsumerPopulation& pop,
                     const PriceVector& prices, const CostVector& costs);

}  // namespace peering
