#include "peering/market.hpp"

#include <algorithm>
#include <cmath>

#include "peering/error.hpp"
#include "peering/normal.hpp"

namespace peering {

ConsumerPopulation ConsumerPopulation::from_means(double mu_basic, double mu_premium, double mu_video,
                                                  double n_consumers, double ratio) {
    return {mu_basic,   ratio * mu_basic, mu_premium, ratio * mu_premium,
            mu_video,   ratio * mu_video, n_consumers};
}

void ConsumerPopulation::validate() const {
    const double all[] = {mu_basic, sigma_basic, mu_premium, sigma_premium, mu_video, sigma_video, n_consumers};
    for (double x : all)
        if (!std::isfinite(x)) throw ValidationError("consumer population has a non-finite parameter");
    if (!(sigma_basic > 0 && sigma_premium > 0 && sigma_video > 0))
        throw ValidationError("utility standard deviations must be positive");
    if (!(n_consumers > 0)) throw ValidationError("n_consumers must be positive");
}

PriceVector PriceVector::with_fee(double p_basic, double p_premium_increment, double p_video_base,
                                  double pass_through, double p_peering) {
    return {p_basic,   p_premium_increment, video_price(p_video_base, pass_through, p_peering),
            p_peering, p_video_base,        pass_through};
}

void CostVector::validate() const {
    if (!(std::isfinite(c_basic) && std::isfinite(c_premium_increment) &&
          std::isfinite(c_video_increment) && std::isfinite(c_vsp)))
        throw ValidationError("cost vector has a non-finite entry");
    if (c_basic < 0 || c_premium_increment < 0 || c_vsp < 0)
        throw ValidationError("c_basic, c_premium_increment and c_vsp must be non-negative");
}

std::string_view to_string(Choice c) {
    switch (c) {
        case Choice::none: return "none";
        case Choice::basic: return "basic";
        case Choice::premium: return "premium";
        case Choice::premium_video: return "premium_video";
    }
    return "?";
}

double video_price(double p_video_base, double pass_through, double p_peering) {
    if (!(pass_through > 0.0 && pass_through <= 1.0))
        throw ValidationError("pass-through rate must lie in (0, 1]");
    return p_video_base + pass_through * p_peering;
}

double choice_surplus(Choice c, double b, double p, double v, const PriceVector& pr) {
    switch (c) {
        case Choice::none: return 0.0;
        case Choice::basic: return b - pr.p_basic;
        case Choice::premium: return b + p - pr.p_basic - pr.p_premium_increment;
        case Choice::premium_video: return b + p + v - pr.p_basic - pr.p_premium_increment - pr.p_video;
    }
    return 0.0;
}

Choice consumer_choice(double b, double p, double v, const PriceVector& prices) {
    // Scan from the richest bundle down; a later option must be strictly better to win.
    Choice best = Choice::premium_video;
    double best_cs = choice_surplus(best, b, p, v, prices);
    for (Choice c : {Choice::premium, Choice::basic, Choice::none}) {
        const double cs = choice_surplus(c, b, p, v, prices);
        if (cs > best_cs) {
            best = c;
            best_cs = cs;
        }
    }
    return best;
}

namespace {

void check_prices(const PriceVector& pr) {
    if (!(std::isfinite(pr.p_basic) && std::isfinite(pr.p_premium_increment) &&
          std::isfinite(pr.p_video)))
        throw ValidationError("prices must be finite");
}

// Region decomposition. With g = (p - P^p) + max(0, v - P^v) the best premium
// increment over basic, a consumer buys basic iff g <= 0 and b > P^b, buys
// premium iff g > 0 and b > P^b - g, and adds video iff v > P^v. Each region is
// integrated over (p, v) with the b-axis done in closed form: component 0 is
// P(B > c) and component 1 is E[(B - c)^+].
template <std::size_t K>
struct RegionIntegrals {
    std::array<double, K> basic{};
    std::array<double, K> premium_only{};
    std::array<double, K> premium_video{};
};

template <std::size_t K>
RegionIntegrals<K> integrate_regions(const ConsumerPopulation& pop, const PriceVector& pr,
                                     const MarketQuadrature& quad) {
    pop.validate();
    check_prices(pr);

    const double mb = pop.mu_basic, sb = pop.sigma_basic;
    const double mp = pop.mu_premium, sp = pop.sigma_premium;
    const double mv = pop.mu_video, sv = pop.sigma_video;
    const double pb = pr.p_basic, pp = pr.p_premium_increment, pv = pr.p_video;
    const double p_lo = mp - quad.span_sigmas * sp, p_hi = mp + quad.span_sigmas * sp;
    const double v_lo = mv - quad.span_sigmas * sv, v_hi = mv + quad.span_sigmas * sv;
    const quadrature::Options opts{quad.abs_tolerance, quad.max_depth};

    auto b_axis = [&](double threshold) {
        std::array<double, K> out{};
        out[0] = normal::upper_tail(threshold, mb, sb);
        if constexpr (K > 1) out[1] = normal::excess_mean(threshold, mb, sb);
        return out;
    };

    RegionIntegrals<K> r;

    // Basic: b > P^b and (p, v) in {p < P^p, p + v < P^p + P^v}.
    const double below_video = normal::cdf(pv, mv, sv);
    double no_upgrade = normal::cdf(pp, mp, sp) * below_video;
    no_upgrade += quadrature::integrate_scalar(
        [&](double v) { return normal::pdf(v, mv, sv) * normal::cdf(pp + pv - v, mp, sp); },
        std::max(pv, v_lo), v_hi, opts);
    r.basic = b_axis(pb);
    for (auto& x : r.basic) x *= no_upgrade;

    // Premium without video: v < P^v, p > P^p, b > P^b + P^p - p.
    r.premium_only = quadrature::integrate<K>(
        [&](double p) {
            auto out = b_axis(pb + pp - p);
            const double w = normal::pdf(p, mp, sp);
            for (auto& x : out) x *= w;
            return out;
        },
        std::max(pp, p_lo), p_hi, opts);
    for (auto& x : r.premium_only) x *= below_video;

    // Premium with video: v > P^v, p + v > P^p + P^v, b > P^b + P^p + P^v - p - v.
    r.premium_video = quadrature::integrate<K>(
        [&](double v) {
            auto inner = quadrature::integrate<K>(
                [&](double p) {
                    auto out = b_axis(pb + pp + pv - p - v);
                    const double w = normal::pdf(p, mp, sp);
                    for (auto& x : out) x *= w;
                    return out;
                },
                std::max(pp + pv - v, p_lo), p_hi, opts);
            const double w = normal::pdf(v, mv, sv);
            for (auto& x : inner) x *= w;
            return inner;
        },
        std::max(pv, v_lo), v_hi, opts);

    return r;
}

}  // namespace

DemandShares demand_shares(const ConsumerPopulation& pop, const PriceVector& prices,
                           const MarketQuadrature& quad) {
    const auto r = integrate_regions<1>(pop, prices, quad);
    return {r.basic[0], r.premium_only[0], r.premium_video[0]};
}

MarketOutcome evaluate_market(const ConsumerPopulation& pop, const PriceVector& prices,
                              const MarketQuadrature& quad) {
    const auto r = integrate_regions<2>(pop, prices, quad);
    MarketOutcome out;
    out.shares = {r.basic[0], r.premium_only[0], r.premium_video[0]};
    const double n = pop.n_consumers;
    out.surplus.basic = n * r.basic[1];
    out.surplus.premium_only = n * r.premium_only[1];
    out.surplus.premium_video = n * r.premium_video[1];
    out.surplus.total = out.surplus.basic + out.surplus.premium_only + out.surplus.premium_video;
    return out;
}

SurplusBreakdown aggregate_surplus(const ConsumerPopulation& pop, const PriceVector& prices,
                                   const MarketQuadrature& quad) {
    return evaluate_market(pop, prices, quad).surplus;
}

double isp_profit(const DemandShares& s, const ConsumerPopulation& pop, const PriceVector& pr,
                  const CostVector& c) {
    const double basic_margin = pr.p_basic - c.c_basic;
    const double premium_margin = basic_margin + pr.p_premium_increment - c.c_premium_increment;
    const double video_margin = premium_margin + pr.p_peering - c.c_video_increment;
    return pop.n_consumers *
           (basic_margin * s.basic + premium_margin * s.premium_only + video_margin * s.premium_video);
}

double vsp_profit(const DemandShares& s, const ConsumerPopulation& pop, const PriceVector& pr,
                  const CostVector& c) {
    return pop.n_consumers * (pr.p_video - c.c_vsp - pr.p_peering) * s.premium_video;
}

ProfitReport profits(const DemandShares& shares, const ConsumerPopulation& pop,
                     const PriceVector& prices, const CostVector& costs) {
    return {isp_profit(shares, pop, prices, costs), vsp_profit(shares, pop, prices, costs)};
}

}  // namespace peering
