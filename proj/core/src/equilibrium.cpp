#include "peering/equilibrium.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>

#include "peering/error.hpp"
#include "peering/optimize.hpp"
#include "peering/parallel.hpp"

namespace peering {

void MarketModel::validate() const {
    population.validate();
    costs.validate();
    if (!std::isfinite(p_video_base)) throw ValidationError("p_video_base must be finite");
    if (!(pass_through > 0.0 && pass_through <= 1.0))
        throw ValidationError("pass-through rate must lie in (0, 1]");
}

double isp_objective(const MarketModel& model, double p_basic, double p_premium_increment, double p_peering,
                     double quad_tolerance) {
    const PriceVector pr = model.prices(p_basic, p_premium_increment, p_peering);
    MarketQuadrature quad;
    quad.abs_tolerance = quad_tolerance;
    const DemandShares s = demand_shares(model.population, pr, quad);
    const CostVector& c = model.costs;
    const double basic_margin = pr.p_basic - c.c_basic;
    const double premium_margin = basic_margin + pr.p_premium_increment - c.c_premium_increment;
    const double video_margin = premium_margin + pr.p_peering - c.c_video_increment;
    return basic_margin * s.basic + premium_margin * s.premium_only + video_margin * s.premium_video;
}

namespace {

template <std::size_t N>
using Pt = optimize::Point<N>;

template <std::size_t N>
std::string describe(const Pt<N>& x) {
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < N; ++i) os << (i ? ", " : "") << x[i];
    os << ')';
    return os.str();
}

// Best nodes of a regular grid around `centre`, pairwise separated in max-norm.
template <std::size_t N, class F>
std::vector<Pt<N>> coarse_seeds(const F& f, const Pt<N>& centre, const OptimizerOptions& opt) {
    const int per_axis = static_cast<int>(std::floor(2 * opt.coarse_halfwidth / opt.coarse_step + 0.5)) + 1;
    std::size_t total = 1;
    for (std::size_t d = 0; d < N; ++d) total *= static_cast<std::size_t>(per_axis);

    std::vector<std::pair<double, Pt<N>>> nodes;
    nodes.reserve(total);
    for (std::size_t k = 0; k < total; ++k) {
        Pt<N> x{};
        std::size_t rem = k;
        for (std::size_t d = 0; d < N; ++d) {
            x[d] = centre[d] - opt.coarse_halfwidth + opt.coarse_step * static_cast<double>(rem % per_axis);
            rem /= per_axis;
        }
        nodes.emplace_back(f(x), x);
    }
    std::stable_sort(nodes.begin(), nodes.end(), [](const auto& a, const auto& b) { return a.first > b.first; });

    std::vector<Pt<N>> seeds;
    for (const auto& [value, x] : nodes) {
        if (seeds.size() >= opt.multistarts) break;
        const bool far = std::all_of(seeds.begin(), seeds.end(), [&](const Pt<N>& s) {
            double dist = 0.0;
            for (std::size_t d = 0; d < N; ++d) dist = std::max(dist, std::abs(s[d] - x[d]));
            return dist >= opt.seed_separation;
        });
        if (far) seeds.push_back(x);
    }
    return seeds;
}

template <std::size_t N>
std::vector<Pt<N>> warm_seeds(const Pt<N>& seed, const OptimizerOptions& opt) {
    std::vector<Pt<N>> seeds{seed};
    for (std::size_t d = 0; d < N; ++d)
        for (double sign : {-1.0, 1.0}) {
            Pt<N> x = seed;
            x[d] += sign * opt.warm_start_offset;
            seeds.push_back(x);
        }
    return seeds;
}

// Multistart maximization with agreement and neighbourhood certificates.
template <std::size_t N, class F>
optimize::MaximizeResult<N> certified_maximum(const F& fine, const std::vector<Pt<N>>& seeds,
                                              const OptimizerOptions& opt, std::string_view what) {
    std::vector<optimize::MaximizeResult<N>> runs;
    for (const auto& s : seeds) {
        optimize::SimplexOptions so;
        so.xtol = opt.simplex_xtol;
        runs.push_back(optimize::nelder_mead_maximize<N>(fine, s, so));
    }
    auto best = *std::max_element(runs.begin(), runs.end(),
                                  [](const auto& a, const auto& b) { return a.value < b.value; });
    for (const auto& r : runs) {
        double dist = 0.0;
        for (std::size_t d = 0; d < N; ++d) dist = std::max(dist, std::abs(r.x[d] - best.x[d]));
        const double gap = (best.value - r.value) / std::max(1e-12, std::abs(best.value));
        if (dist > opt.agreement_xtol || gap > opt.agreement_rel)
            throw ConvergenceError(std::string(what) + ": multistart runs disagree: best " + describe<N>(best.x) +
                                       " vs " + describe<N>(r.x),
                                   {gap, dist});
    }
    if (opt.polish) {
        auto p = optimize::newton_polish<N>(fine, best.x);
        if (p.value >= best.value) {
            p.evaluations += best.evaluations;
            best = p;
        }
    }

    // Every node of the surrounding 3^N grid must be no better than the answer.
    std::size_t total = 1;
    for (std::size_t d = 0; d < N; ++d) total *= 3;
    const double slack = 1e-9 * std::abs(best.value) + 1e-12;
    for (std::size_t k = 0; k < total; ++k) {
        Pt<N> x = best.x;
        std::size_t rem = k;
        for (std::size_t d = 0; d < N; ++d) {
            x[d] += opt.certificate_step * (static_cast<double>(rem % 3) - 1.0);
            rem /= 3;
        }
        if (fine(x) > best.value + slack)
            throw ConvergenceError(std::string(what) + ": neighbourhood certificate failed at " + describe<N>(x),
                                   {fine(x) - best.value});
    }
    return best;
}

double heuristic_centre(double cost, double mu, double sigma) { return 0.5 * (cost + mu + sigma); }

}  // namespace

IspOptimum maximize_isp_prices(const MarketModel& model, const OptimizerOptions& opts,
                               const std::optional<std::array<double, 3>>& seed) {
    model.validate();
    auto at = [&](double tol) {
        return [&model, tol](const Pt<3>& x) { return isp_objective(model, x[0], x[1], x[2], tol); };
    };
    const auto fine = at(opts.quad_tolerance);
    std::vector<Pt<3>> seeds;
    if (seed) {
        seeds = warm_seeds<3>(*seed, opts);
    } else {
        const auto& pop = model.population;
        const Pt<3> centre{heuristic_centre(model.costs.c_basic, pop.mu_basic, pop.sigma_basic),
                           heuristic_centre(model.costs.c_premium_increment, pop.mu_premium, pop.sigma_premium),
                           model.costs.c_video_increment};
        seeds = coarse_seeds<3>(at(opts.coarse_quad_tolerance), centre, opts);
    }
    const auto best = certified_maximum<3>(fine, seeds, opts, "ISP price optimization");
    return {best.x[0], best.x[1], best.x[2], best.value * model.population.n_consumers};
}

TierOptimum maximize_tier_prices_given_fee(const MarketModel& model, double p_peering, const OptimizerOptions& opts,
                                           const std::optional<std::array<double, 2>>& seed) {
    model.validate();
    if (!std::isfinite(p_peering)) throw ValidationError("peering fee must be finite");
    auto at = [&](double tol) {
        return [&model, p_peering, tol](const Pt<2>& x) { return isp_objective(model, x[0], x[1], p_peering, tol); };
    };
    const auto fine = at(opts.quad_tolerance);
    std::vector<Pt<2>> seeds;
    if (seed) {
        seeds = warm_seeds<2>(*seed, opts);
    } else {
        const auto& pop = model.population;
        const Pt<2> centre{heuristic_centre(model.costs.c_basic, pop.mu_basic, pop.sigma_basic),
                           heuristic_centre(model.costs.c_premium_increment, pop.mu_premium, pop.sigma_premium)};
        seeds = coarse_seeds<2>(at(opts.coarse_quad_tolerance), centre, opts);
    }
    const auto best = certified_maximum<2>(fine, seeds, opts, "tier price optimization");
    return {best.x[0], best.x[1], best.value * model.population.n_consumers};
}

EquilibriumPoint evaluate_point(const MarketModel& model, const PriceVector& prices, double quad_tolerance) {
    MarketQuadrature quad;
    quad.abs_tolerance = quad_tolerance;
    const MarketOutcome m = evaluate_market(model.population, prices, quad);
    return {prices, m.shares, m.surplus, peering::profits(m.shares, model.population, prices, model.costs)};
}

EquilibriumPoint tier_equilibrium(const MarketModel& model, double p_peering, const OptimizerOptions& opts,
                                  const std::optional<std::array<double, 2>>& seed) {
    const TierOptimum t = maximize_tier_prices_given_fee(model, p_peering, opts, seed);
    return evaluate_point(model, model.prices(t.p_basic, t.p_premium_increment, p_peering), opts.quad_tolerance);
}

RegulatorResult regulator_optimal_fee(const MarketModel& model, Interval range, const RegulatorOptions& opts) {
    model.validate();
    if (!(std::isfinite(range.lo) && std::isfinite(range.hi) && range.hi > range.lo))
        throw ValidationError("fee range must be a bounded, non-empty interval");
    if (!(opts.scan_step > 0)) throw ValidationError("scan step must be positive");

    // The inner problem is warm-started from the nearest solved fee, so the scan is sequential.
    std::vector<double> fees;
    const auto steps = static_cast<std::size_t>(std::ceil((range.hi - range.lo) / opts.scan_step - 1e-9));
    for (std::size_t i = 0; i <= steps; ++i) fees.push_back(std::min(range.hi, range.lo + opts.scan_step * i));

    std::vector<EquilibriumPoint> scan;
    std::optional<std::array<double, 2>> warm;
    for (double fee : fees) {
        scan.push_back(tier_equilibrium(model, fee, opts.inner, warm));
        warm = std::array<double, 2>{scan.back().prices.p_basic, scan.back().prices.p_premium_increment};
    }

    const double n = model.population.n_consumers;
    RegulatorResult out;
    for (std::size_t i = 0; i < fees.size(); ++i) out.cs_scan.emplace_back(fees[i], scan[i].surplus.total);

    const auto g = static_cast<std::size_t>(
        std::max_element(scan.begin(), scan.end(),
                         [](const auto& a, const auto& b) { return a.surplus.total < b.surplus.total; }) -
        scan.begin());
    const double tol = opts.unimodality_tolerance * n;
    for (std::size_t i = 0; i + 1 < scan.size(); ++i) {
        const double rise = scan[i + 1].surplus.total - scan[i].surplus.total;
        if ((i < g && rise < -tol) || (i >= g && rise > tol)) {
            std::ostringstream os;
            os << "consumer surplus is not unimodal in the peering fee: it "
               << (i < g ? "falls" : "rises") << " between " << fees[i] << " and " << fees[i + 1]
               << " while the maximum is at " << fees[g];
            throw ConvergenceError(os.str(), {rise / n});
        }
    }

    double lo = fees[g == 0 ? 0 : g - 1];
    double hi = fees[std::min(g + 1, fees.size() - 1)];
    const std::array<double, 2> seed{scan[g].prices.p_basic, scan[g].prices.p_premium_increment};
    auto cs_at = [&](double fee) { return tier_equilibrium(model, fee, opts.inner, seed); };

    if (hi - lo <= opts.resolution) {
        out.p_peering = fees[g];
        out.point = scan[g];
        return out;
    }
    constexpr double inv_phi = 0.6180339887498949;
    double a = hi - inv_phi * (hi - lo);
    double b = lo + inv_phi * (hi - lo);
    EquilibriumPoint pa = cs_at(a), pb = cs_at(b);
    while (hi - lo > opts.resolution) {
        if (pa.surplus.total >= pb.surplus.total) {
            hi = b;
            b = a;
            pb = pa;
            a = hi - inv_phi * (hi - lo);
            pa = cs_at(a);
        } else {
            lo = a;
            a = b;
            pa = pb;
            b = lo + inv_phi * (hi - lo);
            pb = cs_at(b);
        }
    }
    const EquilibriumPoint& best = pa.surplus.total >= pb.surplus.total ? pa : pb;
    if (best.surplus.total >= scan[g].surplus.total) {
        out.p_peering = best.prices.p_peering;
        out.point = best;
    } else {
        out.p_peering = fees[g];
        out.point = scan[g];
    }
    return out;
}

std::vector<FeeSweepPoint> sweep_fee(const MarketModel& model, const std::vector<double>& fee_grid,
                                     const SweepOptions& opts) {
    model.validate();
    if (!std::is_sorted(fee_grid.begin(), fee_grid.end())) throw ValidationError("fee grid must be sorted");
    std::vector<FeeSweepPoint> out(fee_grid.size());
    // Fixed chunks, each solved in order with warm starts; the chunking (not the
    // thread count) decides which seed a point gets.
    const std::size_t chain = std::max<std::size_t>(1, opts.warm_chain);
    const std::size_t chunks = (fee_grid.size() + chain - 1) / chain;
    std::atomic<std::size_t> done{0};
    for_each_index(chunks, opts.threads, [&](std::size_t c) {
        std::optional<std::array<double, 2>> warm;
        for (std::size_t i = c * chain; i < std::min(fee_grid.size(), (c + 1) * chain); ++i) {
            out[i].p_peering = fee_grid[i];
            try {
                out[i].point = tier_equilibrium(model, fee_grid[i], opts.optimizer, warm);
                warm = std::array<double, 2>{out[i].point->prices.p_basic, out[i].point->prices.p_premium_increment};
            } catch (const Error& e) {
                out[i].status = std::string("failed: ") + e.what();
                warm.reset();
            }
            const std::size_t n = ++done;
            if (opts.progress) opts.progress({"fee-sweep", n, fee_grid.size(), 0.0});
        }
    });
    return out;
}

}  // namespace peering
