#include "peering/calibration.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "peering/error.hpp"
#include "peering/parallel.hpp"

namespace peering {

void MarketTargets::validate() const {
    const double all[] = {target_p_basic,           target_p_premium_increment, target_share_basic,
                          target_share_premium_only, target_share_premium_video, given_c_video_increment,
                          given_p_video_base,        given_pass_through,         sigma_ratio,
                          n_consumers,               c_vsp};
    for (double x : all)
        if (!std::isfinite(x)) throw ValidationError("calibration targets must be finite");
    if (!(target_p_basic > 0 && target_p_premium_increment > 0))
        throw ValidationError("target prices must be positive");
    for (double s : {target_share_basic, target_share_premium_only, target_share_premium_video})
        if (!(s > 0 && s < 1)) throw ValidationError("target shares must lie in (0, 1)");
    const double sum = target_share_basic + target_share_premium_only + target_share_premium_video;
    if (!(sum < 1)) {
        std::ostringstream os;
        os << "target shares sum to " << sum << "; they must sum to less than 1";
        throw ValidationError(os.str());
    }
    if (!(given_pass_through > 0 && given_pass_through <= 1))
        throw ValidationError("pass-through rate must lie in (0, 1]");
    if (!(sigma_ratio > 0)) throw ValidationError("sigma_ratio must be positive");
    if (!(n_consumers > 0)) throw ValidationError("n_consumers must be positive");
    if (!(c_vsp >= 0)) throw ValidationError("c_vsp must be non-negative");
}

namespace {

using Vec = Eigen::VectorXd;

struct Trial {
    MarketModel model;
    PriceVector prices;
};

Trial trial(const MarketTargets& t, const std::array<double, 6>& th) {
    Trial out;
    // Per-consumer units throughout the solve; n is applied to the result only.
    out.model.population = ConsumerPopulation::from_means(th[0], th[1], th[2], 1.0, t.sigma_ratio);
    out.model.costs = {th[3], th[4], t.given_c_video_increment, t.c_vsp};
    out.model.p_video_base = t.given_p_video_base;
    out.model.pass_through = t.given_pass_through;
    out.prices = out.model.prices(t.target_p_basic, t.target_p_premium_increment, th[5]);
    return out;
}

std::array<double, 3> share_residuals(const MarketTargets& t, const std::array<double, 6>& th, double tol) {
    const Trial tr = trial(t, th);
    MarketQuadrature q;
    q.abs_tolerance = tol;
    const DemandShares s = demand_shares(tr.model.population, tr.prices, q);
    return {s.basic - t.target_share_basic, s.premium_only - t.target_share_premium_only,
            s.premium_video - t.target_share_premium_video};
}

std::array<double, 3> foc_residuals(const MarketTargets& t, const std::array<double, 6>& th,
                                    const CalibrationOptions& o) {
    const Trial tr = trial(t, th);
    const double h = o.gradient_step;
    const double x[3] = {t.target_p_basic, t.target_p_premium_increment, th[5]};
    std::array<double, 3> g{};
    for (int i = 0; i < 3; ++i) {
        double up[3] = {x[0], x[1], x[2]}, dn[3] = {x[0], x[1], x[2]};
        up[i] += h;
        dn[i] -= h;
        g[i] = (isp_objective(tr.model, up[0], up[1], up[2], o.quad_tolerance) -
                isp_objective(tr.model, dn[0], dn[1], dn[2], o.quad_tolerance)) /
               (2 * h);
    }
    return g;
}

bool physical(const std::array<double, 6>& th) {
    return th[0] > 0 && th[1] > 0 && th[2] > 0 && th[3] >= 0 && th[4] >= 0;
}

double inf_norm(const Vec& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

struct NewtonOutcome {
    Vec x;
    Vec f;
    int iterations = 0;
    bool converged = false;
    bool singular = false;
};

// Damped Newton with a forward-difference Jacobian and backtracking on ||F||inf.
template <class F, class Admissible>
NewtonOutcome damped_newton(const F& residual, const Admissible& admissible, Vec x, const CalibrationOptions& o) {
    NewtonOutcome out;
    Vec f = residual(x);
    const auto n = x.size();
    for (int it = 0; it < o.max_iterations; ++it) {
        out.iterations = it;
        if (inf_norm(f) <= o.residual_tolerance) {
            out.converged = true;
            break;
        }
        Eigen::MatrixXd jac(f.size(), n);
        for (Eigen::Index j = 0; j < n; ++j) {
            Vec y = x;
            const double h = o.jacobian_step * std::max(1.0, std::abs(x[j]));
            y[j] += h;
            jac.col(j) = (residual(y) - f) / h;
        }
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(jac);
        const auto& sv = svd.singularValues();
        if (!(sv(sv.size() - 1) > 0) || sv(0) / sv(sv.size() - 1) > o.max_condition) {
            out.singular = true;
            break;
        }
        const Vec step = jac.colPivHouseholderQr().solve(-f);
        double lambda = 1.0;
        bool accepted = false;
        for (int k = 0; k < 30; ++k, lambda *= 0.5) {
            const Vec y = x + lambda * step;
            if (!admissible(y)) continue;
            const Vec fy = residual(y);
            if (inf_norm(fy) < inf_norm(f)) {
                x = y;
                f = fy;
                accepted = true;
                break;
            }
        }
        if (!accepted) break;
        out.iterations = it + 1;
    }
    if (inf_norm(f) <= o.residual_tolerance) out.converged = true;
    out.x = x;
    out.f = f;
    return out;
}

std::array<double, 6> to_array(const Vec& v) { return {v[0], v[1], v[2], v[3], v[4], v[5]}; }

std::array<double, 6> initial_guess(const MarketTargets& t) {
    const double pb = t.target_p_basic, pp = t.target_p_premium_increment;
    const double pd = t.given_c_video_increment + 1.5;
    return {1.1 * pb, pp, t.given_p_video_base + t.given_pass_through * pd + 2.0, pb / 3.0, 0.95 * pp, pd};
}

CalibrationResult finish(const MarketTargets& t, const std::array<double, 6>& th, const std::array<double, 6>& res,
                         int iterations, std::string method) {
    CalibrationResult r;
    r.population = ConsumerPopulation::from_means(th[0], th[1], th[2], t.n_consumers, t.sigma_ratio);
    r.costs = {th[3], th[4], t.given_c_video_increment, t.c_vsp};
    r.p_peering = th[5];
    r.p_video_base = t.given_p_video_base;
    r.pass_through = t.given_pass_through;
    r.residuals = res;
    r.iterations = iterations;
    r.method = std::move(method);
    return r;
}

}  // namespace

std::array<double, 6> calibration_residuals(const MarketTargets& t, const std::array<double, 6>& th,
                                            const CalibrationOptions& o) {
    const auto s = share_residuals(t, th, o.quad_tolerance);
    const auto g = foc_residuals(t, th, o);
    return {s[0], s[1], s[2], g[0], g[1], g[2]};
}

CalibrationResult calibrate(const MarketTargets& t, const CalibrationOptions& o) {
    t.validate();
    const auto guess = initial_guess(t);

    auto joint = [&](const Vec& x) {
        const auto r = calibration_residuals(t, to_array(x), o);
        return Vec(Eigen::Map<const Vec>(r.data(), 6));
    };
    auto joint_ok = [](const Vec& x) { return physical(to_array(x)); };
    const auto first = damped_newton(joint, joint_ok, Eigen::Map<const Vec>(guess.data(), 6), o);
    if (first.converged) return finish(t, to_array(first.x), calibration_residuals(t, to_array(first.x), o),
                                       first.iterations, "joint-newton");

    // Nested fallback: the means follow from the shares for each trial (C^b, C^p, P^d).
    Vec mu = Eigen::Map<const Vec>(guess.data(), 3);
    int inner_total = 0;
    auto means_for = [&](const Vec& outer) {
        auto shares = [&](const Vec& m) {
            const auto r = share_residuals(t, {m[0], m[1], m[2], outer[0], outer[1], outer[2]}, o.quad_tolerance);
            return Vec(Eigen::Map<const Vec>(r.data(), 3));
        };
        auto positive = [](const Vec& m) { return (m.array() > 0).all(); };
        const auto in = damped_newton(shares, positive, mu, o);
        inner_total += in.iterations;
        if (!in.converged) {
            std::ostringstream os;
            os << "calibration: inner share fit did not converge at C^b=" << outer[0] << ", C^p=" << outer[1]
               << ", P^d=" << outer[2];
            throw ConvergenceError(os.str(), {in.f.data(), in.f.data() + in.f.size()});
        }
        mu = in.x;
        return in.x;
    };
    auto focs = [&](const Vec& outer) {
        const Vec m = means_for(outer);
        const auto g = foc_residuals(t, {m[0], m[1], m[2], outer[0], outer[1], outer[2]}, o);
        return Vec(Eigen::Map<const Vec>(g.data(), 3));
    };
    auto costs_ok = [](const Vec& outer) { return outer[0] >= 0 && outer[1] >= 0; };

    const Vec start = first.singular || !physical(to_array(first.x))
                          ? Vec(Eigen::Map<const Vec>(guess.data() + 3, 3))
                          : Vec(first.x.tail(3));
    try {
        const auto second = damped_newton(focs, costs_ok, start, o);
        const Vec m = means_for(second.x);
        const std::array<double, 6> th{m[0], m[1], m[2], second.x[0], second.x[1], second.x[2]};
        const auto res = calibration_residuals(t, th, o);
        if (second.converged && std::all_of(res.begin(), res.end(), [&](double r) {
                return std::abs(r) <= 10 * o.residual_tolerance;
            }))
            return finish(t, th, res, first.iterations + second.iterations + inner_total, "nested");
    } catch (const ConvergenceError&) {
        // fall through to the report below
    }

    const std::vector<double> res(first.f.data(), first.f.data() + first.f.size());
    std::ostringstream os;
    os << "calibration did not converge (C^d=" << t.given_c_video_increment << "); residuals:";
    for (double r : res) os << ' ' << r;
    throw ConvergenceError(os.str(), res);
}

std::vector<CdSweepRow> sweep_cd(const MarketTargets& targets, const std::vector<double>& cd_grid,
                                 const SweepOptions& opts, const CalibrationOptions& calib) {
    targets.validate();
    std::vector<CdSweepRow> rows(cd_grid.size());
    for_each_index(cd_grid.size(), opts.threads, [&](std::size_t i) {
        CdSweepRow& row = rows[i];
        row.c_video_increment = cd_grid[i];
        try {
            MarketTargets t = targets;
            t.given_c_video_increment = cd_grid[i];
            row.calibration = calibrate(t, calib);
            const MarketModel model = row.calibration->model();
            const IspOptimum isp = maximize_isp_prices(
                model, opts.optimizer,
                std::array<double, 3>{t.target_p_basic, t.target_p_premium_increment, row.calibration->p_peering});
            row.p_peering_isp = isp.p_peering;
            row.at_isp = evaluate_point(model, model.prices(isp.p_basic, isp.p_premium_increment, isp.p_peering),
                                        opts.optimizer.quad_tolerance);
            const RegulatorResult reg = regulator_optimal_fee(model, opts.fee_range, opts.regulator);
            row.p_peering_cs = reg.p_peering;
            row.at_cs = reg.point;
            row.incremental_cs = reg.point.surplus.total - row.at_isp->surplus.total;
        } catch (const Error& e) {
            row.status = std::string("failed: ") + e.what();
        }
        if (opts.progress) {
            double worst = 0.0;
            if (row.calibration)
                for (double r : row.calibration->residuals) worst = std::max(worst, std::abs(r));
            opts.progress({"cd-sweep", i + 1, cd_grid.size(), worst});
        }
    });
    return rows;
}

}  // namespace peering
