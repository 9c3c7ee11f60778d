#pragma once

#include <array>
#include <string>
#include <vector>

#include "peering/equilibrium.hpp"

namespace peering {

/// Observed market used to back out utilities and costs: the prices the ISP is
/// seen to charge, the shares it is seen to sell, and the given video inputs.
struct MarketTargets {
    double target_p_basic = 50.0;
    double target_p_premium_increment = 20.0;
    double target_share_basic = 0.25;
    double target_share_premium_only = 0.125;
    double target_share_premium_video = 0.375;
    double given_c_video_increment = 3.0;
    double given_p_video_base = 21.58;
    double given_pass_through = 1.0;
    double sigma_ratio = 0.25;
    double n_consumers = 1e6;
    double c_vsp = 10.0;

    void validate() const;
};

struct CalibrationOptions {
    double quad_tolerance = 1e-12;
    double gradient_step = 1e-3;   // for the first-order conditions
    double jacobian_step = 1e-4;
    double residual_tolerance = 1e-9;
    int max_iterations = 60;
    double max_condition = 1e12;   // beyond this the joint Jacobian is treated as singular
};

struct CalibrationResult {
    ConsumerPopulation population;
    CostVector costs;
    double p_peering = 0.0;
    double p_video_base = 0.0;
    double pass_through = 1.0;
    /// share_basic, share_premium_only, share_premium_video, then d(profit)/dP^b,
    /// d/dP^p, d/dP^d per consumer, all at the target prices.
    std::array<double, 6> residuals{};
    int iterations = 0;
    std::string method;  // "joint-newton" or "nested"

    MarketModel model() const { return {population, costs, p_video_base, pass_through}; }
};

/// Solves for (mu_b, mu_p, mu_v, C^b, C^p, P^d) such that the target prices and
/// fee are the ISP's optimum and produce the target shares. Sigmas are
/// sigma_ratio times the means. Throws ConvergenceError with the residual vector
/// if neither the joint Newton solve nor the nested fallback converges.
CalibrationResult calibrate(const MarketTargets& targets, const CalibrationOptions& opts = {});

/// Calibration residuals at a trial parameter vector (mu_b, mu_p, mu_v, C^b, C^p, P^d).
std::array<double, 6> calibration_residuals(const MarketTargets& targets, const std::array<double, 6>& theta,
                                            const CalibrationOptions& opts = {});

struct CdSweepRow {
    double c_video_increment = 0.0;
    std::optional<CalibrationResult> calibration;
    double p_peering_isp = 0.0;
    double p_peering_cs = 0.0;
    std::optional<EquilibriumPoint> at_isp;
    std::optional<EquilibriumPoint> at_cs;
    double incremental_cs = 0.0;  // CS(P^d_CS) - CS(P^d_ISP)
    std::string status = "ok";
};

/// Recalibrates at every C^d, then finds the ISP's and the regulator's fees.
/// Rows whose calibration or optimization fails carry the error in `status`.
std::vector<CdSweepRow> sweep_cd(const MarketTargets& targets, const std::vector<double>& cd_grid,
                                 const SweepOptions& opts = {}, const CalibrationOptions& calib = {});

}  // namespace peering
