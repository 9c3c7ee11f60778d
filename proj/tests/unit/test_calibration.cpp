#include <doctest.h>

#include <cmath>

#include "peering/calibration.hpp"
#include "peering/error.hpp"

using namespace peering;

TEST_CASE("calibration solves the six equations") {
    const auto c = calibrate(MarketTargets{});
    for (double r : c.residuals) CHECK(std::abs(r) < 1e-9);
    CHECK(c.population.mu_basic == doctest::Approx(56.12).epsilon(0.05 / 56));
    CHECK(c.population.mu_premium == doctest::Approx(18.91).epsilon(0.05 / 18));
    CHECK(c.costs.c_basic == doctest::Approx(16.50).epsilon(0.05 / 16));
    CHECK(c.costs.c_premium_increment == doctest::Approx(19.00).epsilon(0.05 / 19));
    CHECK(c.p_peering == doctest::Approx(4.59).epsilon(0.05 / 4.5));
    CHECK(c.population.sigma_video == doctest::Approx(c.population.mu_video / 4));
    CHECK(c.population.n_consumers == 1e6);
}

TEST_CASE("calibrated parameters reproduce the targets") {
    const MarketTargets t;
    const auto c = calibrate(t);
    const auto m = c.model();
    const auto s = demand_shares(m.population, m.prices(t.target_p_basic, t.target_p_premium_increment, c.p_peering));
    CHECK(std::abs(s.basic - 0.25) < 1e-4);
    CHECK(std::abs(s.premium_only - 0.125) < 1e-4);
    CHECK(std::abs(s.premium_video - 0.375) < 1e-4);

    const auto isp = maximize_isp_prices(m, {}, std::array<double, 3>{t.target_p_basic, t.target_p_premium_increment,
                                                                      c.p_peering});
    CHECK(std::abs(isp.p_basic - 50) < 0.01);
    CHECK(std::abs(isp.p_premium_increment - 20) < 0.01);
    CHECK(std::abs(isp.p_peering - c.p_peering) < 0.01);
}

TEST_CASE("lower video cost gives a zero fee") {
    MarketTargets t;
    t.given_c_video_increment = -1.12;
    const auto c = calibrate(t);
    CHECK(std::abs(c.p_peering) < 0.05);
}

TEST_CASE("residuals vanish only at the solution") {
    const MarketTargets t;
    const auto c = calibrate(t);
    std::array<double, 6> th{c.population.mu_basic, c.population.mu_premium, c.population.mu_video,
                             c.costs.c_basic,       c.costs.c_premium_increment, c.p_peering};
    th[2] += 0.5;
    const auto r = calibration_residuals(t, th);
    CHECK(std::abs(r[2]) > 1e-3);
}

TEST_CASE("inconsistent targets are rejected before solving") {
    MarketTargets t;
    t.target_share_basic = 0.5;
    t.target_share_premium_only = 0.3;
    t.target_share_premium_video = 0.4;
    CHECK_THROWS_WITH_AS(calibrate(t), doctest::Contains("sum to 1.2"), ValidationError);
    t = MarketTargets{};
    t.target_p_basic = -1;
    CHECK_THROWS_AS(calibrate(t), ValidationError);
    t = MarketTargets{};
    t.given_pass_through = 0;
    CHECK_THROWS_AS(calibrate(t), ValidationError);
}

TEST_CASE("sweep_cd marks points that cannot be calibrated") {
    SweepOptions o;
    o.fee_range = {-3, 3};
    o.regulator.scan_step = 1.0;
    CalibrationOptions tight;
    tight.max_iterations = 1;
    const auto rows = sweep_cd(MarketTargets{}, {3.0}, o, tight);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].status.rfind("failed", 0) == 0);
    CHECK_FALSE(rows[0].calibration);
}
