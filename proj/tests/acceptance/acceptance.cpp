// Acceptance suite: one PASS/FAIL line per criterion, with the measured values
// underneath. Exits 1 if any selected criterion fails.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "peering/analysis.hpp"
#include "peering/calibration.hpp"
#include "peering/equilibrium.hpp"
#include "peering/error.hpp"
#include "peering/geo.hpp"
#include "peering/io/csv.hpp"
#include "peering/io/records.hpp"
#include "peering_oracles/oracles.hpp"

using namespace peering;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

class Criterion {
public:
    explicit Criterion(std::string title) : title_(std::move(title)) {}

    void check(bool ok, const std::string& what) {
        lines_.push_back(std::string(ok ? "    ok    " : "    FAIL  ") + what);
        pass_ = pass_ && ok;
    }
    void info(const std::string& what) { lines_.push_back("    info  " + what); }
    void fail(const std::string& what) { check(false, what); }

    bool passed() const { return pass_; }
    void print(double secs) const {
        std::cout << (pass_ ? "[PASS] " : "[FAIL] ") << title_ << " (" << std::fixed << std::setprecision(1)
                  << secs << " s)\n";
        for (const auto& l : lines_) std::cout << l << '\n';
        std::cout.flush();
    }

private:
    std::string title_;
    std::vector<std::string> lines_;
    bool pass_ = true;
};

std::string num(double v, int digits = 4) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(digits) << v;
    return os.str();
}

std::string near(const std::string& name, double got, double want, double tol, int digits = 4) {
    return name + " = " + num(got, digits) + " (want " + num(want, digits) + " +- " + num(tol, digits) + ")";
}

void expect_near(Criterion& c, const std::string& name, double got, double want, double tol, int digits = 4) {
    c.check(std::abs(got - want) <= tol, near(name, got, want, tol, digits));
}

const MarketTargets baseline_targets{};

// The calibrated market is shared by criteria 2, 3 and 5.
const CalibrationResult& baseline() {
    static const CalibrationResult r = calibrate(baseline_targets);
    return r;
}

OptimizerOptions tight() { return {}; }

// ---------------------------------------------------------------------------

void criterion_calibration(Criterion& c) {
    const auto t0 = Clock::now();
    const CalibrationResult r = calibrate(baseline_targets);
    const double secs = seconds_since(t0);
    expect_near(c, "mu_b", r.population.mu_basic, 56.12, 0.05);
    expect_near(c, "mu_p", r.population.mu_premium, 18.91, 0.05);
    expect_near(c, "mu_v", r.population.mu_video, 27.67, 0.05);
    expect_near(c, "C^b", r.costs.c_basic, 16.50, 0.05);
    expect_near(c, "C^p", r.costs.c_premium_increment, 19.00, 0.05);
    expect_near(c, "P^d", r.p_peering, 4.59, 0.05);
    double worst = 0;
    for (double x : r.residuals) worst = std::max(worst, std::abs(x));
    c.info("method " + r.method + ", max |residual| " + num(worst, 14));
    c.check(secs < 120, "runtime " + num(secs, 2) + " s < 120 s");
}

void criterion_price_effects(Criterion& c) {
    const MarketModel m = baseline().model();
    const auto zero = tier_equilibrium(m, 0.0, tight(), std::array<double, 2>{50, 24});
    const auto fee = tier_equilibrium(m, 4.59, tight(), std::array<double, 2>{50, 20});
    expect_near(c, "premium total at P^d=0", zero.prices.premium_total(), 73.98, 0.05);
    expect_near(c, "premium total at P^d=4.59", fee.prices.premium_total(), 70.00, 0.05);
    expect_near(c, "P^b at P^d=0", zero.prices.p_basic, 50.00, 0.10);
    expect_near(c, "P^b at P^d=4.59", fee.prices.p_basic, 50.00, 0.10);
    const double dv = fee.prices.p_video - zero.prices.p_video;
    c.check(std::abs(dv - 4.59) <= 1e-12, "P^v rises by " + num(dv, 12) + " (want 4.59 up to rounding)");
    const double isp = 100 * (fee.profits.isp / zero.profits.isp - 1);
    const double vsp = 100 * (fee.profits.vsp / zero.profits.vsp - 1);
    expect_near(c, "ISP profit change %", isp, 0.8, 0.1, 3);
    expect_near(c, "VSP profit change %", vsp, -18.0, 1.0, 3);
    c.info("video share " + num(zero.shares.premium_video) + " -> " + num(fee.shares.premium_video));
}

// Unimodal: rises (within tol) to the peak and falls (within tol) after it.
bool unimodal(const std::vector<double>& y, double tol) {
    if (y.empty()) return false;
    const std::size_t peak = static_cast<std::size_t>(std::max_element(y.begin(), y.end()) - y.begin());
    for (std::size_t i = 0; i + 1 <= peak; ++i)
        if (y[i + 1] < y[i] - tol) return false;
    for (std::size_t i = peak; i + 1 < y.size(); ++i)
        if (y[i + 1] > y[i] + tol) return false;
    return true;
}

void criterion_regulator(Criterion& c) {
    const MarketModel m = baseline().model();
    const double n = m.population.n_consumers;
    const IspOptimum isp =
        maximize_isp_prices(m, tight(), std::array<double, 3>{50, 20, baseline().p_peering});
    const auto at_isp = evaluate_point(m, m.prices(isp.p_basic, isp.p_premium_increment, isp.p_peering));
    const auto at_zero = tier_equilibrium(m, 0.0, tight(), std::array<double, 2>{50, 24});
    const RegulatorResult reg = regulator_optimal_fee(m, {-2.0, 8.0});
    expect_near(c, "P^d_CS", reg.p_peering, 2.34, 0.05);
    const double vs_isp = reg.point.surplus.total - at_isp.surplus.total;
    const double vs_zero = reg.point.surplus.total - at_zero.surplus.total;
    expect_near(c, "CS(P^d_CS) - CS(P^d_ISP) [$M]", vs_isp / 1e6, 1.65, 0.05, 3);
    expect_near(c, "CS(P^d_CS) - CS(0) [$M]", vs_zero / 1e6, 1.33, 0.05, 3);
    c.info("per consumer: " + num(vs_isp / n, 5) + " vs ISP fee, " + num(vs_zero / n, 5) +
           " vs zero fee; implied consumer counts " + num(1.65e6 / (vs_isp / n), 0) + " and " +
           num(1.33e6 / (vs_zero / n), 0));
    c.info("P^d_ISP = " + num(isp.p_peering));

    std::vector<double> grid;
    for (int i = 0; i <= 200; ++i) grid.push_back(-2.0 + 0.05 * i);
    const auto sweep = sweep_fee(m, grid);
    std::vector<double> cs;
    std::size_t failed = 0;
    for (const auto& p : sweep) {
        if (p.point) cs.push_back(p.point->surplus.total / n);
        else ++failed;
    }
    c.check(failed == 0, std::to_string(failed) + " of " + std::to_string(grid.size()) + " fee points failed");
    const std::size_t peak = static_cast<std::size_t>(std::max_element(cs.begin(), cs.end()) - cs.begin());
    c.check(failed == 0 && unimodal(cs, 1e-6),
            "CS curve unimodal on [-2, 8] at 0.05 (peak at " + num(grid[std::min(peak, grid.size() - 1)], 2) + ")");
}

void criterion_cd_sweep(Criterion& c) {
    std::vector<double> grid;
    for (int i = 0; i <= 8; ++i) grid.push_back(-1.12 + (3.00 + 1.12) * i / 8.0);
    grid.back() = 3.00;
    SweepOptions opts;
    opts.fee_range = {-4.0, 5.0};
    opts.regulator.scan_step = 0.5;
    const auto rows = sweep_cd(baseline_targets, grid, opts);

    std::vector<double> cd, isp, cs_fee, gain;
    for (const auto& r : rows) {
        if (r.status != "ok") {
            c.fail("C^d = " + num(r.c_video_increment, 3) + ": " + r.status);
            continue;
        }
        cd.push_back(r.c_video_increment);
        isp.push_back(r.p_peering_isp);
        cs_fee.push_back(r.p_peering_cs);
        gain.push_back(r.incremental_cs);
        c.info("C^d " + num(r.c_video_increment, 3) + ": P^d_ISP " + num(r.p_peering_isp) + ", P^d_CS " +
               num(r.p_peering_cs) + ", video share " + num(r.at_cs->shares.premium_video) + ", incremental CS " +
               num(r.incremental_cs / 1e6, 4) + "M");
    }
    if (rows.front().status != "ok" || rows.back().status != "ok") return;
    const auto& lo = rows.front();
    const auto& hi = rows.back();
    expect_near(c, "P^d_ISP at C^d=-1.12", lo.p_peering_isp, 0.00, 0.05);
    expect_near(c, "P^d_ISP at C^d=3.00", hi.p_peering_isp, 4.59, 0.05);
    expect_near(c, "P^d_CS at C^d=-1.12", lo.p_peering_cs, -1.80, 0.05);
    expect_near(c, "P^d_CS at C^d=3.00", hi.p_peering_cs, 2.34, 0.05);
    const auto zero = analysis::zero_crossing(cd, cs_fee);
    if (zero) expect_near(c, "P^d_CS zero crossing at C^d", *zero, 0.68, 0.05);
    else c.fail("P^d_CS never crosses zero");
    expect_near(c, "video share at P^d_CS, C^d=3.00 [%]", 100 * hi.at_cs->shares.premium_video, 42.6, 0.3, 2);
    expect_near(c, "video share at P^d_CS, C^d=-1.12 [%]", 100 * lo.at_cs->shares.premium_video, 42.3, 0.3, 2);
    const double r2_isp = analysis::linear_fit(cd, isp).r_squared;
    const double r2_cs = analysis::linear_fit(cd, cs_fee).r_squared;
    c.check(r2_isp > 0.99, "R^2 of P^d_ISP vs C^d = " + num(r2_isp, 5) + " > 0.99");
    c.check(r2_cs > 0.99, "R^2 of P^d_CS vs C^d = " + num(r2_cs, 5) + " > 0.99");
    expect_near(c, "incremental CS at C^d=-1.12 [$M]", lo.incremental_cs / 1e6, 1.02, 0.05, 3);
    expect_near(c, "incremental CS at C^d=3.00 [$M]", hi.incremental_cs / 1e6, 1.63, 0.05, 3);
    const double n = baseline_targets.n_consumers;
    c.info("implied consumer counts " + num(1.02e6 / (lo.incremental_cs / n), 0) + " and " +
           num(1.63e6 / (hi.incremental_cs / n), 0));
}

void criterion_oracles(Criterion& c) {
    const auto t0 = Clock::now();
    const MarketModel m = baseline().model();
    std::mt19937_64 rng(20140601);
    std::uniform_real_distribution<double> pb(40, 60), pp(10, 30), pd(-5, 10);
    std::size_t comparisons = 0, misses = 0;
    double worst = 0;
    for (int i = 0; i < 20; ++i) {
        const PriceVector prices = m.prices(pb(rng), pp(rng), pd(rng));
        const auto quad = evaluate_market(m.population, prices, MarketQuadrature{1e-12});
        const auto mc = oracles::sample_market(m.population, prices, 10'000'000, 1000 + i);
        const double n = m.population.n_consumers;
        const std::pair<double, oracles::Estimate> pairs[] = {
            {quad.shares.basic, mc.share_basic},
            {quad.shares.premium_only, mc.share_premium_only},
            {quad.shares.premium_video, mc.share_premium_video},
            {quad.surplus.basic / n, mc.cs_basic},
            {quad.surplus.premium_only / n, mc.cs_premium_only},
            {quad.surplus.premium_video / n, mc.cs_premium_video},
            {quad.surplus.total / n, mc.cs_total}};
        for (const auto& [q, e] : pairs) {
            ++comparisons;
            const double z = e.se > 0 ? std::abs(q - e.mean) / e.se : (q == e.mean ? 0.0 : INFINITY);
            worst = std::max(worst, z);
            if (!oracles::within(q, e, 3.0)) ++misses;
        }
    }
    c.check(misses == 0, std::to_string(comparisons - misses) + " of " + std::to_string(comparisons) +
                             " quadrature values within 3 SE of 1e7-sample Monte Carlo at 20 price points (max " +
                             num(worst, 2) + " SE)");

    std::mt19937_64 prng(7);
    std::uniform_real_distribution<double> scale(0.9, 1.1), shift(-1, 1);
    int dominated = 0;
    for (int s = 0; s < 5; ++s) {
        MarketModel p = m;
        p.population.mu_basic *= scale(prng);
        p.population.mu_premium *= scale(prng);
        p.population.mu_video *= scale(prng);
        p.population.sigma_basic = p.population.mu_basic / 4;
        p.population.sigma_premium = p.population.mu_premium / 4;
        p.population.sigma_video = p.population.mu_video / 4;
        p.costs.c_basic *= scale(prng);
        p.costs.c_premium_increment *= scale(prng);
        p.costs.c_video_increment += shift(prng);
        try {
            const IspOptimum opt = maximize_isp_prices(p);
            const auto g = oracles::isp_grid_check(p, {opt.p_basic, opt.p_premium_increment, opt.p_peering}, 20,
                                                   0.25, 1e-6);
            dominated += g.dominated();
            c.info("scenario " + std::to_string(s + 1) + ": optimum (" + num(opt.p_basic, 3) + ", " +
                   num(opt.p_premium_increment, 3) + ", " + num(opt.p_peering, 3) + ") value " +
                   num(g.optimum_value, 6) + " vs best of " + std::to_string(g.nodes) + " grid nodes " +
                   num(g.best_node_value, 6));
        } catch (const Error& e) {
            c.info("scenario " + std::to_string(s + 1) + ": " + e.what());
        }
    }
    c.check(dominated == 5, std::to_string(dominated) + " of 5 randomized scenarios: optimizer dominates the grid");
    const double secs = seconds_since(t0);
    c.check(secs < 600, "runtime " + num(secs, 1) + " s < 600 s");
}

void criterion_geo(Criterion& c) {
    const auto t0 = Clock::now();
    const auto topo = geo::Topology::build(io::load_counties(PEERING_SOURCE_DIR "/data/us_counties_approx.csv"),
                                           io::load_ixps(PEERING_SOURCE_DIR "/data/ixps_default.csv"));
    const std::size_t m = topo.ixp_count();
    std::vector<double> ns, hot, cold;
    for (std::size_t k = 1; k <= m; ++k) {
        const auto a = geo::PeeringAgreement::top_ranked(topo, k);
        ns.push_back(static_cast<double>(k));
        hot.push_back(geo::expected_backbone_hot(topo, a));
        cold.push_back(geo::expected_backbone_cold(topo, a));
    }
    const geo::TrafficCostParams unit;
    auto cost = [&](std::size_t k, double x) { return geo::partial_replication_cost(hot[k - 1], cold[k - 1], {x}, unit); };

    std::size_t argmin = 1;
    for (std::size_t k = 2; k <= m; ++k)
        if (cost(k, 0.0) < cost(argmin, 0.0)) argmin = k;
    c.check(argmin == 1, "x=0 cost minimized at N=" + std::to_string(argmin) + " (want 1)");

    bool non_increasing = true;
    for (std::size_t k = 2; k <= m; ++k) non_increasing = non_increasing && cost(k, 1.0) <= cost(k - 1, 1.0);
    c.check(non_increasing, "x=1 cost non-increasing in N");
    if (m >= 9) {
        const double rel = (cost(9, 1.0) - cost(m, 1.0)) / cost(9, 1.0);
        c.check(rel < 0.02, "(cost(9) - cost(12)) / cost(9) at x=1 = " + num(100 * rel, 2) + "% < 2%");
    }
    const auto flip = analysis::slope_flip_fraction(ns, hot, cold);
    if (flip) c.check(*flip >= 0.25 && *flip <= 0.35, "slope of cost vs N changes sign at x = " + num(*flip, 3) +
                                                           " (want [0.25, 0.35])");
    else c.fail("slope of cost vs N keeps its sign on [0, 1]");
    c.check(cold.back() == 0.0, "ED cold at N=12 = " + num(cold.back(), 17) + " (want 0 exactly)");

    std::size_t comparisons = 0, misses = 0;
    double worst = 0;
    auto compare = [&](double exact, const oracles::Estimate& e) {
        ++comparisons;
        const double z = e.se > 0 ? std::abs(exact - e.mean) / e.se : (exact == e.mean ? 0.0 : INFINITY);
        worst = std::max(worst, z);
        misses += !oracles::within(exact, e, 3.0);
    };
    for (std::size_t k = 1; k <= m; ++k) {
        const auto a = geo::PeeringAgreement::top_ranked(topo, k);
        const auto mc = oracles::sample_distances(topo, a, 1'000'000, 500 + k);
        compare(hot[k - 1], mc.backbone_hot);
        compare(cold[k - 1], mc.backbone_cold);
        if (k == 1) {
            compare(geo::expected_middle_mile(topo), mc.middle);
            compare(geo::expected_access(topo), mc.access);
        }
    }
    c.check(misses == 0, std::to_string(comparisons - misses) + " of " + std::to_string(comparisons) +
                             " expected distances within 3 SE of 1e6-sample Monte Carlo (max " + num(worst, 2) +
                             " SE)");
    std::ostringstream costs;
    for (double x : {0.0, 0.3, 1.0}) {
        costs << "x=" << x << ":";
        for (std::size_t k = 1; k <= m; ++k) costs << ' ' << std::fixed << std::setprecision(1) << cost(k, x);
        costs << "  ";
    }
    c.info(costs.str());
    const double secs = seconds_since(t0);
    c.check(secs < 300, "runtime " + num(secs, 1) + " s < 300 s");
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(PEERING_CLI_EXE) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void criterion_determinism(Criterion& c) {
    const std::string scenario = PEERING_SOURCE_DIR "/data/scenarios/smoke.yaml";
    const fs::path root = fs::temp_directory_path() / "peering_acceptance_determinism";
    fs::remove_all(root);
    for (const char* sub : {"calibrate", "fee-sweep", "cs-opt", "cd-sweep", "geo-sweep", "oracle-check"}) {
        const fs::path a = root / sub / "a", b = root / sub / "b";
        const int ca = run_cli(std::string(sub) + " --quiet --scenario " + scenario + " --out " + a.string());
        const int cb = run_cli(std::string(sub) + " --quiet --threads 2 --scenario " + scenario + " --out " +
                               b.string());
        std::size_t files = 0, same = 0;
        if (fs::exists(a))
            for (const auto& entry : fs::directory_iterator(a)) {
                const auto name = entry.path().filename().string();
                if (name == "manifest.json") continue;
                ++files;
                same += fs::exists(b / name) && io::read_file(entry.path().string()) == io::read_file((b / name).string());
            }
        c.check(ca == cb && files > 0 && same == files,
                std::string(sub) + ": " + std::to_string(same) + " of " + std::to_string(files) +
                    " output files byte-identical across two runs (exit codes " + std::to_string(ca) + ", " +
                    std::to_string(cb) + ")");
    }
    fs::remove_all(root);
}

}  // namespace

int main(int argc, char** argv) {
    const std::pair<const char*, std::function<void(Criterion&)>> criteria[] = {
        {"1 calibration regression", criterion_calibration},
        {"2 price effects of the peering fee", criterion_price_effects},
        {"3 regulator optimum", criterion_regulator},
        {"4 incremental cost sweep", criterion_cd_sweep},
        {"5 oracle equivalence", criterion_oracles},
        {"6 geographic shape properties", criterion_geo},
        {"7 determinism", criterion_determinism},
    };
    // Optional arguments pick criteria by number; the default runs all of them.
    std::vector<std::size_t> selected;
    for (int i = 1; i < argc; ++i) {
        const int k = std::atoi(argv[i]);
        if (k < 1 || k > static_cast<int>(std::size(criteria))) {
            std::cerr << "usage: acceptance [criterion number...]\n";
            return 64;
        }
        selected.push_back(static_cast<std::size_t>(k - 1));
    }
    if (selected.empty())
        for (std::size_t i = 0; i < std::size(criteria); ++i) selected.push_back(i);

    std::size_t passed = 0;
    for (std::size_t i : selected) {
        const auto& [title, fn] = criteria[i];
        Criterion c(title);
        const auto t0 = Clock::now();
        try {
            fn(c);
        } catch (const std::exception& e) {
            c.fail(std::string("error: ") + e.what());
        }
        c.print(seconds_since(t0));
        passed += c.passed();
    }
    std::cout << passed << " of " << selected.size() << " criteria passed\n";
    return passed == selected.size() ? 0 : 1;
}
