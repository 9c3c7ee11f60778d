#include "peering_cli/commands.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <mutex>
#include <ostream>
#include <random>
#include <sstream>

#include "peering/analysis.hpp"
#include "peering/calibration.hpp"
#include "peering/error.hpp"
#include "peering/geo.hpp"
#include "peering/io/records.hpp"
#include "peering/io/result_table.hpp"
#include "peering_oracles/oracles.hpp"

namespace peering::cli {

namespace fs = std::filesystem;
using io::Cell;
using io::Column;
using io::ColumnType;
using io::ResultTable;

namespace {

constexpr double nan = std::numeric_limits<double>::quiet_NaN();

struct Context {
    const io::Scenario& sc;
    const RunOptions& opts;
    RunResult& result;
    std::mutex progress_mutex;

    std::ostream& report() {
        static std::ostringstream sink;
        return opts.report ? *opts.report : sink;
    }

    ProgressSink progress_sink() {
        if (!opts.progress) return {};
        return [this](const ProgressEvent& e) {
            std::lock_guard lock(progress_mutex);
            *opts.progress << e.stage << ' ' << e.index << '/' << e.total;
            if (e.residual != 0.0) *opts.progress << " residual=" << e.residual;
            *opts.progress << '\n';
        };
    }

    void note(std::string_view what) {
        if (opts.progress) {
            std::lock_guard lock(progress_mutex);
            *opts.progress << what << '\n';
        }
    }

    ResultTable table(std::string experiment, std::vector<Column> cols) const {
        return ResultTable(std::move(experiment), result.fingerprint, std::move(cols));
    }

    void emit(const ResultTable& t, const std::string& file) {
        io::write_results(t, (fs::path(result.out_dir) / file).string());
        result.outputs.push_back(file);
    }

    void emit_plot(const std::string& file, const std::vector<std::string>& names,
                   const std::vector<std::vector<double>>& cols) {
        io::write_plot_data((fs::path(result.out_dir) / file).string(), names, cols);
        result.outputs.push_back(file);
    }

    SweepOptions sweep_options() {
        SweepOptions o;
        o.threads = opts.threads;
        o.fee_range = sc.fee_range;
        o.regulator.scan_step = sc.regulator_scan_step;
        o.progress = progress_sink();
        return o;
    }
};

struct ResolvedModel {
    MarketModel model;
    std::optional<CalibrationResult> calibration;
};

ResolvedModel resolve_model(Context& ctx) {
    if (!ctx.sc.calibration_mode()) return {ctx.sc.explicit_model(), std::nullopt};
    ctx.note("calibrating");
    auto cal = calibrate(*ctx.sc.targets);
    return {cal.model(), cal};
}

// ISP optimum: warm-started from the calibration fixed point when there is one.
IspOptimum isp_optimum(Context& ctx, const ResolvedModel& m) {
    ctx.note("solving the ISP price problem");
    if (m.calibration)
        return maximize_isp_prices(m.model, {},
                                   std::array<double, 3>{ctx.sc.targets->target_p_basic,
                                                         ctx.sc.targets->target_p_premium_increment,
                                                         m.calibration->p_peering});
    return maximize_isp_prices(m.model);
}

std::vector<Column> point_columns(const std::string& suffix) {
    auto c = [&](const char* name, ColumnType t) { return Column{name + suffix, t}; };
    return {c("p_basic", ColumnType::money),
            c("p_premium_increment", ColumnType::money),
            c("premium_total", ColumnType::money),
            c("p_video", ColumnType::money),
            c("premium_video_total", ColumnType::money),
            c("share_basic", ColumnType::fraction),
            c("share_premium_only", ColumnType::fraction),
            c("share_premium_video", ColumnType::fraction),
            c("share_none", ColumnType::fraction),
            c("cs_basic", ColumnType::money),
            c("cs_premium_only", ColumnType::money),
            c("cs_premium_video", ColumnType::money),
            c("cs_total", ColumnType::money),
            c("isp_profit", ColumnType::money),
            c("vsp_profit", ColumnType::money)};
}

void append_point(std::vector<Cell>& row, const std::optional<EquilibriumPoint>& p) {
    if (!p) {
        for (int i = 0; i < 15; ++i) row.emplace_back(nan);
        return;
    }
    const auto& pr = p->prices;
    const auto& s = p->shares;
    const auto& cs = p->surplus;
    for (double v : {pr.p_basic, pr.p_premium_increment, pr.premium_total(), pr.p_video, pr.premium_video_total(),
                     s.basic, s.premium_only, s.premium_video, 1.0 - s.subscribing(), cs.basic, cs.premium_only,
                     cs.premium_video, cs.total, p->profits.isp, p->profits.vsp})
        row.emplace_back(v);
}

std::string fixed(double v, int digits = 4) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(digits) << v;
    return os.str();
}

void check_failures(const std::string& what, std::size_t failed, std::size_t total) {
    if (total > 0 && static_cast<double>(failed) > 0.1 * static_cast<double>(total))
        throw ConvergenceError(what + ": " + std::to_string(failed) + " of " + std::to_string(total) +
                                   " points failed (more than 10%)",
                               {static_cast<double>(failed)});
}

void write_calibration(Context& ctx, const CalibrationResult& c, const std::string& file) {
    auto t = ctx.table("calibrate", {{"quantity", ColumnType::text}, {"value", ColumnType::number}});
    auto row = [&](const char* name, double v) { t.add_row({std::string(name), v}); };
    row("mu_basic", c.population.mu_basic);
    row("sigma_basic", c.population.sigma_basic);
    row("mu_premium", c.population.mu_premium);
    row("sigma_premium", c.population.sigma_premium);
    row("mu_video", c.population.mu_video);
    row("sigma_video", c.population.sigma_video);
    row("c_basic", c.costs.c_basic);
    row("c_premium_increment", c.costs.c_premium_increment);
    row("c_video_increment", c.costs.c_video_increment);
    row("p_peering", c.p_peering);
    row("p_video", video_price(c.p_video_base, c.pass_through, c.p_peering));
    const char* res_names[] = {"residual_share_basic",   "residual_share_premium_only", "residual_share_premium_video",
                               "residual_foc_p_basic",   "residual_foc_p_premium",      "residual_foc_p_peering"};
    for (std::size_t i = 0; i < 6; ++i) row(res_names[i], c.residuals[i]);
    row("iterations", c.iterations);
    ctx.emit(t, file);
}

// ---------------------------------------------------------------------------

void cmd_calibrate(Context& ctx) {
    ctx.sc.require("calibrate");
    ctx.note("calibrating");
    const auto c = calibrate(*ctx.sc.targets);
    write_calibration(ctx, c, "calibration.csv");

    auto& out = ctx.report();
    out << "calibration converged (" << c.method << ", " << c.iterations << " iterations)\n";
    out << "  mu_b = " << fixed(c.population.mu_basic) << "  sigma_b = " << fixed(c.population.sigma_basic) << '\n';
    out << "  mu_p = " << fixed(c.population.mu_premium) << "  sigma_p = " << fixed(c.population.sigma_premium) << '\n';
    out << "  mu_v = " << fixed(c.population.mu_video) << "  sigma_v = " << fixed(c.population.sigma_video) << '\n';
    out << "  C^b = " << fixed(c.costs.c_basic) << "  C^p = " << fixed(c.costs.c_premium_increment)
        << "  P^d = " << fixed(c.p_peering) << '\n';
    out << "  residuals:";
    for (double r : c.residuals) out << ' ' << std::scientific << std::setprecision(2) << r;
    out << std::defaultfloat << '\n';
    ctx.result.points = 1;
}

void cmd_fee_sweep(Context& ctx) {
    ctx.sc.require("fee-sweep");
    const auto m = resolve_model(ctx);
    if (m.calibration) write_calibration(ctx, *m.calibration, "calibration.csv");
    const auto points = sweep_fee(m.model, ctx.sc.fee_grid, ctx.sweep_options());

    auto cols = point_columns("");
    cols.insert(cols.begin(), Column{"p_peering", ColumnType::money});
    cols.push_back({"status", ColumnType::text});
    auto t = ctx.table("fee-sweep", cols);
    std::size_t failed = 0;
    std::vector<std::vector<double>> fig(15);
    std::vector<double> fee;
    for (const auto& p : points) {
        std::vector<Cell> row{p.p_peering};
        append_point(row, p.point);
        row.emplace_back(p.status);
        t.add_row(row);
        if (!p.point) {
            ++failed;
            continue;
        }
        fee.push_back(p.p_peering);
        for (std::size_t k = 0; k < 15; ++k) fig[k].push_back(std::get<double>(row[k + 1]));
    }
    ctx.emit(t, "fee_sweep.csv");
    ctx.emit_plot("fee_sweep_prices.dat", {"p_peering", "p_basic", "premium_total", "p_video", "premium_video_total"},
                  {fee, fig[0], fig[2], fig[3], fig[4]});
    ctx.emit_plot("fee_sweep_demand.dat",
                  {"p_peering", "share_basic", "share_premium_only", "share_premium_video", "share_none"},
                  {fee, fig[5], fig[6], fig[7], fig[8]});
    ctx.emit_plot("fee_sweep_profit.dat", {"p_peering", "isp_profit", "vsp_profit"}, {fee, fig[13], fig[14]});
    ctx.emit_plot("fee_sweep_surplus.dat", {"p_peering", "cs_basic", "cs_premium_only", "cs_premium_video", "cs_total"},
                  {fee, fig[9], fig[10], fig[11], fig[12]});

    auto& out = ctx.report();
    out << "fee sweep: " << points.size() - failed << " of " << points.size() << " points solved\n";
    for (const auto& p : points)
        if (p.point && points.size() <= 12)
            out << "  P^d = " << fixed(p.p_peering, 2) << ": P^b = " << fixed(p.point->prices.p_basic, 2)
                << ", premium total = " << fixed(p.point->prices.premium_total(), 2)
                << ", P^v = " << fixed(p.point->prices.p_video, 2) << '\n';
    ctx.result.points = points.size();
    ctx.result.failed_points = failed;
    check_failures("fee sweep", failed, points.size());
}

void cmd_cs_opt(Context& ctx) {
    const auto m = resolve_model(ctx);
    if (m.calibration) write_calibration(ctx, *m.calibration, "calibration.csv");
    const auto so = ctx.sweep_options();
    const IspOptimum isp = isp_optimum(ctx, m);
    const auto at_isp = evaluate_point(m.model, m.model.prices(isp.p_basic, isp.p_premium_increment, isp.p_peering));
    ctx.note("solving the regulator problem");
    const auto reg = regulator_optimal_fee(m.model, ctx.sc.fee_range, so.regulator);
    const auto at_zero = tier_equilibrium(m.model, 0.0, so.optimizer);
    const double n = m.model.population.n_consumers;

    auto t = ctx.table("cs-opt", {{"quantity", ColumnType::text}, {"value", ColumnType::number}});
    auto row = [&](const char* name, double v) { t.add_row({std::string(name), v}); };
    row("p_peering_cs", reg.p_peering);
    row("p_peering_isp", isp.p_peering);
    row("p_basic_cs", reg.point.prices.p_basic);
    row("premium_total_cs", reg.point.prices.premium_total());
    row("premium_video_total_cs", reg.point.prices.premium_video_total());
    row("share_premium_video_cs", reg.point.shares.premium_video);
    row("p_basic_isp", isp.p_basic);
    row("premium_total_isp", at_isp.prices.premium_total());
    row("premium_video_total_isp", at_isp.prices.premium_video_total());
    row("share_premium_video_isp", at_isp.shares.premium_video);
    row("cs_total_cs", reg.point.surplus.total);
    row("cs_total_isp", at_isp.surplus.total);
    row("cs_total_zero", at_zero.surplus.total);
    row("cs_gain_vs_isp", reg.point.surplus.total - at_isp.surplus.total);
    row("cs_gain_vs_zero", reg.point.surplus.total - at_zero.surplus.total);
    row("cs_gain_vs_isp_per_consumer", (reg.point.surplus.total - at_isp.surplus.total) / n);
    row("cs_gain_vs_zero_per_consumer", (reg.point.surplus.total - at_zero.surplus.total) / n);
    row("isp_profit_cs", reg.point.profits.isp);
    row("isp_profit_isp", at_isp.profits.isp);
    ctx.emit(t, "cs_opt.csv");

    auto curve = ctx.table("cs-opt-scan", {{"p_peering", ColumnType::money}, {"cs_total", ColumnType::money}});
    std::vector<double> fee, cs;
    for (const auto& [f, c] : reg.cs_scan) {
        curve.add_row({f, c});
        fee.push_back(f);
        cs.push_back(c);
    }
    ctx.emit(curve, "cs_curve.csv");
    ctx.emit_plot("cs_curve.dat", {"p_peering", "cs_total"}, {fee, cs});

    auto& out = ctx.report();
    out << "P^d_CS = " << fixed(reg.p_peering) << "  (ISP choice P^d = " << fixed(isp.p_peering) << ")\n";
    out << "  CS gain vs ISP fee: " << fixed(reg.point.surplus.total - at_isp.surplus.total, 2) << " ("
        << fixed((reg.point.surplus.total - at_isp.surplus.total) / n, 6) << " per consumer)\n";
    out << "  CS gain vs zero fee: " << fixed(reg.point.surplus.total - at_zero.surplus.total, 2) << " ("
        << fixed((reg.point.surplus.total - at_zero.surplus.total) / n, 6) << " per consumer)\n";
    ctx.result.points = 1;
}

void cmd_cd_sweep(Context& ctx) {
    ctx.sc.require("cd-sweep");
    const auto rows = sweep_cd(*ctx.sc.targets, ctx.sc.cd_grid, ctx.sweep_options());

    std::vector<Column> cols{{"c_video_increment", ColumnType::money}, {"mu_basic", ColumnType::money},
                             {"mu_premium", ColumnType::money},        {"mu_video", ColumnType::money},
                             {"c_basic", ColumnType::money},           {"c_premium_increment", ColumnType::money},
                             {"p_peering_isp", ColumnType::money},     {"p_peering_cs", ColumnType::money},
                             {"incremental_cs", ColumnType::money}};
    for (auto& c : point_columns("_isp")) cols.push_back(c);
    for (auto& c : point_columns("_cs")) cols.push_back(c);
    cols.push_back({"status", ColumnType::text});
    auto t = ctx.table("cd-sweep", cols);

    std::vector<double> cd, pd_isp, pd_cs, inc, total_isp, total_cs, video_isp, video_cs;
    std::size_t failed = 0;
    for (const auto& r : rows) {
        const bool ok = r.status == "ok";
        std::vector<Cell> row{r.c_video_increment};
        if (r.calibration) {
            const auto& c = *r.calibration;
            for (double v : {c.population.mu_basic, c.population.mu_premium, c.population.mu_video, c.costs.c_basic,
                             c.costs.c_premium_increment})
                row.emplace_back(v);
        } else {
            for (int i = 0; i < 5; ++i) row.emplace_back(nan);
        }
        row.emplace_back(ok ? r.p_peering_isp : nan);
        row.emplace_back(ok ? r.p_peering_cs : nan);
        row.emplace_back(ok ? r.incremental_cs : nan);
        append_point(row, r.at_isp);
        append_point(row, r.at_cs);
        row.emplace_back(r.status);
        t.add_row(row);
        if (!ok) {
            ++failed;
            continue;
        }
        cd.push_back(r.c_video_increment);
        pd_isp.push_back(r.p_peering_isp);
        pd_cs.push_back(r.p_peering_cs);
        inc.push_back(r.incremental_cs);
        total_isp.push_back(r.at_isp->prices.premium_video_total());
        total_cs.push_back(r.at_cs->prices.premium_video_total());
        video_isp.push_back(r.at_isp->shares.premium_video);
        video_cs.push_back(r.at_cs->shares.premium_video);
    }
    ctx.emit(t, "cd_sweep.csv");
    ctx.emit_plot("cd_fees.dat", {"c_video_increment", "p_peering_isp", "p_peering_cs"}, {cd, pd_isp, pd_cs});
    ctx.emit_plot("cd_incremental_cs.dat", {"c_video_increment", "incremental_cs"}, {cd, inc});
    ctx.emit_plot("cd_prices.dat", {"c_video_increment", "premium_video_total_isp", "premium_video_total_cs"},
                  {cd, total_isp, total_cs});
    ctx.emit_plot("cd_video_share.dat", {"c_video_increment", "share_premium_video_isp", "share_premium_video_cs"},
                  {cd, video_isp, video_cs});

    auto& out = ctx.report();
    out << "C^d sweep: " << rows.size() - failed << " of " << rows.size() << " points solved\n";
    if (cd.size() >= 2) {
        out << "  R^2 of P^d_ISP on C^d: " << fixed(analysis::linear_fit(cd, pd_isp).r_squared, 5) << '\n';
        out << "  R^2 of P^d_CS on C^d: " << fixed(analysis::linear_fit(cd, pd_cs).r_squared, 5) << '\n';
        if (const auto z = analysis::zero_crossing(cd, pd_cs)) out << "  P^d_CS crosses zero at C^d = " << fixed(*z) << '\n';
    }
    ctx.result.points = rows.size();
    ctx.result.failed_points = failed;
    check_failures("C^d sweep", failed, rows.size());
}

geo::Topology load_topology(Context& ctx) {
    ctx.note("loading topology");
    return geo::Topology::build(io::load_counties(ctx.sc.counties_path), io::load_ixps(ctx.sc.ixps_path));
}

void cmd_geo_sweep(Context& ctx) {
    ctx.sc.require("geo-sweep");
    const auto topo = load_topology(ctx);
    std::vector<std::size_t> n_range = ctx.sc.n_range;
    if (n_range.empty())
        for (std::size_t n = 1; n <= topo.ixp_count(); ++n) n_range.push_back(n);
    const auto rows =
        geo::sweep_interconnection(topo, n_range, ctx.sc.x_list, ctx.sc.traffic, ctx.sc.subset_rule, ctx.opts.threads);

    auto t = ctx.table("geo-sweep", {{"n_agreed", ColumnType::count},
                                     {"local_fraction", ColumnType::fraction},
                                     {"ed_backbone_hot", ColumnType::km},
                                     {"ed_backbone_cold", ColumnType::km},
                                     {"cost", ColumnType::number},
                                     {"agreed", ColumnType::text}});
    for (const auto& r : rows) {
        std::string names;
        for (std::size_t k : r.agreed) names += (names.empty() ? "" : ";") + topo.ixps()[k].name;
        t.add_row({static_cast<double>(r.n_agreed), r.local_fraction, r.ed_backbone_hot, r.ed_backbone_cold, r.cost,
                   names});
    }
    ctx.emit(t, "geo_sweep.csv");

    auto d = ctx.table("geo-distances", {{"n_agreed", ColumnType::count},
                                         {"ed_backbone_hot", ColumnType::km},
                                         {"ed_backbone_cold", ColumnType::km},
                                         {"ed_middle", ColumnType::km},
                                         {"ed_access", ColumnType::km}});
    const double ed_m = geo::expected_middle_mile(topo), ed_a = geo::expected_access(topo);
    for (std::size_t n : n_range) {
        const auto agreement = geo::PeeringAgreement::top_ranked(topo, n);
        d.add_row({static_cast<double>(n), geo::expected_backbone_hot(topo, agreement),
                   geo::expected_backbone_cold(topo, agreement), ed_m, ed_a});
    }
    ctx.emit(d, "geo_distances.csv");

    // One column per x, rows by N.
    std::vector<std::string> names{"n_agreed"};
    std::vector<std::vector<double>> cols(1 + ctx.sc.x_list.size());
    for (std::size_t n : n_range) cols[0].push_back(static_cast<double>(n));
    for (std::size_t k = 0; k < ctx.sc.x_list.size(); ++k) names.push_back("cost_x" + io::format_number(ctx.sc.x_list[k]));
    for (const auto& r : rows) {
        const auto k = static_cast<std::size_t>(
            std::find(ctx.sc.x_list.begin(), ctx.sc.x_list.end(), r.local_fraction) - ctx.sc.x_list.begin());
        cols[1 + k].push_back(r.cost);
    }
    ctx.emit_plot("geo_cost.dat", names, cols);

    auto& out = ctx.report();
    out << "geo sweep over " << topo.county_count() << " counties and " << topo.ixp_count() << " IXPs\n";
    for (std::size_t k = 0; k < ctx.sc.x_list.size(); ++k) {
        const auto& c = cols[1 + k];
        const auto best = static_cast<std::size_t>(std::min_element(c.begin(), c.end()) - c.begin());
        out << "  x = " << fixed(ctx.sc.x_list[k], 2) << ": minimum cost at N = " << n_range[best] << '\n';
    }
    out << "  ED^m = " << fixed(ed_m, 1) << " km, ED^a = " << fixed(ed_a, 1) << " km\n";
    ctx.result.points = rows.size();
}

void cmd_oracle_check(Context& ctx) {
    const auto m = resolve_model(ctx);
    std::size_t comparisons = 0, failures = 0;
    std::mt19937_64 rng(ctx.opts.seed);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * u01(rng); };

    // Quadrature against Monte Carlo at random price points.
    auto mt = ctx.table("oracle-market", {{"point", ColumnType::count},
                                          {"p_basic", ColumnType::money},
                                          {"p_premium_increment", ColumnType::money},
                                          {"p_peering", ColumnType::money},
                                          {"quantity", ColumnType::text},
                                          {"quadrature", ColumnType::number},
                                          {"mc_mean", ColumnType::number},
                                          {"mc_se", ColumnType::number},
                                          {"z", ColumnType::number},
                                          {"pass", ColumnType::count}});
    for (std::size_t i = 0; i < ctx.sc.mc_price_points; ++i) {
        const double pb = uniform(40, 60), pp = uniform(10, 30), pd = uniform(-5, 10);
        const auto prices = m.model.prices(pb, pp, pd);
        auto pop = m.model.population;
        const auto q = evaluate_market(pop, prices);
        const auto mc = oracles::sample_market(pop, prices, ctx.sc.mc_samples, ctx.opts.seed + 1 + i, ctx.opts.threads);
        const double n = pop.n_consumers;
        const std::pair<const char*, std::pair<double, oracles::Estimate>> checks[] = {
            {"share_basic", {q.shares.basic, mc.share_basic}},
            {"share_premium_only", {q.shares.premium_only, mc.share_premium_only}},
            {"share_premium_video", {q.shares.premium_video, mc.share_premium_video}},
            {"cs_basic", {q.surplus.basic / n, mc.cs_basic}},
            {"cs_premium_only", {q.surplus.premium_only / n, mc.cs_premium_only}},
            {"cs_premium_video", {q.surplus.premium_video / n, mc.cs_premium_video}},
            {"cs_total", {q.surplus.total / n, mc.cs_total}}};
        for (const auto& [name, qm] : checks) {
            const auto& [quad, est] = qm;
            const bool pass = oracles::within(quad, est);
            ++comparisons;
            failures += !pass;
            mt.add_row({static_cast<double>(i), pb, pp, pd, std::string(name), quad, est.mean, est.se,
                        est.se > 0 ? (quad - est.mean) / est.se : 0.0, pass ? 1.0 : 0.0});
        }
        ctx.note("market oracle point " + std::to_string(i + 1) + "/" + std::to_string(ctx.sc.mc_price_points));
    }
    ctx.emit(mt, "oracle_market.csv");

    // Optimizer against brute-force grids on perturbed markets.
    auto gt = ctx.table("oracle-grid", {{"scenario", ColumnType::count},
                                        {"mu_basic", ColumnType::money},
                                        {"mu_premium", ColumnType::money},
                                        {"mu_video", ColumnType::money},
                                        {"c_basic", ColumnType::money},
                                        {"c_premium_increment", ColumnType::money},
                                        {"c_video_increment", ColumnType::money},
                                        {"p_basic", ColumnType::money},
                                        {"p_premium_increment", ColumnType::money},
                                        {"p_peering", ColumnType::money},
                                        {"optimum_value", ColumnType::number},
                                        {"best_grid_value", ColumnType::number},
                                        {"grid_nodes", ColumnType::count},
                                        {"status", ColumnType::text}});
    for (std::size_t i = 0; i < ctx.sc.grid_scenarios; ++i) {
        MarketModel s = m.model;
        s.population = ConsumerPopulation::from_means(s.population.mu_basic * uniform(0.9, 1.1),
                                                      s.population.mu_premium * uniform(0.9, 1.1),
                                                      s.population.mu_video * uniform(0.9, 1.1), 1.0);
        s.costs.c_basic *= uniform(0.9, 1.1);
        s.costs.c_premium_increment *= uniform(0.9, 1.1);
        s.costs.c_video_increment += uniform(-1.0, 1.0);
        ++comparisons;
        std::vector<Cell> row{static_cast<double>(i), s.population.mu_basic, s.population.mu_premium,
                              s.population.mu_video, s.costs.c_basic, s.costs.c_premium_increment,
                              s.costs.c_video_increment};
        try {
            const auto opt = maximize_isp_prices(s);
            const auto g = oracles::isp_grid_check(s, {opt.p_basic, opt.p_premium_increment, opt.p_peering}, 20, 0.25,
                                                   1e-6);
            for (double v : {opt.p_basic, opt.p_premium_increment, opt.p_peering, g.optimum_value, g.best_node_value,
                             static_cast<double>(g.nodes)})
                row.emplace_back(v);
            row.emplace_back(std::string(g.dominated() ? "ok" : "grid node beats optimizer"));
            failures += !g.dominated();
        } catch (const Error& e) {
            for (int k = 0; k < 6; ++k) row.emplace_back(nan);
            row.emplace_back(std::string("failed: ") + e.what());
            ++failures;
        }
        gt.add_row(row);
        ctx.note("grid oracle scenario " + std::to_string(i + 1) + "/" + std::to_string(ctx.sc.grid_scenarios));
    }
    ctx.emit(gt, "oracle_grid.csv");

    // Expected distances against sampled (source, user) pairs.
    if (!ctx.sc.counties_path.empty() && !ctx.sc.ixps_path.empty()) {
        const auto topo = load_topology(ctx);
        auto geo_t = ctx.table("oracle-geo", {{"n_agreed", ColumnType::count},
                                              {"quantity", ColumnType::text},
                                              {"exact", ColumnType::km},
                                              {"mc_mean", ColumnType::km},
                                              {"mc_se", ColumnType::km},
                                              {"pass", ColumnType::count}});
        std::vector<std::size_t> sizes{1, topo.ixp_count() / 2, topo.ixp_count()};
        sizes.erase(std::unique(sizes.begin(), sizes.end()), sizes.end());
        for (std::size_t n : sizes) {
            if (n == 0) continue;
            const auto a = geo::PeeringAgreement::top_ranked(topo, n);
            const auto exact = geo::distance_report(topo, a);
            const auto mc = oracles::sample_distances(topo, a, ctx.sc.geo_mc_samples, ctx.opts.seed + 1000 + n);
            const std::pair<const char*, std::pair<double, oracles::Estimate>> checks[] = {
                {"ed_backbone_hot", {exact.ed_backbone_hot, mc.backbone_hot}},
                {"ed_backbone_cold", {exact.ed_backbone_cold, mc.backbone_cold}},
                {"ed_middle", {exact.ed_middle, mc.middle}},
                {"ed_access", {exact.ed_access, mc.access}}};
            for (const auto& [name, em] : checks) {
                const bool pass = oracles::within(em.first, em.second);
                ++comparisons;
                failures += !pass;
                geo_t.add_row({static_cast<double>(n), std::string(name), em.first, em.second.mean, em.second.se,
                               pass ? 1.0 : 0.0});
            }
        }
        ctx.emit(geo_t, "oracle_geo.csv");
    }

    ctx.report() << "oracle check: " << comparisons - failures << " of " << comparisons << " comparisons passed\n";
    ctx.result.points = comparisons;
    ctx.result.failed_points = failures;
    if (failures > 0)
        throw ConvergenceError("oracle check: " + std::to_string(failures) + " of " + std::to_string(comparisons) +
                                   " comparisons failed",
                               {static_cast<double>(failures)});
}

void write_manifest(const RunResult& r, const RunOptions& opts) {
    nlohmann::ordered_json j;
    j["subcommand"] = r.subcommand;
    j["scenario"] = opts.scenario_path;
    j["fingerprint"] = r.fingerprint;
    j["tool_version"] = PEERING_VERSION;
    j["threads"] = opts.threads;
    j["seed"] = opts.seed;
    j["wall_time_seconds"] = r.wall_seconds;
    j["points"] = r.points;
    j["failed_points"] = r.failed_points;
    j["outputs"] = r.outputs;
    const auto path = fs::path(r.out_dir) / "manifest.json";
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << j.dump(2) << '\n';
    if (!out) throw IoError("error writing " + path.string());
}

}  // namespace

RunResult run(const std::string& subcommand, const RunOptions& opts) {
    const auto start = std::chrono::steady_clock::now();
    if (opts.format != "csv") throw ValidationError("unsupported format '" + opts.format + "'; only csv is available");
    if (opts.threads == 0) throw ValidationError("--threads must be at least 1");
    const auto sc = io::load_scenario(opts.scenario_path);

    RunResult result;
    result.subcommand = subcommand;
    result.fingerprint = io::fingerprint(sc);
    result.out_dir = opts.out_dir.empty() ? sc.output_dir : opts.out_dir;
    std::error_code ec;
    fs::create_directories(result.out_dir, ec);
    if (ec) throw IoError("cannot create output directory " + result.out_dir + ": " + ec.message());

    Context ctx{sc, opts, result, {}};
    auto finish = [&] {
        result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        write_manifest(result, opts);
        result.outputs.push_back("manifest.json");
    };
    try {
        if (subcommand == "calibrate") cmd_calibrate(ctx);
        else if (subcommand == "fee-sweep") cmd_fee_sweep(ctx);
        else if (subcommand == "cs-opt") cmd_cs_opt(ctx);
        else if (subcommand == "cd-sweep") cmd_cd_sweep(ctx);
        else if (subcommand == "geo-sweep") cmd_geo_sweep(ctx);
        else if (subcommand == "oracle-check") cmd_oracle_check(ctx);
        else throw ValidationError("unknown subcommand '" + subcommand + "'");
    } catch (const ConvergenceError&) {
        // Tables already written; record the partial run before reporting it.
        if (!result.outputs.empty()) finish();
        throw;
    }
    finish();
    return result;
}

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const IoError*>(&e)) return 3;
    if (dynamic_cast<const ConvergenceError*>(&e)) return 2;
    return 1;
}

}  // namespace peering::cli
