#include "peering/io/scenario.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <filesystem>
#include <set>
#include <sstream>

#include "peering/error.hpp"
#include "peering/io/csv.hpp"
#include "peering/io/result_table.hpp"

namespace peering::io {

namespace fs = std::filesystem;

namespace {

// Walks one mapping, remembering which keys were read so the rest can be reported as unknown.
class Section {
public:
    Section(const YAML::Node& node, std::string path, std::vector<std::string>& missing, std::vector<std::string>& unknown)
        : node_(node), path_(std::move(path)), missing_(missing), unknown_(unknown) {
        if (node_ && !node_.IsMap()) throw ValidationError(where(node_) + path_ + " must be a mapping");
    }
    ~Section() = default;

    bool present() const { return node_.IsDefined() && !node_.IsNull(); }
    bool has(const std::string& key) {
        seen_.insert(key);
        return present() && node_[key].IsDefined() && !node_[key].IsNull();
    }
    YAML::Node raw(const std::string& key) {
        seen_.insert(key);
        return present() ? node_[key] : YAML::Node();
    }
    std::string name(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    double number(const std::string& key, std::optional<double> fallback = std::nullopt) {
        if (!has(key)) {
            if (!fallback) missing_.push_back(name(key));
            return fallback.value_or(0.0);
        }
        return to_number(node_[key], name(key));
    }
    std::string text(const std::string& key, std::optional<std::string> fallback = std::nullopt) {
        if (!has(key)) {
            if (!fallback) missing_.push_back(name(key));
            return fallback.value_or("");
        }
        const auto n = node_[key];
        if (!n.IsScalar()) throw ValidationError(where(n) + name(key) + " must be a string");
        return n.as<std::string>();
    }
    Section child(const std::string& key) { return Section(raw(key), name(key), missing_, unknown_); }

    void finish() {
        if (!present()) return;
        for (const auto& kv : node_) {
            const auto key = kv.first.as<std::string>();
            if (!seen_.count(key)) unknown_.push_back(where(kv.first) + name(key));
        }
    }

    static double to_number(const YAML::Node& n, const std::string& name) {
        double v = 0.0;
        if (!n.IsScalar() || !YAML::convert<double>::decode(n, v) || !std::isfinite(v))
            throw ValidationError(where(n) + name + " must be a finite number");
        return v;
    }
    static std::string where(const YAML::Node& n) {
        const auto m = n.Mark();
        if (m.is_null()) return "";
        return "line " + std::to_string(m.line + 1) + ": ";
    }

private:
    YAML::Node node_;
    std::string path_;
    std::vector<std::string>& missing_;
    std::vector<std::string>& unknown_;
    std::set<std::string> seen_;
};

// Either a list of numbers or {start, stop, step} (inclusive of stop within rounding).
std::vector<double> grid(const YAML::Node& n, const std::string& name) {
    std::vector<double> out;
    if (n.IsSequence()) {
        for (const auto& item : n) out.push_back(Section::to_number(item, name));
    } else if (n.IsMap()) {
        std::vector<std::string> missing, unknown;
        Section s(n, name, missing, unknown);
        const double start = s.number("start"), stop = s.number("stop"), step = s.number("step");
        s.finish();
        if (!unknown.empty()) throw ValidationError("unknown key " + unknown.front());
        if (!missing.empty()) throw ValidationError("missing key " + missing.front());
        if (!(step > 0) || stop < start) throw ValidationError(name + ": need step > 0 and stop >= start");
        const auto count = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
        if (count > 1'000'000) throw ValidationError(name + ": grid too large");
        for (std::size_t i = 0; i < count; ++i) out.push_back(start + step * static_cast<double>(i));
    } else {
        throw ValidationError(Section::where(n) + name + " must be a list or a {start, stop, step} range");
    }
    for (std::size_t i = 1; i < out.size(); ++i)
        if (!(out[i] > out[i - 1])) throw ValidationError(name + " must be strictly increasing");
    return out;
}

std::size_t count_value(double v, const std::string& name) {
    if (!(v >= 0 && v == std::floor(v) && v < 1e12)) throw ValidationError(name + " must be a non-negative integer");
    return static_cast<std::size_t>(v);
}

std::string resolve(const std::string& base, const std::string& p) {
    if (p.empty()) return p;
    const fs::path path(p);
    return path.is_absolute() ? p : (fs::path(base) / path).lexically_normal().string();
}

void list(std::ostringstream& os, const std::vector<double>& v) {
    for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << format_number(v[i]);
}

}  // namespace

MarketModel Scenario::explicit_model() const {
    if (!population) throw ValidationError("scenario gives calibration targets, not an explicit population");
    MarketModel m{*population, costs, p_video_base, pass_through};
    m.population.n_consumers = n_consumers;
    return m;
}

void Scenario::require(std::string_view experiment) const {
    std::vector<std::string> need;
    if (experiment == "calibrate" || experiment == "cd-sweep")
        if (!targets) need.push_back("calibration (targets)");
    if (experiment == "fee-sweep" && fee_grid.empty()) need.push_back("sweeps.fee_grid");
    if (experiment == "cd-sweep" && cd_grid.empty()) need.push_back("sweeps.cd_grid");
    if (experiment == "geo-sweep") {
        if (counties_path.empty()) need.push_back("geo.counties");
        if (ixps_path.empty()) need.push_back("geo.ixps");
        if (x_list.empty()) need.push_back("geo.x_list");
    }
    if (need.empty()) return;
    std::string msg = std::string(experiment) + " needs:";
    for (const auto& n : need) msg += " " + n;
    throw ValidationError(msg);
}

Scenario parse_scenario(const std::string& text, const std::string& source, const std::string& base_dir) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw ParseError(source, static_cast<std::size_t>(e.mark.line + 1), "column " + std::to_string(e.mark.column + 1),
                         e.msg);
    }
    if (root.IsNull()) root = YAML::Node(YAML::NodeType::Map);
    if (!root.IsMap()) throw ParseError(source, 1, "", "scenario must be a YAML mapping");

    Scenario s;
    s.source = source;
    s.base_dir = base_dir;
    std::vector<std::string> missing, unknown;
    try {
        Section top(root, "", missing, unknown);

        Section market = top.child("market");
        s.n_consumers = market.number("n_consumers", 1e6);
        s.pass_through = market.number("pass_through", 1.0);
        const bool explicit_pop = market.has("population");
        const bool calibration = top.has("calibration");
        if (explicit_pop && calibration)
            throw ValidationError("scenario gives both market.population and calibration; choose one");
        if (!explicit_pop && !calibration) missing.push_back("market.population or calibration");

        Section costs = top.child("costs");
        s.costs.c_video_increment = costs.number("c_video_increment");
        s.costs.c_vsp = costs.number("c_vsp", 10.0);

        if (explicit_pop) {
            s.p_video_base = market.number("p_video_base");
            Section pop = market.child("population");
            ConsumerPopulation p;
            p.mu_basic = pop.number("mu_basic");
            p.sigma_basic = pop.number("sigma_basic");
            p.mu_premium = pop.number("mu_premium");
            p.sigma_premium = pop.number("sigma_premium");
            p.mu_video = pop.number("mu_video");
            p.sigma_video = pop.number("sigma_video");
            p.n_consumers = s.n_consumers;
            pop.finish();
            s.population = p;
            s.costs.c_basic = costs.number("c_basic");
            s.costs.c_premium_increment = costs.number("c_premium_increment");
        } else if (calibration) {
            if (costs.has("c_basic") || costs.has("c_premium_increment"))
                throw ValidationError("costs.c_basic and costs.c_premium_increment are calibrated; remove them");
            s.p_video_base = market.number("p_video_base");
            Section cal = top.child("calibration");
            MarketTargets t;
            t.target_p_basic = cal.number("target_p_basic");
            t.target_p_premium_increment = cal.number("target_p_premium_increment");
            t.target_share_basic = cal.number("target_share_basic");
            t.target_share_premium_only = cal.number("target_share_premium_only");
            t.target_share_premium_video = cal.number("target_share_premium_video");
            t.sigma_ratio = cal.number("sigma_ratio", 0.25);
            cal.finish();
            t.given_c_video_increment = s.costs.c_video_increment;
            t.given_p_video_base = s.p_video_base;
            t.given_pass_through = s.pass_through;
            t.n_consumers = s.n_consumers;
            t.c_vsp = s.costs.c_vsp;
            s.targets = t;
        }
        market.finish();
        costs.finish();

        Section sweeps = top.child("sweeps");
        s.fee_grid = sweeps.has("fee_grid") ? grid(sweeps.raw("fee_grid"), "sweeps.fee_grid")
                                            : grid(YAML::Load("{start: -5, stop: 10, step: 0.05}"), "sweeps.fee_grid");
        if (sweeps.has("fee_range")) {
            const auto r = grid(sweeps.raw("fee_range"), "sweeps.fee_range");
            if (r.size() != 2) throw ValidationError("sweeps.fee_range must be [lo, hi]");
            s.fee_range = {r[0], r[1]};
        }
        if (sweeps.has("cd_grid")) s.cd_grid = grid(sweeps.raw("cd_grid"), "sweeps.cd_grid");
        s.regulator_scan_step = sweeps.number("regulator_scan_step", 0.25);
        if (!(s.regulator_scan_step > 0)) throw ValidationError("sweeps.regulator_scan_step must be positive");
        sweeps.finish();

        Section geo_sec = top.child("geo");
        s.counties_path = resolve(base_dir, geo_sec.text("counties", ""));
        s.ixps_path = resolve(base_dir, geo_sec.text("ixps", ""));
        if (geo_sec.has("n_range"))
            for (double v : grid(geo_sec.raw("n_range"), "geo.n_range")) s.n_range.push_back(count_value(v, "geo.n_range"));
        if (geo_sec.has("x_list")) s.x_list = grid(geo_sec.raw("x_list"), "geo.x_list");
        const std::string rule = geo_sec.text("subset_rule", "by_rank");
        if (rule == "by_rank") s.subset_rule = geo::SubsetRule::by_rank;
        else if (rule == "best_subset") s.subset_rule = geo::SubsetRule::best_subset;
        else throw ValidationError("geo.subset_rule must be by_rank or best_subset");
        s.traffic.volume_down = geo_sec.number("volume_down", 1.0);
        s.traffic.unit_cost_backbone = geo_sec.number("unit_cost_backbone", 1.0);
        s.traffic.unit_cost_middle = geo_sec.number("unit_cost_middle", 1.0);
        s.traffic.unit_cost_access = geo_sec.number("unit_cost_access", 1.0);
        geo_sec.finish();

        Section oracle = top.child("oracle");
        s.mc_samples = count_value(oracle.number("mc_samples", 1e7), "oracle.mc_samples");
        s.mc_price_points = count_value(oracle.number("price_points", 20), "oracle.price_points");
        s.grid_scenarios = count_value(oracle.number("grid_scenarios", 5), "oracle.grid_scenarios");
        s.geo_mc_samples = count_value(oracle.number("geo_samples", 1e6), "oracle.geo_samples");
        oracle.finish();

        Section output = top.child("output");
        s.output_dir = resolve(base_dir, output.text("directory", "results"));
        output.finish();

        top.finish();
    } catch (const YAML::Exception& e) {
        throw ParseError(source, static_cast<std::size_t>(e.mark.line + 1), "", e.msg);
    }

    if (!unknown.empty()) {
        std::string msg = "unknown key(s):";
        for (const auto& k : unknown) msg += " " + k;
        throw ValidationError(source + ": " + msg);
    }
    if (!missing.empty()) {
        std::string msg = "missing required key(s):";
        for (const auto& k : missing) msg += " " + k;
        throw ValidationError(source + ": " + msg);
    }

    if (s.population) {
        s.population->validate();
        s.costs.validate();
    }
    if (s.targets) s.targets->validate();
    if (!(s.pass_through > 0 && s.pass_through <= 1)) throw ValidationError("market.pass_through must lie in (0, 1]");
    if (!(s.fee_range.hi > s.fee_range.lo)) throw ValidationError("sweeps.fee_range must have lo < hi");
    for (double x : s.x_list) geo::ReplicationPolicy{x}.validate();
    s.traffic.validate();
    return s;
}

Scenario load_scenario(const std::string& path) {
    const std::string text = read_file(path);
    const fs::path parent = fs::path(path).parent_path();
    return parse_scenario(text, path, parent.empty() ? "." : parent.string());
}

std::string canonical_form(const Scenario& s) {
    std::ostringstream os;
    auto num = [&](const char* k, double v) { os << k << '=' << format_number(v) << '\n'; };
    num("market.n_consumers", s.n_consumers);
    num("market.p_video_base", s.p_video_base);
    num("market.pass_through", s.pass_through);
    if (s.population) {
        num("population.mu_basic", s.population->mu_basic);
        num("population.sigma_basic", s.population->sigma_basic);
        num("population.mu_premium", s.population->mu_premium);
        num("population.sigma_premium", s.population->sigma_premium);
        num("population.mu_video", s.population->mu_video);
        num("population.sigma_video", s.population->sigma_video);
        num("costs.c_basic", s.costs.c_basic);
        num("costs.c_premium_increment", s.costs.c_premium_increment);
    }
    if (s.targets) {
        num("calibration.target_p_basic", s.targets->target_p_basic);
        num("calibration.target_p_premium_increment", s.targets->target_p_premium_increment);
        num("calibration.target_share_basic", s.targets->target_share_basic);
        num("calibration.target_share_premium_only", s.targets->target_share_premium_only);
        num("calibration.target_share_premium_video", s.targets->target_share_premium_video);
        num("calibration.sigma_ratio", s.targets->sigma_ratio);
    }
    num("costs.c_video_increment", s.costs.c_video_increment);
    num("costs.c_vsp", s.costs.c_vsp);
    os << "sweeps.fee_grid=";
    list(os, s.fee_grid);
    os << "\nsweeps.fee_range=" << format_number(s.fee_range.lo) << ',' << format_number(s.fee_range.hi) << '\n';
    os << "sweeps.cd_grid=";
    list(os, s.cd_grid);
    os << '\n';
    num("sweeps.regulator_scan_step", s.regulator_scan_step);
    os << "geo.n_range=";
    for (std::size_t i = 0; i < s.n_range.size(); ++i) os << (i ? "," : "") << s.n_range[i];
    os << "\ngeo.x_list=";
    list(os, s.x_list);
    os << "\ngeo.subset_rule=" << (s.subset_rule == geo::SubsetRule::by_rank ? "by_rank" : "best_subset") << '\n';
    num("geo.volume_down", s.traffic.volume_down);
    num("geo.unit_cost_backbone", s.traffic.unit_cost_backbone);
    num("geo.unit_cost_middle", s.traffic.unit_cost_middle);
    num("geo.unit_cost_access", s.traffic.unit_cost_access);
    os << "oracle.mc_samples=" << s.mc_samples << "\noracle.price_points=" << s.mc_price_points
       << "\noracle.grid_scenarios=" << s.grid_scenarios << "\noracle.geo_samples=" << s.geo_mc_samples << '\n';
    return os.str();
}

std::string fingerprint(const Scenario& s) {
    std::uint64_t h = fnv1a64(canonical_form(s));
    for (const auto* p : {&s.counties_path, &s.ixps_path}) {
        if (p->empty()) continue;
        h = fnv1a64("\n--file--\n", h);
        h = fnv1a64(read_file(*p), h);
    }
    return hex64(h);
}

}  // namespace peering::io
