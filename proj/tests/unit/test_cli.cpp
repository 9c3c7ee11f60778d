#include <doctest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "peering/error.hpp"
#include "peering/io/csv.hpp"
#include "peering/io/result_table.hpp"
#include "peering_cli/commands.hpp"

using namespace peering;
namespace fs = std::filesystem;

namespace {

const std::string data_dir = PEERING_SOURCE_DIR "/data";

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string operator/(const std::string& f) const { return (path / f).string(); }
};

void write(const std::string& path, const std::string& text) { std::ofstream(path) << text; }

std::string calibration_scenario(double share_video = 0.375) {
    std::ostringstream os;
    os << "market:\n  p_video_base: 21.58\n"
       << "calibration:\n  target_p_basic: 50\n  target_p_premium_increment: 20\n"
       << "  target_share_basic: 0.25\n  target_share_premium_only: 0.125\n"
       << "  target_share_premium_video: " << share_video << '\n'
       << "costs:\n  c_video_increment: 3\n"
       << "geo:\n  counties: " << data_dir << "/us_counties_approx.csv\n  ixps: " << data_dir
       << "/ixps_default.csv\n  x_list: [0, 0.5, 1]\n  n_range: [1, 2, 6, 12]\n";
    return os.str();
}

int run_exe(const std::string& args) {
    const std::string cmd = std::string(PEERING_CLI_EXE) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

cli::RunResult run(const std::string& sub, const std::string& scenario, const std::string& out, unsigned threads = 1) {
    cli::RunOptions o;
    o.scenario_path = scenario;
    o.out_dir = out;
    o.threads = threads;
    std::ostringstream sink;
    o.report = &sink;
    return cli::run(sub, o);
}

}  // namespace

TEST_CASE("exit codes") {
    TempDir dir("peering_cli_exit");
    write(dir / "bad.yaml", calibration_scenario(0.825));
    write(dir / "ok.yaml", calibration_scenario());
    std::string missing_data = calibration_scenario();
    missing_data.replace(missing_data.find("us_counties_approx.csv"), 22, "no_such_file.csv");
    write(dir / "missing.yaml", missing_data);

    CHECK(run_exe("") == 1);
    CHECK(run_exe("calibrate") == 1);
    CHECK(run_exe("calibrate --scenario " + (dir / "nope.yaml")) == 1);
    CHECK(run_exe("calibrate --scenario " + (dir / "ok.yaml") + " --threads 0") == 1);
    CHECK(run_exe("calibrate --scenario " + (dir / "bad.yaml") + " --out " + (dir / "o")) == 1);
    CHECK(run_exe("geo-sweep --scenario " + (dir / "missing.yaml") + " --out " + (dir / "o")) == 3);
    CHECK(run_exe("fee-sweep --scenario " + (dir / "ok.yaml") + " --out " + (dir / "o") + " --format json") == 1);
    CHECK(run_exe("--help") == 0);

    CHECK(cli::exit_code_for(IoError("x")) == 3);
    CHECK(cli::exit_code_for(ConvergenceError("x")) == 2);
    CHECK(cli::exit_code_for(ValidationError("x")) == 1);
    CHECK(cli::exit_code_for(ParseError("f", 1, "", "x")) == 1);
}

TEST_CASE("infeasible targets are rejected before any solve") {
    TempDir dir("peering_cli_bad");
    write(dir / "bad.yaml", calibration_scenario(0.825));
    try {
        run("calibrate", dir / "bad.yaml", dir / "out");
        FAIL("expected a validation error");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("sum to 1.2") != std::string::npos);
    }
    CHECK_FALSE(fs::exists(dir / "out/calibration.csv"));
}

TEST_CASE("calibrate is deterministic and writes a manifest") {
    TempDir dir("peering_cli_cal");
    write(dir / "s.yaml", calibration_scenario());
    const auto a = run("calibrate", dir / "s.yaml", dir / "a");
    const auto b = run("calibrate", dir / "s.yaml", dir / "b");
    CHECK(a.fingerprint == b.fingerprint);
    CHECK(io::read_file(dir / "a/calibration.csv") == io::read_file(dir / "b/calibration.csv"));

    const auto t = io::read_results(dir / "a/calibration.csv");
    CHECK(t.experiment() == "calibrate");
    CHECK(t.fingerprint() == a.fingerprint);
    std::size_t mu_v = t.rows().size();
    for (std::size_t i = 0; i < t.rows().size(); ++i)
        if (t.text(i, "quantity") == "mu_video") mu_v = i;
    REQUIRE(mu_v < t.rows().size());
    CHECK(t.number(mu_v, "value") == doctest::Approx(27.749).epsilon(1e-4));

    const auto m = nlohmann::json::parse(io::read_file(dir / "a/manifest.json"));
    CHECK(m["subcommand"] == "calibrate");
    CHECK(m["fingerprint"] == a.fingerprint);
    CHECK(m["scenario"] == dir / "s.yaml");
    CHECK(m["threads"] == 1);
    CHECK(m["seed"] == 20140601);
    CHECK(m["failed_points"] == 0);
    CHECK(m["wall_time_seconds"].get<double>() >= 0.0);
    CHECK(m["outputs"].size() == a.outputs.size() - 1);
    CHECK(m.contains("tool_version"));
}

TEST_CASE("geo-sweep tables do not depend on the thread count") {
    TempDir dir("peering_cli_geo");
    write(dir / "s.yaml", calibration_scenario());
    const auto one = run("geo-sweep", dir / "s.yaml", dir / "one", 1);
    const auto four = run("geo-sweep", dir / "s.yaml", dir / "four", 4);
    for (const auto& f : one.outputs) {
        if (f == "manifest.json") continue;
        CAPTURE(f);
        CHECK(io::read_file(dir / ("one/" + f)) == io::read_file(dir / ("four/" + f)));
    }
    const auto t = io::read_results(dir / "one/geo_sweep.csv");
    CHECK(t.rows().size() == 4 * 3);
}

TEST_CASE("fee-sweep on an explicit market") {
    TempDir dir("peering_cli_fee");
    write(dir / "s.yaml", R"(
market:
  p_video_base: 21.58
  population: {mu_basic: 56.110793, sigma_basic: 14.0277, mu_premium: 18.902701, sigma_premium: 4.72568,
               mu_video: 27.748988, sigma_video: 6.93725}
costs: {c_basic: 16.495883, c_premium_increment: 18.99433, c_video_increment: 3}
sweeps:
  fee_grid: [0, 2]
)");
    const auto one = run("fee-sweep", dir / "s.yaml", dir / "one", 1);
    const auto two = run("fee-sweep", dir / "s.yaml", dir / "two", 2);
    CHECK(one.failed_points == 0);
    CHECK(io::read_file(dir / "one/fee_sweep.csv") == io::read_file(dir / "two/fee_sweep.csv"));
    const auto t = io::read_results(dir / "one/fee_sweep.csv");
    REQUIRE(t.rows().size() == 2);
    CHECK(t.number(0, "premium_total") == doctest::Approx(73.97).epsilon(2e-4));
    CHECK(fs::exists(dir / "one/fee_sweep_prices.dat"));
}
