#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "peering/error.hpp"
#include "peering/io/csv.hpp"
#include "peering/io/records.hpp"
#include "peering/io/result_table.hpp"
#include "peering/io/scenario.hpp"

using namespace peering;
using namespace peering::io;
namespace fs = std::filesystem;

namespace {

const std::string minimal = R"(
market:
  p_video_base: 21.58
calibration:
  target_p_basic: 50
  target_p_premium_increment: 20
  target_share_basic: 0.25
  target_share_premium_only: 0.125
  target_share_premium_video: 0.375
costs:
  c_video_increment: 3
)";

std::string error_of(auto&& fn) {
    try {
        fn();
    } catch (const std::exception& e) {
        return e.what();
    }
    return {};
}

}  // namespace

TEST_CASE("csv parsing") {
    const auto rows = parse_csv("\xEF\xBB\xBF" "a,b\r\n\n\"x, y\",\"say \"\"hi\"\"\"\n\"two\nlines\",z\n", "t");
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].fields == std::vector<std::string>{"a", "b"});
    CHECK(rows[1].line == 3);
    CHECK(rows[1].fields == std::vector<std::string>{"x, y", "say \"hi\""});
    CHECK(rows[2].fields[0] == "two\nlines");
    CHECK_THROWS_AS(parse_csv("\"open,b\n", "t"), ParseError);
    CHECK_THROWS_AS(parse_csv("\"a\"b,c\n", "t"), ParseError);

    CHECK(csv_escape("plain") == "plain");
    CHECK(csv_escape("a,b") == "\"a,b\"");
    CHECK(csv_escape("q\"") == "\"q\"\"\"");
    std::ostringstream os;
    write_csv_row(os, {"1", "a,b", "x\ny"});
    const auto back = parse_csv(os.str(), "t");
    CHECK(back.at(0).fields == std::vector<std::string>{"1", "a,b", "x\ny"});
}

TEST_CASE("county records") {
    const std::string ok = "fips,name,lat,lon,population,land_area_km2\n"
                           "01001,\"Autauga, AL\",32.5,-86.6,41880,1555\n"
                           "01003,Baldwin,30.7,-87.7,111055,4376.6\n"
                           "01005,Barbour,31.9,-85.4,0,2292\n";
    const auto c = parse_counties(ok, "c.csv");
    REQUIRE(c.size() == 3);
    CHECK(c[0].name == "Autauga, AL");
    CHECK(c[0].fips == "01001");
    CHECK(c[1].land_area_km2 == doctest::Approx(4376.6));

    const std::string bad = "fips,name,lat,lon,population,land_area_km2\n"
                            "01001,A,32.5,-86.6,41880,1555\n"
                            "01003,B,30.7,-87.7,-5,4376\n";
    try {
        parse_counties(bad, "c.csv");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 3);
        CHECK(e.column() == "population");
        CHECK(std::string(e.what()).find("c.csv:3") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_counties("fips,name\n1,a\n", "c"), ParseError);
    CHECK_THROWS_AS(parse_counties(std::string(county_header) + "\n1,a,1,2,3\n", "c"), ParseError);
    CHECK_THROWS_AS(parse_counties(std::string(county_header) + "\n1,a,1x,2,3,4\n", "c"), ParseError);
    CHECK_THROWS_AS(parse_counties(std::string(county_header) + "\n1,a,95,2,3,4\n", "c"), ParseError);
    CHECK_THROWS_AS(parse_counties(std::string(county_header) + "\n1,a,1,2,3,0\n", "c"), ParseError);
    const auto dup = error_of([] { parse_counties(std::string(county_header) + "\n7,a,1,2,3,4\n7,b,1,2,3,4\n", "c"); });
    CHECK(dup.find("c:3") != std::string::npos);
    CHECK(dup.find("line 2") != std::string::npos);
}

TEST_CASE("county file against a line count") {
    const std::string path = PEERING_SOURCE_DIR "/data/us_counties_approx.csv";
    std::ifstream in(path);
    std::string line;
    std::size_t lines = 0, delaware = 0;
    std::getline(in, line);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        ++lines;
        if (line.rfind("10", 0) == 0 && line[5] == ',') ++delaware;
    }
    const auto counties = load_counties(path);
    CHECK(counties.size() == lines);
    std::size_t loaded_delaware = 0;
    for (const auto& c : counties)
        if (c.fips.rfind("10", 0) == 0) ++loaded_delaware;
    CHECK(loaded_delaware == delaware);
    CHECK(delaware == 3);
}

TEST_CASE("ixp records") {
    const auto ixps = parse_ixps("rank,name,metro,lat,lon\n2,B,Bee,1,2\n1,A,Ay,3,4\n", "i");
    REQUIRE(ixps.size() == 2);
    CHECK(ixps[1].rank == 1);
    CHECK(ixps[0].metro == "Bee");
    CHECK_THROWS_AS(parse_ixps("rank,name,metro,lat,lon\n1,A,a,1,2\n1,B,b,3,4\n", "i"), ParseError);
    CHECK_THROWS_AS(parse_ixps("rank,name,metro,lat,lon\n1.5,A,a,1,2\n", "i"), ParseError);
    CHECK_THROWS_AS(parse_ixps("rank,name,metro,lat,lon\n0,A,a,1,2\n", "i"), ParseError);
    CHECK(load_ixps(PEERING_SOURCE_DIR "/data/ixps_default.csv").size() == 12);
    CHECK_THROWS_AS(load_ixps("/nonexistent/ixps.csv"), IoError);
}

TEST_CASE("strict numbers") {
    double v = 0;
    CHECK(parse_double(" 1.5 ", v));
    CHECK(v == 1.5);
    CHECK(parse_double("-2e3", v));
    CHECK(v == -2000);
    CHECK_FALSE(parse_double("1.5x", v));
    CHECK_FALSE(parse_double("", v));
    CHECK_FALSE(parse_double("nan", v));
}

TEST_CASE("minimal scenario gets defaults") {
    const auto s = parse_scenario(minimal, "min.yaml", "/base");
    CHECK(s.calibration_mode());
    CHECK(s.n_consumers == 1e6);
    CHECK(s.pass_through == 1.0);
    CHECK(s.costs.c_vsp == 10.0);
    CHECK(s.targets->sigma_ratio == 0.25);
    CHECK(s.targets->given_c_video_increment == 3.0);
    CHECK(s.fee_grid.size() == 301);
    CHECK(s.fee_grid.front() == -5.0);
    CHECK(s.fee_grid.back() == doctest::Approx(10.0));
    CHECK(s.regulator_scan_step == 0.25);
    CHECK(s.mc_samples == 10'000'000);
    CHECK(s.output_dir == "/base/results");
    CHECK_THROWS_AS(s.explicit_model(), ValidationError);
    CHECK_THROWS_AS(s.require("geo-sweep"), ValidationError);
    CHECK_THROWS_AS(s.require("cd-sweep"), ValidationError);
}

TEST_CASE("scenario rejections") {
    SUBCASE("both population and calibration") {
        const std::string text = minimal + R"(
  c_basic: 1
)";
        CHECK_THROWS_AS(parse_scenario(text, "s", "."), ValidationError);
        const std::string both = std::string(R"(
market:
  p_video_base: 1
  population: {mu_basic: 1, sigma_basic: 1, mu_premium: 1, sigma_premium: 1, mu_video: 1, sigma_video: 1}
)") + minimal.substr(minimal.find("calibration:"));
        CHECK(error_of([&] { parse_scenario(both, "s", "."); }).find("choose one") != std::string::npos);
    }
    SUBCASE("unknown key") {
        const auto msg = error_of([] { parse_scenario(minimal + "sweeps:\n  fee_gird: [1, 2]\n", "s", "."); });
        CHECK(msg.find("sweeps.fee_gird") != std::string::npos);
    }
    SUBCASE("missing keys are listed together") {
        const auto msg = error_of([] { parse_scenario("market:\n  n_consumers: 5\n", "s", "."); });
        CHECK(msg.find("market.population or calibration") != std::string::npos);
        CHECK(msg.find("costs.c_video_increment") != std::string::npos);
    }
    SUBCASE("infeasible targets") {
        std::string text = minimal;
        text.replace(text.find("0.375"), 5, "0.825");
        CHECK(error_of([&] { parse_scenario(text, "s", "."); }).find("sum to 1.2") != std::string::npos);
    }
    SUBCASE("bad grids and syntax") {
        CHECK_THROWS_AS(parse_scenario(minimal + "sweeps:\n  fee_grid: [2, 1]\n", "s", "."), ValidationError);
        CHECK_THROWS_AS(parse_scenario(minimal + "sweeps:\n  fee_grid: {start: 0, stop: 1, step: 0}\n", "s", "."),
                        ValidationError);
        CHECK_THROWS_AS(parse_scenario(minimal + "geo:\n  x_list: [0, 1.5]\n", "s", "."), ValidationError);
        CHECK_THROWS_AS(parse_scenario("market: [unclosed\n", "s", "."), ParseError);
    }
}

TEST_CASE("scenario files in the repository load") {
    for (const char* name : {"baseline", "explicit", "smoke"}) {
        const auto s = load_scenario(std::string(PEERING_SOURCE_DIR "/data/scenarios/") + name + ".yaml");
        CHECK(fingerprint(s).size() == 16);
    }
    const auto e = load_scenario(PEERING_SOURCE_DIR "/data/scenarios/explicit.yaml");
    CHECK_FALSE(e.calibration_mode());
    CHECK(e.explicit_model().population.mu_basic == doctest::Approx(56.11));
}

TEST_CASE("fingerprint") {
    const auto a = parse_scenario(minimal, "a", ".");
    std::string spaced = minimal;
    spaced.replace(spaced.find("target_p_basic: 50"), 18, "target_p_basic:     50.0   # comment");
    const auto b = parse_scenario(spaced, "b", ".");
    CHECK(fingerprint(a) == fingerprint(b));
    const auto c = parse_scenario(minimal + "output:\n  directory: elsewhere\n", "c", ".");
    CHECK(fingerprint(a) == fingerprint(c));
    std::string changed = minimal;
    changed.replace(changed.find("c_video_increment: 3"), 20, "c_video_increment: 3.01");
    CHECK(fingerprint(a) != fingerprint(parse_scenario(changed, "d", ".")));
}

TEST_CASE("number formatting") {
    CHECK(format_number(12.3456789012) == "1.23456789e+01");
    CHECK(format_number(0.0) == "0.00000000e+00");
    CHECK(format_number(-1.0) == "-1.00000000e+00");
    CHECK(format_number(std::nan("")) == "nan");
}

TEST_CASE("result table round trip") {
    ResultTable t("demo", "0123456789abcdef",
                  {{"p_peering", ColumnType::money}, {"share", ColumnType::fraction}, {"status", ColumnType::text}});
    t.add_row({1.0 / 3.0, 0.25, std::string("ok")});
    t.add_row({-2.5, std::nan(""), std::string("failed: a, \"b\"")});
    CHECK_THROWS_AS(t.add_row({1.0, 2.0}), ValidationError);
    CHECK_THROWS_AS(t.add_row({1.0, std::string("x"), std::string("y")}), ValidationError);

    const auto text = render_results(t);
    const auto back = parse_results(text, "mem");
    CHECK(back == t);
    CHECK(back.experiment() == "demo");
    CHECK(back.fingerprint() == "0123456789abcdef");
    CHECK(back.columns() == t.columns());
    CHECK(back.number(0, "p_peering") == doctest::Approx(1.0 / 3.0).epsilon(1e-8));
    CHECK(back.text(1, "status") == "failed: a, \"b\"");
    CHECK(render_results(back) == text);

    const auto dir = fs::temp_directory_path() / "peering_io_test";
    fs::create_directories(dir);
    write_results(t, (dir / "t.csv").string());
    CHECK(read_results((dir / "t.csv").string()) == t);
    write_plot_data((dir / "p.dat").string(), {"x", "y"}, {{1, 2}, {3, 4}});
    CHECK(read_file((dir / "p.dat").string()).rfind("# x y\n", 0) == 0);
    fs::remove_all(dir);
    CHECK_THROWS_AS(write_results(t, "/nonexistent/dir/t.csv"), IoError);
}

TEST_CASE("fnv1a64") {
    CHECK(fnv1a64("") == 14695981039346656037ull);
    CHECK(hex64(fnv1a64("a")) == "af63dc4c8601ec8c");
}
