#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "peering/io/scenario.hpp"

namespace peering::cli {

struct RunOptions {
    std::string scenario_path;
    std::string out_dir;  // empty: the scenario's output.directory
    unsigned threads = 1;
    std::uint64_t seed = 20140601;
    std::string format = "csv";
    std::ostream* report = nullptr;    // human-readable summary
    std::ostream* progress = nullptr;  // progress lines
};

struct RunResult {
    std::string subcommand;
    std::string fingerprint;
    std::string out_dir;
    std::vector<std::string> outputs;  // file names relative to out_dir
    std::size_t points = 0;
    std::size_t failed_points = 0;
    double wall_seconds = 0.0;
};

inline constexpr const char* subcommands[] = {"calibrate", "fee-sweep", "cs-opt", "cd-sweep", "geo-sweep",
                                              "oracle-check"};

/// Loads the scenario, runs one experiment, writes its tables, plot files and
/// manifest.json. Throws ValidationError / ConvergenceError / IoError; a sweep
/// throws ConvergenceError (after writing its tables) when more than 10% of its
/// points fail, and oracle-check does so when any comparison fails.
RunResult run(const std::string& subcommand, const RunOptions& opts);

/// 0 success, 1 validation, 2 convergence, 3 I/O.
int exit_code_for(const std::exception& e);

}  // namespace peering::cli
