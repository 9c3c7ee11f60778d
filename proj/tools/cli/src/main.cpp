#include <CLI11.hpp>

#include <iostream>

#include "peering/error.hpp"
#include "peering_cli/commands.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Peering economics experiments: calibration, fee sweeps, regulator optimum, geographic cost."};
    app.require_subcommand(1);

    peering::cli::RunOptions opts;
    opts.report = &std::cout;
    opts.progress = &std::cerr;
    bool quiet = false;

    const char* help[] = {
        "Back out utilities and costs from observed prices and shares",
        "Tier prices, demand, profits and surplus across a grid of peering fees",
        "Peering fee that maximizes consumer surplus",
        "Recalibrate and re-solve across a grid of incremental video costs",
        "Backbone cost against the number of interconnection points",
        "Quadrature vs Monte Carlo, optimizer vs brute-force grid, distances vs sampling",
    };
    int i = 0;
    for (const char* name : peering::cli::subcommands) {
        auto* sub = app.add_subcommand(name, help[i++]);
        sub->add_option("--scenario", opts.scenario_path, "Scenario file (YAML)")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", opts.out_dir, "Output directory (default: the scenario's output.directory)");
        sub->add_option("--threads", opts.threads, "Worker threads for sweeps and sampling")
            ->default_val(1)
            ->check(CLI::Range(1u, 1024u));
        sub->add_option("--seed", opts.seed, "Seed for the Monte Carlo oracles")->default_val(20140601);
        sub->add_option("--format", opts.format, "Table format")->default_val("csv")->check(CLI::IsMember({"csv"}));
        sub->add_flag("--quiet", quiet, "No progress on standard error");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }
    if (quiet) opts.progress = nullptr;

    const std::string sub = app.get_subcommands().front()->get_name();
    try {
        const auto r = peering::cli::run(sub, opts);
        std::cerr << "wrote " << r.outputs.size() << " files to " << r.out_dir << '\n';
        return 0;
    } catch (const peering::ConvergenceError& e) {
        std::cerr << "error: " << e.what() << '\n';
        if (!e.residuals().empty()) {
            std::cerr << "residuals:";
            for (double r : e.residuals()) std::cerr << ' ' << r;
            std::cerr << '\n';
        }
        return peering::cli::exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return peering::cli::exit_code_for(e);
    }
}
