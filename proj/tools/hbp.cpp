#include "hbp/cli.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <string>

int main(int argc, char** argv) {
    CLI::App app{"Resonant body-channel power transfer: simulation, optimisation and safety checks"};
    app.set_version_flag("--version", std::string(hbp::cli::kVersion));

    hbp::cli::Options opt;
    std::uint64_t seed = 0;
    std::size_t points = 0;
    double tolerance = 0.0;

    std::vector<std::string> names(hbp::cli::commands().begin(), hbp::cli::commands().end());
    app.add_option("command", opt.command, "Command to run")->required()->check(CLI::IsMember(names));
    app.add_option("--config", opt.config_path, "Scenario file (.scn)")->required();
    app.add_option("--out", opt.out_path, "Output path, or - for stdout")->default_val("-");
    app.add_flag("--plot-data", opt.plot_data, "Emit gnuplot two-column blocks instead of CSV");
    auto* seed_opt = app.add_option("--seed", seed, "Seed for stochastic commands");
    auto* points_opt = app.add_option("--points", points, "Override sweep.points");
    auto* tol_opt = app.add_option("--tolerance", tolerance, "Relative tolerance (oracle-check, optimize-load)");
    app.add_flag("--joint", opt.joint, "multi: also solve all receivers in one network");
    app.add_flag("--oracle", opt.oracle, "Sweeps: evaluate with the full network solver");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : hbp::cli::kValidation;
    }
    if (*seed_opt) opt.seed = seed;
    if (*points_opt) opt.points = points;
    if (*tol_opt) opt.tolerance = tolerance;

    return hbp::cli::run(opt, std::cout, std::cerr);
}
