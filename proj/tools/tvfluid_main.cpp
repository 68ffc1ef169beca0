#include <string>

#include "CLI11.hpp"
#include "tvfluid/runner.hpp"

int main(int argc, char** argv) {
    CLI::App app{"tvfluid: fluid-model solver and simulator for many-server queues "
                 "with abandonment and time-varying arrivals"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string scenario;
    std::string out_dir = "out";
    double grid_h = 0.0;
    std::uint64_t seed = 0;
    bool have_h = false, have_seed = false, strict = false;

    app.add_option("--scenario", scenario, "scenario JSON file")->required();
    app.add_option("--out", out_dir, "output directory (default: out)");
    app.add_option("--grid-h", grid_h, "override the scenario grid step")
        ->each([&](const std::string&) { have_h = true; });
    app.add_option("--seed", seed, "override the simulation seed")
        ->each([&](const std::string&) { have_seed = true; });
    app.add_flag("--strict", strict, "exit 4 when an invariant check fails");

    auto* cmd_solve = app.add_subcommand("solve", "solve the fluid model, write trajectories");
    auto* cmd_sim = app.add_subcommand("simulate", "run the discrete-event ensemble");
    auto* cmd_cmp = app.add_subcommand("compare", "solve + simulate per n, compare paths");
    auto* cmd_eq = app.add_subcommand("equivalence", "elapsed/residual formulation report");
    auto* cmd_inv = app.add_subcommand("check-invariants", "run the invariant suite");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : tvfluid::kInputError;
    }

    tvfluid::RunOptions options;
    options.scenario_path = scenario;
    options.out_dir = out_dir;
    if (have_h) options.grid_h = grid_h;
    if (have_seed) options.seed = seed;
    options.strict = strict;

    if (cmd_solve->parsed()) return tvfluid::run_solve(options);
    if (cmd_sim->parsed()) return tvfluid::run_simulate(options);
    if (cmd_cmp->parsed()) return tvfluid::run_compare(options);
    if (cmd_eq->parsed()) return tvfluid::run_equivalence(options);
    if (cmd_inv->parsed()) return tvfluid::run_check_invariants(options);
    return tvfluid::kInputError;
}
