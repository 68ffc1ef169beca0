#include "tvfluid/runner.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "tvfluid/elapsed.hpp"
#include "tvfluid/errors.hpp"
#include "tvfluid/invariants.hpp"
#include "tvfluid/processes.hpp"
#include "tvfluid/scenario.hpp"
#include "tvfluid/sim.hpp"
#include "tvfluid/solver.hpp"

namespace tvfluid {

namespace {

using Json = nlohmann::ordered_json;

// 17 significant digits: reruns are byte-stable
std::string g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write '" + path.string() + "'");
    out << content;
}

Json invariants_json(const std::vector<InvariantCheck>& checks) {
    Json arr = Json::array();
    for (const auto& c : checks) {
        Json e;
        e["name"] = c.name;
        e["pass"] = c.pass;
        e["measured"] = c.measured;
        e["threshold"] = c.threshold;
        arr.push_back(std::move(e));
    }
    return arr;
}

Json diagnostics_json(const Scenario& scenario, const FluidSolution& sol,
                      const std::vector<InvariantCheck>& checks,
                      const BalanceResiduals& balance) {
    Json j;
    j["scenario"] = scenario.name;
    j["grid"]["h"] = sol.grid.step();
    j["grid"]["T"] = sol.grid.horizon();
    j["window"]["length"] = sol.diagnostics.window_length;
    j["window"]["kappa"] = sol.diagnostics.kappa;
    j["window"]["lipschitz"] = sol.diagnostics.lipschitz_used;
    j["window"]["count"] = sol.diagnostics.windows.size();
    Json windows = Json::array();
    for (const auto& w : sol.diagnostics.windows) {
        Json e;
        e["first_node"] = w.first_node;
        e["last_node"] = w.last_node;
        e["iterations"] = w.iterations;
        e["final_delta"] = w.final_delta;
        windows.push_back(std::move(e));
    }
    j["windows"] = std::move(windows);
    j["key_equation_residual"] = sol.diagnostics.key_equation_residual;
    j["kernel_clamps"] = sol.diagnostics.kernel_clamps;
    j["balance"]["queue_residual"] = balance.queue;
    j["balance"]["system_residual"] = balance.system;
    j["invariants"] = invariants_json(checks);
    return j;
}

struct SolveArtifacts {
    Scenario scenario;
    FluidSolution sol;
    FlowLedger ledger;
    BalanceResiduals balance;
    std::vector<InvariantCheck> checks;
};

SolveArtifacts solve_scenario(const RunOptions& options) {
    Scenario scenario = load_scenario(options.scenario_path);
    if (options.seed && scenario.sim) scenario.sim->seed = *options.seed;
    ScenarioModel model = build_model(scenario, options.grid_h);
    FluidSolution sol = solve(model.grid, model.inputs, model.solver);
    FlowLedger ledger = build_flow_ledger(sol);
    BalanceResiduals balance = balance_residuals(sol, ledger);
    std::vector<InvariantCheck> checks = check_invariants(sol);
    return {std::move(scenario), std::move(sol), std::move(ledger), balance, std::move(checks)};
}

std::string trajectories_csv(const FluidSolution& sol, const FlowLedger& ledger) {
    std::string csv = "t,X,Q,Z,omega,A,L,S,E,a\n";
    for (std::size_t i = 0; i < sol.grid.nodes(); ++i) {
        csv += g17(sol.grid.time(i));
        csv += ',';
        csv += g17(sol.total[i]);
        csv += ',';
        csv += g17(sol.queue[i]);
        csv += ',';
        csv += g17(sol.in_service[i]);
        csv += ',';
        csv += g17(sol.wait[i]);
        csv += ',';
        csv += g17(ledger.entered_service[i]);
        csv += ',';
        csv += g17(ledger.abandoned[i]);
        csv += ',';
        csv += g17(ledger.completed[i]);
        csv += ',';
        csv += g17(ledger.arrived[i]);
        csv += ',';
        csv += g17(sol.entered[i]);
        csv += '\n';
    }
    return csv;
}

int guard(const std::function<int()>& body) {
    try {
        return body();
    } catch (const DivergenceError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kDivergence;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kInputError;
    } catch (const DomainError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kInputError;
    } catch (const ConsistencyError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kInvariantFailure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kInputError;
    }
}

}  // namespace

unsigned worker_limit() {
    if (const char* env = std::getenv("TVFLUID_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1) return static_cast<unsigned>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? hw : 1;
}

int run_solve(const RunOptions& options) {
    return guard([&] {
        SolveArtifacts art = solve_scenario(options);
        std::filesystem::create_directories(options.out_dir);
        write_file(options.out_dir / "trajectories.csv", trajectories_csv(art.sol, art.ledger));
        const Json diag = diagnostics_json(art.scenario, art.sol, art.checks, art.balance);
        write_file(options.out_dir / "diagnostics.json", diag.dump(2) + "\n");
        if (options.strict && !all_pass(art.checks)) return static_cast<int>(kInvariantFailure);
        return static_cast<int>(kOk);
    });
}

int run_check_invariants(const RunOptions& options) {
    return guard([&] {
        SolveArtifacts art = solve_scenario(options);
        std::filesystem::create_directories(options.out_dir);
        Json j;
        j["scenario"] = art.scenario.name;
        j["balance"]["queue_residual"] = art.balance.queue;
        j["balance"]["system_residual"] = art.balance.system;
        j["invariants"] = invariants_json(art.checks);
        j["all_pass"] = all_pass(art.checks);
        write_file(options.out_dir / "invariants.json", j.dump(2) + "\n");
        for (const auto& c : art.checks)
            std::cout << (c.pass ? "pass" : "FAIL") << "  " << c.name << "  measured "
                      << c.measured << "  threshold " << c.threshold << "\n";
        if (options.strict && !all_pass(art.checks)) return static_cast<int>(kInvariantFailure);
        return static_cast<int>(kOk);
    });
}

int run_simulate(const RunOptions& options) {
    return guard([&] {
        Scenario scenario = load_scenario(options.scenario_path);
        if (!scenario.sim) throw ConfigError("scenario field 'sim': required for simulate");
        if (options.seed) scenario.sim->seed = *options.seed;
        ScenarioModel model = build_model(scenario, options.grid_h);

        std::filesystem::create_directories(options.out_dir);
        for (int n : scenario.sim->servers) {
            SimScenario sim{n,
                            model.inputs.rate,
                            model.inputs.patience,
                            model.inputs.service,
                            model.inputs.initial,
                            model.grid,
                            scenario.sim->seed,
                            scenario.sim->replications};
            SimEnsemble ens = simulate(sim);
            std::string mean_csv = "t,mean_X,var_X,mean_Q,var_Q,mean_Z,var_Z\n";
            for (std::size_t i = 0; i < model.grid.nodes(); ++i) {
                mean_csv += g17(model.grid.time(i));
                mean_csv += ',' + g17(ens.mean_total[i]) + ',' + g17(ens.var_total[i]);
                mean_csv += ',' + g17(ens.mean_queue[i]) + ',' + g17(ens.var_queue[i]);
                mean_csv += ',' + g17(ens.mean_in_service[i]) + ',' + g17(ens.var_in_service[i]);
                mean_csv += '\n';
            }
            write_file(options.out_dir / ("ensemble_n" + std::to_string(n) + ".csv"), mean_csv);
            std::string reps_csv = "replication,t,X,Q,Z\n";
            for (std::size_t r = 0; r < ens.total.size(); ++r)
                for (std::size_t i = 0; i < model.grid.nodes(); ++i) {
                    reps_csv += std::to_string(r);
                    reps_csv += ',' + g17(model.grid.time(i));
                    reps_csv += ',' + g17(ens.total[r][i]);
                    reps_csv += ',' + g17(ens.queue[r][i]);
                    reps_csv += ',' + g17(ens.in_service[r][i]);
                    reps_csv += '\n';
                }
            write_file(options.out_dir / ("replications_n" + std::to_string(n) + ".csv"), reps_csv);
        }
        return static_cast<int>(kOk);
    });
}

int run_compare(const RunOptions& options) {
    return guard([&] {
        Scenario scenario = load_scenario(options.scenario_path);
        if (!scenario.sim) throw ConfigError("scenario field 'sim': required for compare");
        if (options.seed) scenario.sim->seed = *options.seed;
        ScenarioModel model = build_model(scenario, options.grid_h);
        FluidSolution sol = solve(model.grid, model.inputs, model.solver);

        std::vector<int> servers = scenario.sim->servers;
        std::vector<SimEnsemble> ensembles;
        std::vector<ComparisonReport> reports;
        for (int n : servers) {
            SimScenario sim{n,
                            model.inputs.rate,
                            model.inputs.patience,
                            model.inputs.service,
                            model.inputs.initial,
                            model.grid,
                            scenario.sim->seed,
                            scenario.sim->replications};
            ensembles.push_back(simulate(sim));
            reports.push_back(compare_to_fluid(sol, ensembles.back()));
        }

        std::filesystem::create_directories(options.out_dir);
        std::string csv = "t,fluid_X";
        for (int n : servers) csv += ",mean_X_n" + std::to_string(n);
        csv += '\n';
        for (std::size_t i = 0; i < model.grid.nodes(); ++i) {
            csv += g17(model.grid.time(i));
            csv += ',' + g17(sol.total[i]);
            for (const auto& ens : ensembles) csv += ',' + g17(ens.mean_total[i]);
            csv += '\n';
        }
        write_file(options.out_dir / "comparison.csv", csv);

        Json j;
        j["scenario"] = scenario.name;
        j["replications"] = scenario.sim->replications;
        j["seed"] = scenario.sim->seed;
        Json table = Json::array();
        bool decreasing = true;
        for (std::size_t k = 0; k < servers.size(); ++k) {
            Json row;
            row["n"] = servers[k];
            row["sup_error_X"] = reports[k].sup_total;
            row["sup_error_Q"] = reports[k].sup_queue;
            row["sup_error_Z"] = reports[k].sup_in_service;
            table.push_back(std::move(row));
            if (k > 0 && reports[k].sup_total >= reports[k - 1].sup_total) decreasing = false;
        }
        j["per_n"] = std::move(table);
        j["sup_error_X_decreasing_in_n"] = decreasing;
        write_file(options.out_dir / "comparison_summary.json", j.dump(2) + "\n");
        return static_cast<int>(kOk);
    });
}

int run_equivalence(const RunOptions& options) {
    return guard([&] {
        Scenario scenario = load_scenario(options.scenario_path);
        if (!scenario.elapsed_initial)
            throw ConfigError("scenario field 'initial.elapsed': required for equivalence");
        ScenarioModel model = build_model(scenario, options.grid_h);
        FluidSolution sol = solve(model.grid, model.inputs, model.solver);
        EquivalenceReport rep = equivalence_report(sol, *model.elapsed);

        std::filesystem::create_directories(options.out_dir);
        Json j;
        j["scenario"] = scenario.name;
        j["grid"]["h"] = model.grid.step();
        j["grid"]["T"] = model.grid.horizon();
        j["max_discrepancy"]["queue"] = rep.queue_gap;
        j["max_discrepancy"]["in_service"] = rep.service_gap;
        j["max_discrepancy"]["abandoned"] = rep.abandoned_gap;
        write_file(options.out_dir / "equivalence.json", j.dump(2) + "\n");
        return static_cast<int>(kOk);
    });
}

}  // namespace tvfluid
