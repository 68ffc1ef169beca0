#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tvfluid/distribution.hpp"
#include "tvfluid/elapsed.hpp"
#include "tvfluid/initial_condition.hpp"
#include "tvfluid/rate.hpp"
#include "tvfluid/solver.hpp"

namespace tvfluid {

/// Parsed scenario file: everything needed to run a solve, a simulation, or
/// an equivalence report. Exactly one of residual_initial / elapsed_initial
/// is present.
struct Scenario {
    struct DistSpec {
        std::string family;
        double rate = 0.0;                       // exponential / erlang
        int shape = 0;                           // erlang
        std::vector<double> weights, rates;      // hyperexponential
        double lower = 0.0, upper = 0.0;         // uniform
        double wb_shape = 0.0, wb_scale = 0.0;   // weibull-continuous
        std::vector<std::pair<double, double>> cdf_knots;  // empirical-smooth
        std::optional<double> lipschitz;
    };
    struct ResidualIcSpec {
        double omega0 = 0.0;
        std::string profile_kind;  // zero | exp_decay | table | equilibrium_tail
        double mass = 0.0, decay = 0.0;
        std::vector<std::pair<double, double>> knots;
    };
    struct ElapsedIcSpec {
        std::vector<std::pair<double, double>> queue_age_knots;
        std::vector<std::pair<double, double>> service_age_knots;
    };
    struct SimSpec {
        std::vector<int> servers;
        int replications = 0;
        std::uint64_t seed = 0;
    };

    std::string name;
    std::vector<std::pair<double, double>> rate_breakpoints;  // (t, lambda)
    DistSpec patience;
    DistSpec service;
    std::optional<ResidualIcSpec> residual_initial;
    std::optional<ElapsedIcSpec> elapsed_initial;
    double grid_h = 0.0;
    double grid_horizon = 0.0;
    SolverConfig solver;
    std::optional<SimSpec> sim;
};

/// Parse and structurally validate; ConfigError messages carry the offending
/// field path (e.g. "sim.replications").
Scenario load_scenario(const std::filesystem::path& path);
Scenario parse_scenario(const std::string& json_text);
std::string emit_scenario(const Scenario& scenario);  // round-trips via parse

/// Materialized model objects for a scenario (after the elapsed->residual
/// correspondence when the scenario is in elapsed form).
struct ScenarioModel {
    Grid grid;
    ModelInputs inputs;
    SolverConfig solver;
    std::optional<ElapsedInitialCondition> elapsed;
    std::optional<Scenario::SimSpec> sim;
};
ScenarioModel build_model(const Scenario& scenario,
                          std::optional<double> grid_h_override = std::nullopt);

std::shared_ptr<const Distribution> build_distribution(const Scenario::DistSpec& spec,
                                                       const std::string& field_path);

}  // namespace tvfluid
