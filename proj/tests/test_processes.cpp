#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <memory>

#include "tvfluid/invariants.hpp"
#include "tvfluid/processes.hpp"
#include "tvfluid/scenario.hpp"
#include "tvfluid/solver.hpp"

using namespace tvfluid;

namespace {

std::shared_ptr<const Distribution> expd(double rate) {
    return std::make_shared<Distribution>(Distribution::exponential(rate));
}

ModelInputs drain_inputs(double horizon) {
    ModelInputs in;
    in.rate = std::make_shared<RateFunction>(RateFunction::constant(0.0, -1.0, horizon));
    in.patience = expd(1.0);
    in.service = expd(1.0);
    in.initial.in_service = InServiceProfile::exp_decay(1.0, 1.0);
    return in;
}

ModelInputs overloaded_inputs(double horizon) {
    ModelInputs in;
    in.rate = std::make_shared<RateFunction>(RateFunction::constant(2.0, -1.0, horizon));
    in.patience = expd(1.0);
    in.service = expd(1.0);
    in.initial.in_service = InServiceProfile::zero();
    return in;
}

FluidSolution solve_scenario_file(const char* stem, double horizon_override = 0.0) {
    Scenario sc = load_scenario(std::string(TVFLUID_SCENARIO_DIR) + "/" + stem + ".json");
    if (horizon_override > 0.0) sc.grid_horizon = horizon_override;
    ScenarioModel m = build_model(sc, std::nullopt);
    return solve(m.grid, m.inputs, m.solver);
}

}  // namespace

TEST_CASE("waiting time is zero while underloaded and solves Q = F_{d,t}(omega)") {
    const Grid grid(0.01, 8.0);
    FluidSolution sol = solve(grid, overloaded_inputs(8.0), SolverConfig{});
    for (std::size_t i = 0; i < grid.nodes(); ++i) {
        if (sol.total[i] <= 1.0) {
            CHECK(sol.wait[i] == 0.0);
        } else {
            CHECK(sol.kernels->queued_mass(i, sol.wait[i]) ==
                  doctest::Approx(sol.queue[i]).epsilon(1e-9));
        }
    }
    // equilibrium: q* = 1 gives omega* = ln 2 for lambda = 2, F = exp(1)
    CHECK(sol.wait[grid.nodes() - 1] == doctest::Approx(std::log(2.0)).epsilon(2e-3));
}

TEST_CASE("waiting time caps at the buffer age bound") {
    // the whole initial history is queued, so omega(0) = omega0 exactly
    FluidSolution sol = solve_scenario_file("uniform_drain", 4.0);
    CHECK(sol.wait[0] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("virtual-buffer measure: empty buffer, support cap, conservation") {
    const Grid grid(0.01, 6.0);
    FluidSolution under = solve(grid, drain_inputs(6.0), SolverConfig{});
    for (std::size_t i : {0u, 100u, 400u})
        CHECK(buffer_measure(under, i, 0.0) == 0.0);

    FluidSolution sol = solve_scenario_file("uniform_drain", 4.0);
    // x beyond the patience support holds no mass
    CHECK(buffer_measure(sol, 10, sol.inputs.patience->support_end()) == 0.0);
    // conservation at x = 0: the measure recovers Q(t)
    const double h = sol.grid.step();
    for (std::size_t i : {0u, 30u, 90u, 200u})
        CHECK(std::abs(buffer_measure(sol, i, 0.0) - sol.queue[i]) <= 10.0 * h);
}

TEST_CASE("buffer measure is nonincreasing in x down to the total buffer mass") {
    FluidSolution sol = solve_scenario_file("uniform_drain", 4.0);
    const std::size_t node = 50;
    const double t = sol.grid.time(node);
    double prev = 1e300;
    for (double x = -(t + 0.5); x <= 4.0; x += 0.25) {
        const double m = buffer_measure(sol, node, x);
        CHECK(m <= prev + 1e-12);
        prev = m;
    }
    // x -> -inf recovers E(t) - E(t - omega(t))
    const double total = buffer_measure(sol, node, -(t + 0.5) - 5.0);
    const double expect = sol.inputs.rate->cumulative_from_zero(t) -
                          sol.inputs.rate->cumulative_from_zero(t - sol.wait[node]);
    CHECK(total == doctest::Approx(expect).epsilon(1e-6));
}

TEST_CASE("in-service measure: drain carries the initial profile") {
    const Grid grid(0.01, 6.0);
    FluidSolution sol = solve(grid, drain_inputs(6.0), SolverConfig{});
    for (std::size_t i : {0u, 100u, 300u}) {
        const double t = grid.time(i);
        for (double x : {0.0, 0.5, 2.0})
            CHECK(service_measure(sol, i, x) == doctest::Approx(std::exp(-(x + t))).epsilon(1e-12));
    }
    // x -> infinity drains to zero
    CHECK(service_measure(sol, 100, 50.0) <= 1e-9);
}

TEST_CASE("in-service measure conservation and monotonicity") {
    const Grid grid(0.01, 10.0);
    FluidSolution sol = solve(grid, overloaded_inputs(10.0), SolverConfig{});
    const double h = grid.step();
    for (std::size_t i : {50u, 300u, 900u}) {
        CHECK(std::abs(service_measure(sol, i, 0.0) - sol.in_service[i]) <= 10.0 * h);
        double prev = 1e300;
        for (double x = 0.0; x <= 5.0; x += 0.5) {
            const double m = service_measure(sol, i, x);
            CHECK(m <= prev + 1e-12);
            prev = m;
        }
    }
    // overloaded equilibrium: full capacity at x = 0
    CHECK(service_measure(sol, 950, 0.0) == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("snapshots cover the documented ranges") {
    FluidSolution sol = solve_scenario_file("uniform_drain", 4.0);
    const std::size_t node = 100;  // t = 1
    MeasureSnapshot buf = buffer_snapshot(sol, node);
    CHECK(buf.x.front() == doctest::Approx(-(1.0 + 0.5)));
    CHECK(buf.x.back() == doctest::Approx(4.0 - 1.0).epsilon(1e-9));
    for (std::size_t k = 1; k < buf.mass.size(); ++k) CHECK(buf.mass[k] <= buf.mass[k - 1] + 1e-12);
    MeasureSnapshot srv = service_snapshot(sol, node);
    CHECK(srv.x.front() == 0.0);
    for (std::size_t k = 1; k < srv.mass.size(); ++k) CHECK(srv.mass[k] <= srv.mass[k - 1] + 1e-12);
}

TEST_CASE("flow ledger: drain without queue") {
    const Grid grid(0.01, 6.0);
    FluidSolution sol = solve(grid, drain_inputs(6.0), SolverConfig{});
    FlowLedger ledger = build_flow_ledger(sol);
    for (std::size_t i = 0; i < grid.nodes(); ++i) {
        CHECK(ledger.abandoned[i] == 0.0);
        CHECK(ledger.entered_service[i] == 0.0);
        CHECK(ledger.completed[i] ==
              doctest::Approx(1.0 - std::exp(-grid.time(i))).epsilon(1e-12));
    }
}

TEST_CASE("flow ledger: underloaded arrivals all enter service") {
    const Grid grid(0.01, 5.0);
    ModelInputs in;
    in.rate = std::make_shared<RateFunction>(RateFunction::constant(0.4, -1.0, 5.0));
    in.patience = expd(1.0);
    in.service = expd(1.0);
    in.initial.in_service = InServiceProfile::zero();
    FluidSolution sol = solve(grid, in, SolverConfig{});
    FlowLedger ledger = build_flow_ledger(sol);
    for (std::size_t i = 0; i < grid.nodes(); ++i) {
        CHECK(std::abs(ledger.abandoned[i]) <= 1e-12);
        CHECK(ledger.entered_service[i] ==
              doctest::Approx(ledger.arrived[i]).epsilon(1e-12));
    }
}

TEST_CASE("flow ledger: equilibrium abandonment rate equals lambda - mu") {
    const Grid grid(0.01, 12.0);
    FluidSolution sol = solve(grid, overloaded_inputs(12.0), SolverConfig{});
    FlowLedger ledger = build_flow_ledger(sol);
    const std::size_t last = grid.nodes() - 1;
    const double slope = (ledger.abandoned[last] - ledger.abandoned[last - 1]) / grid.step();
    CHECK(slope == doctest::Approx(1.0).epsilon(1e-3));
    // buffer-exit process is nondecreasing up to discretization slack
    const double slack = 10.0 * grid.step() * sol.sup_rate();
    for (std::size_t i = 1; i < grid.nodes(); ++i)
        CHECK(ledger.left_buffer[i] >= ledger.left_buffer[i - 1] - slack);
}

TEST_CASE("balance residuals: trivial drain and generic bounds") {
    const Grid grid(0.01, 6.0);
    FluidSolution drain = solve(grid, drain_inputs(6.0), SolverConfig{});
    BalanceResiduals triv = balance_residuals(drain, build_flow_ledger(drain));
    CHECK(triv.queue <= SolverConfig{}.picard_tol + 10.0 * grid.step());
    CHECK(triv.system <= SolverConfig{}.picard_tol + 10.0 * grid.step());

    FluidSolution sol = solve_scenario_file("sinusoidal_erlang");
    BalanceResiduals res = balance_residuals(sol, build_flow_ledger(sol));
    const double bound = 10.0 * sol.grid.step() * (sol.sup_rate() + sol.service_mu());
    CHECK(res.queue <= bound);
    CHECK(res.system <= bound);
}

TEST_CASE("non-idling coupling holds on a switching scenario") {
    FluidSolution sol = solve_scenario_file("sinusoidal_erlang");
    for (std::size_t i = 0; i < sol.grid.nodes(); ++i)
        CHECK(sol.queue[i] * (1.0 - sol.in_service[i]) <= 10.0 * sol.grid.step());
}

TEST_CASE("invariant suite passes and reports slacks") {
    FluidSolution sol = solve_scenario_file("hyperexp_pulse");
    const auto checks = check_invariants(sol);
    CHECK(all_pass(checks));
    CHECK(checks.size() >= 8);
    for (const auto& c : checks) CHECK(c.measured <= c.threshold);
}
