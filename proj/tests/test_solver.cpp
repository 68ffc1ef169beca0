#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <memory>

#include "tvfluid/errors.hpp"
#include "tvfluid/rng.hpp"
#include "tvfluid/scenario.hpp"
#include "tvfluid/solver.hpp"

using namespace tvfluid;

namespace {

std::shared_ptr<const Distribution> expd(double rate) {
    return std::make_shared<Distribution>(Distribution::exponential(rate));
}

ModelInputs drain_inputs() {
    // lambda = 0, empty queue, in-service mass e^{-t}, exponential service
    ModelInputs in;
    in.rate = std::make_shared<RateFunction>(RateFunction::constant(0.0, -1.0, 6.0));
    in.patience = expd(1.0);
    in.service = expd(1.0);
    in.initial.omega0 = 0.0;
    in.initial.in_service = InServiceProfile::exp_decay(1.0, 1.0);
    return in;
}

ModelInputs overloaded_inputs(double horizon) {
    ModelInputs in;
    in.rate = std::make_shared<RateFunction>(RateFunction::constant(2.0, -1.0, horizon));
    in.patience = expd(1.0);
    in.service = expd(1.0);
    in.initial.omega0 = 0.0;
    in.initial.in_service = InServiceProfile::zero();
    return in;
}

}  // namespace

TEST_CASE("pure drain: key equation reduces to the initial profile") {
    const Grid grid(0.01, 6.0);
    FluidSolution sol = solve(grid, drain_inputs(), SolverConfig{});
    double sup = 0.0;
    for (std::size_t i = 0; i < grid.nodes(); ++i)
        sup = std::max(sup, std::abs(sol.total[i] - std::exp(-grid.time(i))));
    CHECK(sup <= 1e-12);
    CHECK(sol.diagnostics.key_equation_residual <= sol.config.picard_tol);
}

TEST_CASE("underloaded start matches the service-complement convolution") {
    // empty start, small constant rate: X(t) = integral_0^t G^c(t-s) lambda(s) ds
    const Grid grid(0.01, 5.0);
    ModelInputs in;
    in.rate = std::make_shared<RateFunction>(RateFunction::constant(0.4, -1.0, 5.0));
    in.patience = expd(1.0);
    in.service = expd(1.0);
    in.initial.in_service = InServiceProfile::zero();
    FluidSolution sol = solve(grid, in, SolverConfig{});
    double sup = 0.0;
    for (std::size_t i = 0; i < grid.nodes(); ++i) {
        const double t = grid.time(i);
        const double closed = 0.4 * (1.0 - std::exp(-t));
        sup = std::max(sup, std::abs(sol.total[i] - closed));
        CHECK(sol.total[i] <= 1.0);
    }
    CHECK(sup <= 1e-4);
}

TEST_CASE("overloaded equilibrium: X -> 2, omega -> ln 2") {
    const Grid grid(0.01, 12.0);
    FluidSolution sol = solve(grid, overloaded_inputs(12.0), SolverConfig{});
    const std::size_t last = grid.nodes() - 1;
    CHECK(sol.total[last] == doctest::Approx(2.0).epsilon(1e-4));
    CHECK(sol.wait[last] == doctest::Approx(std::log(2.0)).epsilon(1e-3));
    // exp/exp reduces to X' = 2 - X from empty: X(t) = 2(1 - e^{-t})
    double sup = 0.0;
    for (std::size_t i = 0; i < grid.nodes(); ++i)
        sup = std::max(sup, std::abs(sol.total[i] - 2.0 * (1.0 - std::exp(-grid.time(i)))));
    CHECK(sup <= 5e-4);
}

TEST_CASE("solution invariants: Q = (X-1)^+ and Z = X ^ 1 exactly") {
    const Grid grid(0.02, 8.0);
    FluidSolution sol = solve(grid, overloaded_inputs(8.0), SolverConfig{});
    for (std::size_t i = 0; i < grid.nodes(); ++i) {
        CHECK(sol.queue[i] == std::max(sol.total[i] - 1.0, 0.0));
        CHECK(sol.in_service[i] == std::min(sol.total[i], 1.0));
        CHECK(sol.total[i] >= 0.0);
    }
}

TEST_CASE("picard operator: fixed point and zero map") {
    const Grid grid(0.01, 2.0);
    ModelInputs in = overloaded_inputs(2.0);
    FluidSolution sol = solve(grid, in, SolverConfig{});
    PicardOperator psi(grid, in, SolverConfig{});

    const std::size_t wlen = static_cast<std::size_t>(psi.window_length() / grid.step());
    std::vector<double> prefix(sol.total.begin(), sol.total.begin() + 1);
    std::vector<double> window(sol.total.begin() + 1, sol.total.begin() + 1 + wlen);
    std::vector<double> mapped = psi.apply(prefix, window, 1);
    for (std::size_t k = 0; k < window.size(); ++k)
        CHECK(std::abs(mapped[k] - window[k]) <= SolverConfig{}.picard_tol);

    ModelInputs zero;
    zero.rate = std::make_shared<RateFunction>(RateFunction::constant(0.0, -1.0, 2.0));
    zero.patience = expd(1.0);
    zero.service = expd(1.0);
    zero.initial.in_service = InServiceProfile::zero();
    PicardOperator psi0(grid, zero, SolverConfig{});
    std::vector<double> zwin(40, 0.0);
    for (double v : psi0.apply({0.0}, zwin, 1)) CHECK(v == 0.0);
}

TEST_CASE("picard operator contracts at the predicted modulus") {
    const Grid grid(0.01, 2.0);
    ModelInputs in = overloaded_inputs(2.0);
    in.initial.omega0 = std::log(4.0 / 3.0);  // Q(0) = 0.5
    in.initial.in_service = InServiceProfile::exp_decay(1.0, 1.0);
    FluidSolution sol = solve(grid, in, SolverConfig{});
    PicardOperator psi(grid, in, SolverConfig{});
    const double b = psi.window_length();
    const std::size_t wlen = static_cast<std::size_t>(b / grid.step());

    // window Lipschitz bound adjusted for the nonzero initial buffer: waits
    // within the window stay below b + omega0 + perturbation margin
    const Distribution& f = *in.patience;
    const double reach = b + in.initial.omega0 + 0.3;
    const double lip = f.lipschitz_constant() / f.complement(reach);
    const double mu = 1.0 / in.service->mean();
    const double kappa_bound =
        lip * in.service->complement_integral(b) * mu / mu + in.service->cdf(b);

    std::vector<double> prefix(sol.total.begin(), sol.total.begin() + 1);
    std::vector<double> base(sol.total.begin() + 1, sol.total.begin() + 1 + wlen);
    CounterRng rng(31, 0);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<double> xa = base, xb = base;
        double dist = 0.0;
        for (std::size_t k = 0; k < wlen; ++k) {
            xa[k] += 0.2 * (rng.uniform() - 0.5);
            xb[k] += 0.2 * (rng.uniform() - 0.5);
            dist = std::max(dist, std::abs(xa[k] - xb[k]));
        }
        auto ya = psi.apply(prefix, xa, 1);
        auto yb = psi.apply(prefix, xb, 1);
        double out = 0.0;
        for (std::size_t k = 0; k < wlen; ++k) out = std::max(out, std::abs(ya[k] - yb[k]));
        CHECK(out <= kappa_bound * dist + 1e-9);
    }
}

TEST_CASE("renewal function") {
    const Grid grid(0.01, 5.0);
    auto u = renewal_function(*expd(1.0), grid);
    CHECK(u[0] == doctest::Approx(1.0));
    // Poisson renewal function: U(t) = 1 + mu t
    double sup = 0.0;
    for (std::size_t i = 0; i < grid.nodes(); ++i)
        sup = std::max(sup, std::abs(u[i] - (1.0 + grid.time(i))));
    CHECK(sup <= 1e-3);

    // uniform service against a refined-grid oracle
    auto uniform_service = Distribution::uniform(0.0, 2.0);
    auto coarse = renewal_function(uniform_service, Grid(0.02, 4.0));
    auto fine = renewal_function(uniform_service, Grid(0.002, 4.0));
    double gap = 0.0;
    for (std::size_t i = 0; i < coarse.size(); ++i)
        gap = std::max(gap, std::abs(coarse[i] - fine[10 * i]));
    CHECK(gap <= 1e-4);
}

TEST_CASE("overloaded prefix: empty prefix and fully-busy profile") {
    const Grid grid(0.01, 2.0);
    // X(0) < 1: empty prefix
    FluidSolution under = solve(grid, drain_inputs(), SolverConfig{});
    auto u = renewal_function(*under.inputs.service, grid);
    CHECK(overloaded_prefix_deviation(under, u) == 0.0);

    // Zbar(0)(C_t) == 1: nothing completes, a stays 0 on the prefix
    ModelInputs busy = overloaded_inputs(2.0);
    busy.initial.omega0 = std::log(4.0 / 3.0);
    busy.initial.in_service = InServiceProfile::table({{0.0, 1.0}, {2.0, 1.0}});
    FluidSolution sol = solve(grid, busy, SolverConfig{});
    auto u2 = renewal_function(*sol.inputs.service, grid);
    CHECK(overloaded_prefix_deviation(sol, u2) <= 10.0 * grid.step() * 2.0);
    for (std::size_t i = 0; i < grid.nodes(); ++i)
        CHECK(std::abs(sol.entered[i]) <= 10.0 * grid.step() * 2.0);
}

TEST_CASE("overloaded prefix deviation shrinks under refinement") {
    ModelInputs in = overloaded_inputs(6.0);
    in.initial.omega0 = std::log(4.0 / 3.0);
    in.initial.in_service = InServiceProfile::exp_decay(1.0, 1.0);
    auto dev_at = [&](double h) {
        const Grid grid(h, 6.0);
        FluidSolution sol = solve(grid, in, SolverConfig{});
        return overloaded_prefix_deviation(sol, renewal_function(*in.service, grid));
    };
    const double dev1 = dev_at(0.02);
    const double dev4 = dev_at(0.005);
    CHECK(dev1 <= 10.0 * 0.02);
    CHECK(dev1 >= 3.5 * dev4);  // quartering h shrinks the gap well past 4x
}

TEST_CASE("time shift: null shift reproduces the solution") {
    const Grid grid(0.01, 4.0);
    ModelInputs in = overloaded_inputs(4.0);
    in.initial.omega0 = std::log(4.0 / 3.0);
    in.initial.in_service = InServiceProfile::exp_decay(1.0, 1.0);
    FluidSolution sol = solve(grid, in, SolverConfig{});
    FluidSolution back = time_shift(sol, std::size_t{0});
    double sup = 0.0;
    for (std::size_t i = 0; i < grid.nodes(); ++i)
        sup = std::max(sup, std::abs(back.total[i] - sol.total[i]));
    CHECK(sup <= 1e-12);
}

TEST_CASE("time shift: pure drain equals the shifted profile") {
    const Grid grid(0.01, 6.0);
    FluidSolution sol = solve(grid, drain_inputs(), SolverConfig{});
    FluidSolution shifted = time_shift(sol, std::size_t{200});  // tau = 2
    double sup = 0.0;
    for (std::size_t i = 0; i < shifted.grid.nodes(); ++i)
        sup = std::max(sup, std::abs(shifted.total[i] - std::exp(-(2.0 + shifted.grid.time(i)))));
    CHECK(sup <= 1e-10);
}

TEST_CASE("time shift rejects off-grid times") {
    const Grid grid(0.01, 2.0);
    FluidSolution sol = solve(grid, drain_inputs(), SolverConfig{});
    CHECK_THROWS_AS(time_shift_at(sol, 0.015), DomainError);
    CHECK_NOTHROW(time_shift_at(sol, 1.0));
}

TEST_CASE("uniqueness probe: distinct starting guesses meet") {
    const Grid grid(0.01, 5.0);
    ModelInputs in = overloaded_inputs(5.0);
    SolverConfig zero_start;
    zero_start.initial_guess = SolverConfig::Guess::Zero;
    SolverConfig high_start;
    high_start.initial_guess = SolverConfig::Guess::Elevated;
    FluidSolution a = solve(grid, in, zero_start);
    FluidSolution b = solve(grid, in, high_start);
    double sup = 0.0;
    for (std::size_t i = 0; i < grid.nodes(); ++i)
        sup = std::max(sup, std::abs(a.total[i] - b.total[i]));
    CHECK(sup <= 2.0 * zero_start.picard_tol);
}

TEST_CASE("divergence error carries the last residual") {
    const Grid grid(0.01, 5.0);
    SolverConfig cfg;
    cfg.max_iters = 2;
    try {
        solve(grid, overloaded_inputs(5.0), cfg);
        FAIL("expected DivergenceError");
    } catch (const DivergenceError& e) {
        CHECK(e.last_residual > 0.0);
    }
}

TEST_CASE("window collapse below h is a configuration error") {
    const Grid grid(0.01, 5.0);
    SolverConfig cfg;
    cfg.kappa_target = 1e-4;
    CHECK_THROWS_AS(solve(grid, overloaded_inputs(5.0), cfg), ConfigError);
}

TEST_CASE("window honors the M cap from the proof") {
    const Grid grid(0.01, 5.0);
    ModelInputs in = overloaded_inputs(5.0);
    SolverConfig cfg;
    cfg.window_cap = 0.2;
    FluidSolution sol = solve(grid, in, cfg);
    CHECK(sol.diagnostics.window_length <= 0.1 + 1e-12);  // b <= M / 2
    CHECK(sol.diagnostics.key_equation_residual <= cfg.picard_tol);
}

TEST_CASE("non-idling initial state is enforced") {
    const Grid grid(0.01, 2.0);
    ModelInputs in = overloaded_inputs(2.0);
    in.initial.omega0 = 0.5;                            // Q(0) > 0
    in.initial.in_service = InServiceProfile::zero();   // but idle servers
    CHECK_THROWS_AS(solve(grid, in, SolverConfig{}), ConfigError);
}
