#include "tvfluid/invariants.hpp"

#include <algorithm>
#include <cmath>

namespace tvfluid {

std::vector<InvariantCheck> check_invariants(const FluidSolution& sol) {
    std::vector<InvariantCheck> out;
    const std::size_t n = sol.grid.nodes();
    const double h = sol.grid.step();
    const double sup_lambda = sol.sup_rate();
    const double mu = sol.service_mu();

    auto push = [&](const std::string& name, double measured, double threshold) {
        out.push_back({name, measured <= threshold, measured, threshold});
    };

    push("key_equation_residual", sol.diagnostics.key_equation_residual,
         sol.config.picard_tol);

    // entered-service mass nondecreasing
    {
        double worst = 0.0, peak = sol.entered[0];
        for (std::size_t i = 1; i < n; ++i) {
            worst = std::max(worst, peak - sol.entered[i]);
            peak = std::max(peak, sol.entered[i]);
        }
        push("entered_service_monotone", worst, 10.0 * h * sup_lambda + 1e-12);
    }

    // queue bound (X-1)^+ <= N_{F,t}
    {
        double worst = -1e300;
        for (std::size_t i = 0; i < n; ++i)
            worst = std::max(worst, sol.queue[i] - sol.kernels->peak_mass(i));
        push("queue_upper_bound", worst, 10.0 * h * sup_lambda + 1e-12);
    }

    // arrival epoch t - omega(t) nondecreasing
    {
        double worst = 0.0, peak = sol.grid.time(0) - sol.wait[0];
        for (std::size_t i = 1; i < n; ++i) {
            const double cur = sol.grid.time(i) - sol.wait[i];
            worst = std::max(worst, peak - cur);
            peak = std::max(peak, cur);
        }
        push("arrival_epoch_monotone", worst, 10.0 * h + 1e-12);
    }

    // bounded increments |dX| <= (sup lambda + 2 mu + 1) h
    {
        double worst = 0.0;
        for (std::size_t i = 1; i < n; ++i)
            worst = std::max(worst, std::abs(sol.total[i] - sol.total[i - 1]));
        push("bounded_increments", worst, (sup_lambda + 2.0 * mu + 1.0) * h);
    }

    // non-idling: queue positive only at full capacity
    {
        double worst = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            worst = std::max(worst, sol.queue[i] * (1.0 - sol.in_service[i]));
        push("non_idling", worst, 10.0 * h);
    }

    // balance residuals
    {
        const FlowLedger ledger = build_flow_ledger(sol);
        const BalanceResiduals res = balance_residuals(sol, ledger);
        push("queue_balance", res.queue, 10.0 * h * (sup_lambda + mu));
        push("system_balance", res.system, 10.0 * h * (sup_lambda + mu));
    }

    return out;
}

bool all_pass(const std::vector<InvariantCheck>& checks) {
    return std::all_of(checks.begin(), checks.end(),
                       [](const InvariantCheck& c) { return c.pass; });
}

}  // namespace tvfluid
