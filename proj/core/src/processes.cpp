#include "tvfluid/processes.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "tvfluid/errors.hpp"

namespace tvfluid {

namespace {

// complement extended to negative remaining times (virtual-buffer fluid may
// carry negative residual patience)
double comp_ext(const Distribution& d, double v) { return v <= 0.0 ? 1.0 : d.complement(v); }

// exact arrival-mass increments of B(t) = E(t - omega(t)) between nodes
std::vector<double> buffer_exit_increments(const FluidSolution& sol) {
    const std::size_t n = sol.grid.nodes();
    const RateFunction& rate = *sol.inputs.rate;
    std::vector<double> db(n > 0 ? n - 1 : 0);
    double prev = rate.cumulative_from_zero(sol.grid.time(0) - sol.wait[0]);
    for (std::size_t j = 0; j + 1 < n; ++j) {
        const double cur = rate.cumulative_from_zero(sol.grid.time(j + 1) - sol.wait[j + 1]);
        db[j] = cur - prev;
        prev = cur;
    }
    return db;
}

}  // namespace

const std::vector<double>& waiting_times(const FluidSolution& sol) { return sol.wait; }

double buffer_measure(const FluidSolution& sol, std::size_t node, double x) {
    const double t = sol.grid.time(node);
    const double w = sol.wait[node];
    if (w <= 0.0) return 0.0;
    const Distribution& patience = *sol.inputs.patience;
    const RateFunction& rate = *sol.inputs.rate;
    const double h = sol.grid.step();
    auto integrand = [&](double u) {
        return comp_ext(patience, x + u) * rate.value_extended(t - u);
    };
    double total = 0.0, a = 0.0;
    while (a < w) {
        const double b = std::min(w, a + h);
        total += 0.5 * (integrand(a) + integrand(b)) * (b - a);
        a = b;
    }
    return total;
}

double service_measure(const FluidSolution& sol, std::size_t node, double x) {
    if (x < 0.0) throw DomainError("service_measure: x must be nonnegative");
    const double t = sol.grid.time(node);
    const Distribution& patience = *sol.inputs.patience;
    const Distribution& service = *sol.inputs.service;
    const RateFunction& rate = *sol.inputs.rate;
    double total = sol.inputs.initial.in_service.eval(x + t);
    double prev_e = rate.cumulative_from_zero(sol.grid.time(0) - sol.wait[0]);
    auto phi = [&](std::size_t j) {
        return patience.complement(sol.wait[j]) * service.complement(x + t - sol.grid.time(j));
    };
    for (std::size_t j = 0; j < node; ++j) {
        const double cur_e = rate.cumulative_from_zero(sol.grid.time(j + 1) - sol.wait[j + 1]);
        total += 0.5 * (phi(j) + phi(j + 1)) * (cur_e - prev_e);
        prev_e = cur_e;
    }
    return total;
}

MeasureSnapshot buffer_snapshot(const FluidSolution& sol, std::size_t node) {
    MeasureSnapshot snap;
    snap.kind = MeasureSnapshot::Kind::VirtualBufferResidual;
    snap.node = node;
    const double t = sol.grid.time(node);
    const double h = sol.grid.step();
    const double lo = -(t + sol.inputs.initial.omega0);
    const double hi = sol.grid.horizon() - t;
    for (double x = lo; x <= hi + 1e-12; x += h) {
        snap.x.push_back(x);
        snap.mass.push_back(buffer_measure(sol, node, x));
    }
    return snap;
}

MeasureSnapshot service_snapshot(const FluidSolution& sol, std::size_t node) {
    MeasureSnapshot snap;
    snap.kind = MeasureSnapshot::Kind::InServiceResidual;
    snap.node = node;
    const double t = sol.grid.time(node);
    const double h = sol.grid.step();
    for (double x = 0.0; x <= sol.grid.horizon() - t + 1e-12; x += h) {
        snap.x.push_back(x);
        snap.mass.push_back(service_measure(sol, node, x));
    }
    return snap;
}

FlowLedger build_flow_ledger(const FluidSolution& sol) {
    const std::size_t n = sol.grid.nodes();
    const double h = sol.grid.step();
    const RateFunction& rate = *sol.inputs.rate;
    FlowLedger ledger;
    ledger.arrived.resize(n);
    ledger.left_buffer.resize(n);
    ledger.entered_service = sol.entered;
    ledger.abandoned.resize(n);
    ledger.completed.resize(n);

    for (std::size_t i = 0; i < n; ++i) {
        ledger.arrived[i] = rate.cumulative_from_zero(sol.grid.time(i));
        ledger.left_buffer[i] = rate.cumulative_from_zero(sol.grid.time(i) - sol.wait[i]) -
                                rate.cumulative_from_zero(sol.grid.time(0) - sol.wait[0]);
    }

    // abandonment: double integral with the inner integral reusing the F_t
    // tabulation, i.e. inner(s) = F_s(omega(s)) = lambda(s) - H_s(Q(s))
    std::vector<double> inner(n);
    for (std::size_t i = 0; i < n; ++i)
        inner[i] = rate.value_extended(sol.grid.time(i)) - sol.entry[i];
    ledger.abandoned[0] = 0.0;
    for (std::size_t i = 1; i < n; ++i)
        ledger.abandoned[i] = ledger.abandoned[i - 1] + 0.5 * (inner[i - 1] + inner[i]) * h;

    // completions: S(t) = Zbar(0)((0, t]) + integral_0^t G(t-s) dA(s)
    const double z_at0 = sol.z0_profile[0];
    for (std::size_t i = 0; i < n; ++i) {
        double conv = 0.0;
        for (std::size_t j = 0; j < i; ++j)
            conv += (sol.service_cdf[i - j] + sol.service_cdf[i - j - 1]) *
                    (sol.entered[j + 1] - sol.entered[j]);
        ledger.completed[i] = (z_at0 - sol.z0_profile[i]) + 0.5 * conv;
    }

    const double slack = 10.0 * h * sol.sup_rate();
    auto check_monotone = [&](const std::vector<double>& seq, const char* name) {
        for (std::size_t i = 1; i < seq.size(); ++i)
            if (seq[i] < seq[i - 1] - slack) {
                std::ostringstream msg;
                msg << "flow ledger: " << name << " decreases by " << (seq[i - 1] - seq[i])
                    << " at t = " << sol.grid.time(i) << " (slack " << slack << ")";
                throw ConsistencyError(msg.str());
            }
    };
    check_monotone(ledger.arrived, "arrivals");
    check_monotone(ledger.left_buffer, "buffer departures");
    check_monotone(ledger.entered_service, "service entries");
    check_monotone(ledger.abandoned, "abandonments");
    check_monotone(ledger.completed, "service completions");
    // dB increments may only go negative at the discretization level
    const auto db = buffer_exit_increments(sol);
    for (std::size_t j = 0; j < db.size(); ++j)
        if (db[j] < -slack)
            throw ConsistencyError("flow ledger: buffer-exit increment below -10 h sup lambda");
    return ledger;
}

BalanceResiduals balance_residuals(const FluidSolution& sol, const FlowLedger& ledger) {
    BalanceResiduals res;
    const std::size_t n = sol.grid.nodes();
    for (std::size_t i = 0; i < n; ++i) {
        const double queue_pred = sol.queue[0] + ledger.arrived[i] - ledger.abandoned[i] -
                                  ledger.entered_service[i];
        const double system_pred = sol.total[0] + ledger.arrived[i] - ledger.abandoned[i] -
                                   ledger.completed[i];
        res.queue = std::max(res.queue, std::abs(sol.queue[i] - queue_pred));
        res.system = std::max(res.system, std::abs(sol.total[i] - system_pred));
    }
    return res;
}

}  // namespace tvfluid
