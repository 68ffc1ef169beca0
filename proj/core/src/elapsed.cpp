#include "tvfluid/elapsed.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "tvfluid/errors.hpp"
#include "tvfluid/processes.hpp"

namespace tvfluid {

DensityTable::DensityTable(std::vector<std::pair<double, double>> knots) {
    if (knots.size() == 1) throw ConfigError("density table: need at least two knots");
    for (auto& [x, y] : knots) {
        if (x < 0.0) throw ConfigError("density table: ages must be nonnegative");
        if (y < 0.0) throw ConfigError("density table: density must be nonnegative");
        x_.push_back(x);
        y_.push_back(y);
    }
    for (std::size_t i = 1; i < x_.size(); ++i)
        if (!(x_[i] > x_[i - 1]))
            throw ConfigError("density table: ages must strictly increase");
    if (!x_.empty()) {
        cum_.resize(x_.size(), 0.0);
        for (std::size_t i = 1; i < x_.size(); ++i)
            cum_[i] = cum_[i - 1] + 0.5 * (y_[i - 1] + y_[i]) * (x_[i] - x_[i - 1]);
    }
}

bool DensityTable::empty() const { return x_.empty() || cum_.back() == 0.0; }

double DensityTable::eval(double x) const {
    if (x_.empty() || x < x_.front() || x > x_.back()) return 0.0;
    auto it = std::upper_bound(x_.begin(), x_.end(), x);
    std::size_t i = static_cast<std::size_t>(it - x_.begin());
    if (i == 0) return y_.front();
    if (i == x_.size()) return y_.back();
    const double f = (x - x_[i - 1]) / (x_[i] - x_[i - 1]);
    return y_[i - 1] + f * (y_[i] - y_[i - 1]);
}

double DensityTable::integral() const { return x_.empty() ? 0.0 : cum_.back(); }

double DensityTable::integral_to(double x) const {
    if (x_.empty() || x <= x_.front()) return 0.0;
    if (x >= x_.back()) return cum_.back();
    auto it = std::upper_bound(x_.begin(), x_.end(), x);
    const std::size_t i = static_cast<std::size_t>(it - x_.begin());
    const double w = x - x_[i - 1];
    return cum_[i - 1] + 0.5 * (y_[i - 1] + eval(x)) * w;
}

double DensityTable::support_end() const { return x_.empty() ? 0.0 : x_.back(); }

namespace {

// quadrature nodes over [0, end]: grid steps joined with the table knots so
// every kink of the integrand is a node
std::vector<double> quad_nodes(const DensityTable& tab, double h, double end) {
    std::set<double> pts;
    pts.insert(0.0);
    pts.insert(end);
    for (double a = h; a < end; a += h) pts.insert(a);
    for (double k : tab.xs())
        if (k > 0.0 && k < end) pts.insert(k);
    return {pts.begin(), pts.end()};
}

}  // namespace

ResidualCorrespondence to_residual(const ElapsedInitialCondition& eic, const RateFunction& rate,
                                   const Distribution& patience, const Distribution& service,
                                   const Grid& grid) {
    const double h = grid.step();
    const double w0 = eic.queue_age.empty() ? 0.0 : eic.queue_age.support_end();

    // the correspondence rate r(0,-s)/F^c(-s) is undefined where F^c vanishes
    for (double x : eic.queue_age.xs())
        if (eic.queue_age.eval(x) > 0.0 && patience.complement(x) <= 0.0)
            throw ConfigError("correspondence: queue-age density supported where F^c = 0");
    for (double x : eic.service_age.xs())
        if (eic.service_age.eval(x) > 0.0 && service.complement(x) <= 0.0)
            throw ConfigError("correspondence: service-age density supported where G^c = 0");

    // history rate on [-w0, 0): lambda(s) = r(0,-s)/F^c(-s), sampled at grid
    // resolution; the ramp onto lambda(0+) is squeezed into h/1000 so a
    // genuine jump at 0 costs O(h^3) in the kernels
    const double ramp = h * 1e-3;
    const double history = w0 > ramp ? w0 : 0.0;
    std::vector<double> times, values;
    auto history_rate = [&](double age) {
        const double fc = patience.complement(age);
        return fc > 0.0 ? eic.queue_age.eval(age) / fc : 0.0;
    };
    if (history > 0.0) {
        for (double s = -history; s < -ramp - 1e-15; s += h) {
            times.push_back(s);
            values.push_back(history_rate(-s));
        }
        times.push_back(-ramp);
        values.push_back(history_rate(ramp));
    }
    times.push_back(0.0);
    values.push_back(rate.value_extended(0.0));
    for (std::size_t i = 0; i < rate.times().size(); ++i) {
        if (rate.times()[i] > 0.0) {
            times.push_back(rate.times()[i]);
            values.push_back(rate.values()[i]);
        }
    }

    ResidualCorrespondence out;
    out.rate = std::make_shared<RateFunction>(std::move(times), std::move(values));
    out.initial.omega0 = history;

    // Zbar(0)(C_x) = integral (G^c(s+x)/G^c(s)) z(0,s) ds tabulated on the grid
    if (eic.service_age.empty()) {
        out.initial.in_service = InServiceProfile::zero();
    } else {
        const auto s_nodes = quad_nodes(eic.service_age, h, eic.service_age.support_end());
        std::vector<std::pair<double, double>> knots(grid.nodes());
        double prev = 2.0;
        for (std::size_t i = 0; i < grid.nodes(); ++i) {
            const double x = grid.time(i);
            double acc = 0.0;
            for (std::size_t k = 0; k + 1 < s_nodes.size(); ++k) {
                auto f = [&](double s) {
                    const double gc = service.complement(s);
                    return gc > 0.0
                               ? service.complement(s + x) / gc * eic.service_age.eval(s)
                               : 0.0;
                };
                acc += 0.5 * (f(s_nodes[k]) + f(s_nodes[k + 1])) * (s_nodes[k + 1] - s_nodes[k]);
            }
            acc = std::min(std::min(acc, 1.0), prev);
            knots[i] = {x, acc};
            prev = acc;
        }
        out.initial.in_service = InServiceProfile::table(std::move(knots));
    }
    return out;
}

double queue_age_mass(const FluidSolution& sol, std::size_t node, double x) {
    if (x < 0.0) throw DomainError("queue_age_mass: age bound must be nonnegative");
    const double t = sol.grid.time(node);
    const double h = sol.grid.step();
    const RateFunction& rate = *sol.inputs.rate;
    const Distribution& patience = *sol.inputs.patience;
    const double end = std::min(x, t + sol.inputs.initial.omega0);
    auto f = [&](double u) { return patience.complement(u) * rate.value_extended(t - u); };
    double total = 0.0, a = 0.0;
    while (a < end) {
        const double b = std::min(end, a + h);
        total += 0.5 * (f(a) + f(b)) * (b - a);
        a = b;
    }
    return total;
}

double service_age_mass(const FluidSolution& sol, const ElapsedInitialCondition& eic,
                        std::size_t node, double x) {
    if (x < 0.0) throw DomainError("service_age_mass: age bound must be nonnegative");
    const double t = sol.grid.time(node);
    const double h = sol.grid.step();
    const Distribution& service = *sol.inputs.service;
    double total = 0.0;

    // initial servers still in service with age <= x: ages started above 0
    const double init_end = std::min(std::max(x - t, 0.0), eic.service_age.support_end());
    if (init_end > 0.0) {
        const auto s_nodes = quad_nodes(eic.service_age, h, init_end);
        auto f = [&](double s) {
            const double gc = service.complement(s);
            return gc > 0.0 ? service.complement(s + t) / gc * eic.service_age.eval(s) : 0.0;
        };
        for (std::size_t k = 0; k + 1 < s_nodes.size(); ++k)
            total += 0.5 * (f(s_nodes[k]) + f(s_nodes[k + 1])) * (s_nodes[k + 1] - s_nodes[k]);
    }

    // fluid that entered service during [(t-x)^+, t]
    const double lo = std::max(t - x, 0.0);
    auto entered_at = [&](double s) {
        // linear interpolation of the cumulative entered-service mass
        const double pos = s / h;
        std::size_t j = std::min(static_cast<std::size_t>(pos), sol.grid.nodes() - 2);
        const double f = pos - static_cast<double>(j);
        return sol.entered[j] + f * (sol.entered[j + 1] - sol.entered[j]);
    };
    double prev_s = lo;
    double prev_a = entered_at(lo);
    const std::size_t j0 = static_cast<std::size_t>(std::ceil(lo / h - 1e-12));
    for (std::size_t j = j0; j <= node; ++j) {
        const double s = sol.grid.time(j);
        if (s <= prev_s + 1e-15) continue;
        const double a = sol.entered[j];
        total += 0.5 * (service.complement(t - prev_s) + service.complement(t - s)) * (a - prev_a);
        prev_s = s;
        prev_a = a;
    }
    return total;
}

std::vector<double> abandonment_path(const FluidSolution& sol) {
    const std::size_t n = sol.grid.nodes();
    const double h = sol.grid.step();
    const Distribution& patience = *sol.inputs.patience;
    const RateFunction& rate = *sol.inputs.rate;
    // inner(s) = integral_0^{omega(s)} hazard(x) r(s,x) dx with
    // r(s,x) = F^c(x) lambda(s-x); the hazard cancellation is exercised
    // literally, guarded where F^c vanishes
    std::vector<double> inner(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = sol.grid.time(i);
        const double w = sol.wait[i];
        auto f = [&](double xx) {
            const double fc = patience.complement(xx);
            if (fc <= 0.0) return 0.0;
            const double hazard = patience.density(xx) / fc;
            return hazard * fc * rate.value_extended(t - xx);
        };
        double acc = 0.0, a = 0.0;
        while (a < w) {
            const double b = std::min(w, a + h);
            acc += 0.5 * (f(a) + f(b)) * (b - a);
            a = b;
        }
        inner[i] = acc;
    }
    std::vector<double> out(n, 0.0);
    for (std::size_t i = 1; i < n; ++i)
        out[i] = out[i - 1] + 0.5 * (inner[i - 1] + inner[i]) * h;
    return out;
}

EquivalenceReport equivalence_report(const FluidSolution& sol,
                                     const ElapsedInitialCondition& eic) {
    EquivalenceReport report;
    const std::size_t n = sol.grid.nodes();
    const FlowLedger ledger = build_flow_ledger(sol);
    const std::vector<double> aband = abandonment_path(sol);
    const double x_inf = sol.grid.horizon() + eic.service_age.support_end() + 1.0;
    for (std::size_t i = 0; i < n; ++i) {
        report.queue_gap = std::max(
            report.queue_gap, std::abs(queue_age_mass(sol, i, sol.wait[i]) - sol.queue[i]));
        report.service_gap = std::max(
            report.service_gap,
            std::abs(service_age_mass(sol, eic, i, x_inf) - sol.in_service[i]));
        report.abandoned_gap =
            std::max(report.abandoned_gap, std::abs(aband[i] - ledger.abandoned[i]));
    }
    return report;
}

}  // namespace tvfluid
