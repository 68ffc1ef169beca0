#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "tvfluid/initial_condition.hpp"
#include "tvfluid/solver.hpp"

namespace tvfluid {

/// Piecewise-linear density table on [x_0, x_last]; zero outside.
class DensityTable {
public:
    DensityTable() = default;
    explicit DensityTable(std::vector<std::pair<double, double>> knots);

    bool empty() const;
    double eval(double x) const;
    double integral() const;                 // total mass
    double integral_to(double x) const;      // closed-form prefix mass
    double support_end() const;

    const std::vector<double>& xs() const { return x_; }
    const std::vector<double>& ys() const { return y_; }

private:
    std::vector<double> x_, y_;
    std::vector<double> cum_;
};

/// Elapsed-form initial state: age densities of the queue (r(0,.) on
/// [0, w0]) and of the servers (z(0,.)).
struct ElapsedInitialCondition {
    DensityTable queue_age;    // r(0, x)
    DensityTable service_age;  // z(0, x)
};

/// Correspondence to the residual form: the pre-0 arrival rate
/// lambda(s) = r(0,-s) / F^c(-s) appended to the rate profile,
/// omega(0) = w0, and Zbar(0)(C_x) = integral (G^c(s+x)/G^c(s)) z(0,s) ds
/// tabulated on the grid. Throws ConfigError where a complement vanishes on
/// the support of the corresponding density.
struct ResidualCorrespondence {
    std::shared_ptr<const RateFunction> rate;  // history-extended rate
    InitialCondition initial;
};
ResidualCorrespondence to_residual(const ElapsedInitialCondition& eic,
                                   const RateFunction& rate,
                                   const Distribution& patience,
                                   const Distribution& service,
                                   const Grid& grid);

/// Rbar_a(t)([0,x]) = integral_{t-x}^t F^c(t-s) dE(s), by direct quadrature
/// (independent of the kernel tables).
double queue_age_mass(const FluidSolution& sol, std::size_t node, double x);

/// Zbar_a(t)([0,x]) = integral_0^{(x-t)^+} (G^c(s+t)/G^c(s)) z(0,s) ds
///                  + integral_{(t-x)^+}^t G^c(t-s) dA(s).
double service_age_mass(const FluidSolution& sol, const ElapsedInitialCondition& eic,
                        std::size_t node, double x);

/// Cumulative abandonment via the hazard-rate route
/// L(t) = integral_0^t integral_0^{omega(s)} (f/F^c)(x) r(s,x) dx ds with
/// r(s,x) = F^c(x) lambda(s-x).
std::vector<double> abandonment_path(const FluidSolution& sol);

struct EquivalenceReport {
    double queue_gap = 0.0;       // sup_t |Q via ages - Q via residuals|
    double service_gap = 0.0;     // sup_t |Z via ages - Z via residuals|
    double abandoned_gap = 0.0;   // sup_t |L via ages - L via residuals|
};

/// Solves once through the correspondence and evaluates both formulations'
/// Q, Z, L at every node.
EquivalenceReport equivalence_report(const FluidSolution& sol,
                                     const ElapsedInitialCondition& eic);

}  // namespace tvfluid
