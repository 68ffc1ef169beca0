#pragma once

#include <memory>
#include <utility>
#include <vector>

#include "tvfluid/distribution.hpp"
#include "tvfluid/rate.hpp"

namespace tvfluid {

/// The initial in-service profile t -> Zbar(0)(C_t): mass in service at time 0
/// with remaining service time greater than t. Nonincreasing, no atoms,
/// value at 0 is Z(0) <= 1.
class InServiceProfile {
public:
    enum class Kind { Zero, ExpDecay, Table, EquilibriumTail };

    static InServiceProfile zero();
    /// mass * exp(-rate * t)
    static InServiceProfile exp_decay(double mass, double rate);
    /// Linear interpolation through (t, mass) knots; constant after the last knot.
    static InServiceProfile table(std::vector<std::pair<double, double>> knots);
    /// mass * (1 - G_e(t)): the stationary residual-service profile.
    static InServiceProfile equilibrium_tail(double mass, std::shared_ptr<const Distribution> service);

    double eval(double t) const;
    double initial_mass() const { return eval(0.0); }
    Kind kind() const { return kind_; }

private:
    Kind kind_ = Kind::Zero;
    double mass_ = 0.0;
    double rate_ = 0.0;
    std::vector<double> knot_t_, knot_v_;
    std::shared_ptr<const Distribution> service_;
};

/// Residual-form initial state: the virtual-buffer extent omega(0), the
/// arrival history on [-omega(0), 0] (carried by the RateFunction), and the
/// in-service profile. Q(0) is derived by the solver from
/// Q(0) = integral_0^{omega0} F^c(s) lambda(-s) ds.
struct InitialCondition {
    double omega0 = 0.0;
    InServiceProfile in_service;

    /// Structural checks that need no quadrature: omega0 >= 0 covered by the
    /// rate domain, profile monotone with Z(0) <= 1, no atom larger than
    /// atom_tol over one grid cell. Throws ConfigError.
    void validate(const RateFunction& rate, double h, double horizon,
                  double atom_tol = 0.2) const;

    /// Non-idling coupling at t = 0: if q0 > 0 then Z(0) must equal 1.
    void check_nonidling(double q0, double tol = 1e-6) const;
};

}  // namespace tvfluid
