#include "tvfluid/initial_condition.hpp"

#include <algorithm>
#include <cmath>

#include "tvfluid/errors.hpp"

namespace tvfluid {

InServiceProfile InServiceProfile::zero() { return InServiceProfile{}; }

InServiceProfile InServiceProfile::exp_decay(double mass, double rate) {
    if (!(mass >= 0.0) || mass > 1.0 + 1e-12)
        throw ConfigError("in-service profile: mass must lie in [0, 1]");
    if (!(rate > 0.0)) throw ConfigError("in-service profile: decay rate must be positive");
    InServiceProfile p;
    p.kind_ = Kind::ExpDecay;
    p.mass_ = std::min(mass, 1.0);
    p.rate_ = rate;
    return p;
}

InServiceProfile InServiceProfile::table(std::vector<std::pair<double, double>> knots) {
    if (knots.size() < 2) throw ConfigError("in-service profile: need at least two knots");
    InServiceProfile p;
    p.kind_ = Kind::Table;
    for (auto& [t, v] : knots) {
        p.knot_t_.push_back(t);
        p.knot_v_.push_back(v);
    }
    if (p.knot_t_.front() != 0.0)
        throw ConfigError("in-service profile: table must start at t = 0");
    if (p.knot_v_.front() > 1.0 + 1e-12)
        throw ConfigError("in-service profile: mass at 0 must not exceed 1");
    for (std::size_t i = 1; i < p.knot_t_.size(); ++i) {
        if (!(p.knot_t_[i] > p.knot_t_[i - 1]))
            throw ConfigError("in-service profile: knot times must strictly increase");
        if (p.knot_v_[i] > p.knot_v_[i - 1] + 1e-12)
            throw ConfigError("in-service profile: must be nonincreasing");
    }
    for (double v : p.knot_v_)
        if (v < 0.0) throw ConfigError("in-service profile: mass must be nonnegative");
    return p;
}

InServiceProfile InServiceProfile::equilibrium_tail(double mass,
                                                    std::shared_ptr<const Distribution> service) {
    if (!(mass >= 0.0) || mass > 1.0 + 1e-12)
        throw ConfigError("in-service profile: mass must lie in [0, 1]");
    if (!service) throw ConfigError("in-service profile: equilibrium tail needs the service distribution");
    InServiceProfile p;
    p.kind_ = Kind::EquilibriumTail;
    p.mass_ = std::min(mass, 1.0);
    p.service_ = std::move(service);
    return p;
}

double InServiceProfile::eval(double t) const {
    switch (kind_) {
        case Kind::Zero:
            return 0.0;
        case Kind::ExpDecay:
            return mass_ * std::exp(-rate_ * t);
        case Kind::EquilibriumTail:
            return mass_ * (1.0 - service_->equilibrium_cdf(t));
        case Kind::Table: {
            if (t <= knot_t_.front()) return knot_v_.front();
            if (t >= knot_t_.back()) return knot_v_.back();
            auto it = std::upper_bound(knot_t_.begin(), knot_t_.end(), t);
            const std::size_t i = static_cast<std::size_t>(it - knot_t_.begin());
            const double f = (t - knot_t_[i - 1]) / (knot_t_[i] - knot_t_[i - 1]);
            return knot_v_[i - 1] + f * (knot_v_[i] - knot_v_[i - 1]);
        }
    }
    return 0.0;
}

void InitialCondition::validate(const RateFunction& rate, double h, double horizon,
                                double atom_tol) const {
    if (!(omega0 >= 0.0)) throw ConfigError("initial: omega0 must be nonnegative");
    if (omega0 > 0.0 && rate.t_min() > -omega0 + 1e-12)
        throw ConfigError("initial: rate profile must cover the history [-omega0, 0]");
    if (in_service.initial_mass() > 1.0 + 1e-9)
        throw ConfigError("initial: in-service mass exceeds capacity 1");
    // no-atom check: the profile must not drop by more than atom_tol across
    // one grid cell anywhere on [0, T]
    double prev = in_service.eval(0.0);
    const std::size_t nodes = static_cast<std::size_t>(std::llround(horizon / h)) + 1;
    for (std::size_t i = 1; i < nodes; ++i) {
        const double cur = in_service.eval(static_cast<double>(i) * h);
        if (cur > prev + 1e-9)
            throw ConfigError("initial: in-service profile must be nonincreasing");
        if (prev - cur > atom_tol)
            throw ConfigError("initial: in-service profile has an atom-like drop");
        prev = cur;
    }
}

void InitialCondition::check_nonidling(double q0, double tol) const {
    if (q0 > tol && std::abs(in_service.initial_mass() - 1.0) > tol)
        throw ConfigError("initial: positive queue requires all servers busy (Z(0) = 1)");
}

}  // namespace tvfluid
