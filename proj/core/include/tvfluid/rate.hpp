#pragma once

#include <cstddef>
#include <vector>

namespace tvfluid {

/// Piecewise-linear arrival-rate profile lambda(t) on [t_min, t_max].
/// t_min may be negative: the segment on [t_min, 0] is the arrival history of
/// the fluid already present at time 0. Segment integrals are closed-form, so
/// the cumulative process E(t) carries no quadrature error.
///
/// Immutable after construction; concurrent reads are safe.
class RateFunction {
public:
    RateFunction(std::vector<double> times, std::vector<double> values);

    static RateFunction constant(double value, double t_min, double t_max);

    double t_min() const { return times_.front(); }
    double t_max() const { return times_.back(); }

    /// lambda(t); throws DomainError outside [t_min, t_max].
    double value(double t) const;
    /// lambda(t) extended by zero before t_min (kernel lookback use).
    double value_extended(double t) const;

    /// integral_{t1}^{t2} lambda, exact; throws DomainError outside the domain.
    double cumulative(double t1, double t2) const;
    /// E(t) = integral_0^t lambda (signed for t < 0), clamped to the domain.
    double cumulative_from_zero(double t) const;

    /// sup of lambda over [t1, t2] intersected with the domain.
    double sup(double t1, double t2) const;
    double sup() const { return sup(t_min(), t_max()); }

    /// lambda'(s) = lambda(tau + s): breakpoints translated by -tau.
    RateFunction shifted(double tau) const;

    const std::vector<double>& times() const { return times_; }
    const std::vector<double>& values() const { return values_; }

private:
    double segment_integral(std::size_t seg, double a, double b) const;

    std::vector<double> times_;
    std::vector<double> values_;
    std::vector<double> cum_;  // cumulative integral at each breakpoint from t_min
};

}  // namespace tvfluid
