#include "tvfluid/rate.hpp"

#include <algorithm>
#include <cmath>

#include "tvfluid/errors.hpp"

namespace tvfluid {

RateFunction::RateFunction(std::vector<double> times, std::vector<double> values)
    : times_(std::move(times)), values_(std::move(values)) {
    if (times_.size() < 2 || times_.size() != values_.size())
        throw ConfigError("rate: need at least two (t, lambda) breakpoints");
    for (std::size_t i = 1; i < times_.size(); ++i)
        if (!(times_[i] > times_[i - 1]))
            throw ConfigError("rate: breakpoint times must strictly increase");
    for (double v : values_)
        if (!(v >= 0.0) || !std::isfinite(v))
            throw ConfigError("rate: lambda must be finite and nonnegative");
    cum_.resize(times_.size(), 0.0);
    for (std::size_t i = 1; i < times_.size(); ++i)
        cum_[i] = cum_[i - 1] + 0.5 * (values_[i - 1] + values_[i]) * (times_[i] - times_[i - 1]);
}

RateFunction RateFunction::constant(double value, double t_min, double t_max) {
    return RateFunction({t_min, t_max}, {value, value});
}

double RateFunction::value(double t) const {
    if (t < times_.front() - 1e-12 || t > times_.back() + 1e-12)
        throw DomainError("rate: time outside the profile domain");
    return value_extended(t);
}

double RateFunction::value_extended(double t) const {
    if (t <= times_.front()) return t < times_.front() ? 0.0 : values_.front();
    if (t >= times_.back()) return values_.back();
    auto it = std::upper_bound(times_.begin(), times_.end(), t);
    const std::size_t i = static_cast<std::size_t>(it - times_.begin());
    const double f = (t - times_[i - 1]) / (times_[i] - times_[i - 1]);
    return values_[i - 1] + f * (values_[i] - values_[i - 1]);
}

double RateFunction::segment_integral(std::size_t seg, double a, double b) const {
    // exact integral of the affine segment over [a, b] within segment seg
    const double t0 = times_[seg], t1 = times_[seg + 1];
    const double v0 = values_[seg], v1 = values_[seg + 1];
    const double slope = (v1 - v0) / (t1 - t0);
    auto antider = [&](double t) {
        const double d = t - t0;
        return v0 * d + 0.5 * slope * d * d;
    };
    return antider(b) - antider(a);
}

double RateFunction::cumulative(double t1, double t2) const {
    if (t1 > t2) throw DomainError("rate.cumulative: t1 must not exceed t2");
    if (t1 < times_.front() - 1e-12 || t2 > times_.back() + 1e-12)
        throw DomainError("rate.cumulative: interval outside the profile domain");
    t1 = std::max(t1, times_.front());
    t2 = std::min(t2, times_.back());
    if (t1 == t2) return 0.0;
    auto seg_of = [&](double t) {
        auto it = std::upper_bound(times_.begin(), times_.end(), t);
        std::size_t i = static_cast<std::size_t>(it - times_.begin());
        return std::min(std::max<std::size_t>(i, 1), times_.size() - 1) - 1;
    };
    const std::size_t s1 = seg_of(t1), s2 = seg_of(t2);
    if (s1 == s2) return segment_integral(s1, t1, t2);
    double total = segment_integral(s1, t1, times_[s1 + 1]);
    total += cum_[s2] - cum_[s1 + 1];
    total += segment_integral(s2, times_[s2], t2);
    return total;
}

double RateFunction::cumulative_from_zero(double t) const {
    const double lo = std::max(times_.front(), std::min(0.0, t));
    const double hi = std::min(times_.back(), std::max(0.0, t));
    const double v = hi > lo ? cumulative(lo, hi) : 0.0;
    return t >= 0.0 ? v : -v;
}

double RateFunction::sup(double t1, double t2) const {
    t1 = std::max(t1, times_.front());
    t2 = std::min(t2, times_.back());
    if (t1 > t2) return 0.0;
    double m = std::max(value_extended(t1), value_extended(t2));
    for (std::size_t i = 0; i < times_.size(); ++i)
        if (times_[i] > t1 && times_[i] < t2) m = std::max(m, values_[i]);
    return m;
}

RateFunction RateFunction::shifted(double tau) const {
    std::vector<double> t(times_);
    for (double& x : t) x -= tau;
    return RateFunction(std::move(t), values_);
}

}  // namespace tvfluid
