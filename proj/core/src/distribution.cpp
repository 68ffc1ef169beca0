#include "tvfluid/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tvfluid/errors.hpp"
#include "tvfluid/rng.hpp"

namespace tvfluid {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_nonneg_arg(double x) {
    if (x < 0.0) throw DomainError("lifetime argument must be nonnegative");
}

// e^{-rx} (rx)^m / m! for m = 0..k-1, summed; underflow-safe for rx up to ~700.
double erlang_complement(int k, double rx) {
    double term = std::exp(-rx);
    double sum = term;
    for (int m = 1; m < k; ++m) {
        term *= rx / static_cast<double>(m);
        sum += term;
    }
    return std::min(1.0, sum);
}

// integral_0^x of the Erlang(k, r) complement:
// (1/r) sum_{j=0}^{k-1} [1 - e^{-rx} sum_{m<=j} (rx)^m / m!]
double erlang_complement_integral(int k, double r, double x) {
    const double rx = r * x;
    double term = std::exp(-rx);  // e^{-rx} (rx)^m / m!
    double inner = term;          // partial sum over m <= j
    double total = 0.0;
    for (int j = 0; j < k; ++j) {
        if (j > 0) {
            term *= rx / static_cast<double>(j);
            inner += term;
        }
        total += 1.0 - std::min(1.0, inner);
    }
    return total / r;
}

// 16-point Gauss-Legendre on [a, b].
double gauss16(double a, double b, const auto& f) {
    static const double xs[8] = {0.0950125098376374, 0.2816035507792589, 0.4580167776572274,
                                 0.6178762444026438, 0.7554044083550030, 0.8656312023878318,
                                 0.9445750230732326, 0.9894009349916499};
    static const double ws[8] = {0.1894506104550685, 0.1826034150449236, 0.1691565193950025,
                                 0.1495959888165767, 0.1246289712555339, 0.0951585116824928,
                                 0.0622535239386479, 0.0271524594117541};
    const double c = 0.5 * (a + b), d = 0.5 * (b - a);
    double s = 0.0;
    for (int i = 0; i < 8; ++i)
        s += ws[i] * (f(c - d * xs[i]) + f(c + d * xs[i]));
    return s * d;
}

}  // namespace

Distribution Distribution::exponential(double rate) {
    if (!(rate > 0.0)) throw ConfigError("exponential: rate must be positive");
    Distribution d;
    d.family_ = Family::Exponential;
    d.rates_ = {rate};
    d.mean_ = 1.0 / rate;
    d.support_end_ = kInf;
    d.lipschitz_ = rate;
    return d;
}

Distribution Distribution::erlang(int shape, double rate) {
    if (shape < 1) throw ConfigError("erlang: shape must be >= 1");
    if (!(rate > 0.0)) throw ConfigError("erlang: rate must be positive");
    Distribution d;
    d.family_ = Family::Erlang;
    d.shape_k_ = shape;
    d.rates_ = {rate};
    d.mean_ = static_cast<double>(shape) / rate;
    d.support_end_ = kInf;
    if (shape == 1) {
        d.lipschitz_ = rate;
    } else {
        // density peaks at x = (k-1)/r
        double lg = 0.0;
        for (int m = 2; m < shape; ++m) lg += std::log(static_cast<double>(m));
        const double k1 = static_cast<double>(shape - 1);
        d.lipschitz_ = rate * std::exp(k1 * std::log(k1) - k1 - lg);
    }
    return d;
}

Distribution Distribution::hyperexponential(std::vector<double> weights, std::vector<double> rates) {
    if (weights.empty() || weights.size() != rates.size())
        throw ConfigError("hyperexponential: weights and rates must be nonempty and equal-length");
    double wsum = 0.0;
    for (double w : weights) {
        if (!(w > 0.0)) throw ConfigError("hyperexponential: weights must be positive");
        wsum += w;
    }
    if (std::abs(wsum - 1.0) > 1e-9) throw ConfigError("hyperexponential: weights must sum to 1");
    for (double r : rates)
        if (!(r > 0.0)) throw ConfigError("hyperexponential: rates must be positive");
    Distribution d;
    d.family_ = Family::HyperExponential;
    d.weights_ = std::move(weights);
    d.rates_ = std::move(rates);
    d.mean_ = 0.0;
    d.lipschitz_ = 0.0;  // the mixture density is maximal at 0
    for (std::size_t i = 0; i < d.weights_.size(); ++i) {
        d.mean_ += d.weights_[i] / d.rates_[i];
        d.lipschitz_ += d.weights_[i] * d.rates_[i];
    }
    d.support_end_ = kInf;
    return d;
}

Distribution Distribution::uniform(double lower, double upper) {
    if (!(lower >= 0.0) || !(upper > lower))
        throw ConfigError("uniform: require 0 <= lower < upper");
    Distribution d;
    d.family_ = Family::Uniform;
    d.lower_ = lower;
    d.upper_ = upper;
    d.mean_ = 0.5 * (lower + upper);
    d.support_end_ = upper;
    d.lipschitz_ = 1.0 / (upper - lower);
    if (lower > 0.0) d.density_breaks_.push_back(lower);
    d.density_breaks_.push_back(upper);
    return d;
}

Distribution Distribution::weibull(double shape, double scale) {
    if (!(shape > 0.0) || !(scale > 0.0))
        throw ConfigError("weibull-continuous: shape and scale must be positive");
    Distribution d;
    d.family_ = Family::WeibullContinuous;
    d.wb_shape_ = shape;
    d.wb_scale_ = scale;
    d.mean_ = scale * std::tgamma(1.0 + 1.0 / shape);
    d.support_end_ = kInf;
    if (shape > 1.0) {
        const double xstar = scale * std::pow((shape - 1.0) / shape, 1.0 / shape);
        const double u = std::pow(xstar / scale, shape);
        d.lipschitz_ = (shape / scale) * std::pow(xstar / scale, shape - 1.0) * std::exp(-u);
    } else if (shape == 1.0) {
        d.lipschitz_ = 1.0 / scale;
    } else {
        d.lipschitz_ = kInf;  // density unbounded at 0: not Lipschitz
    }
    return d;
}

Distribution Distribution::empirical_smooth(std::vector<std::pair<double, double>> cdf_knots,
                                            std::optional<double> lipschitz) {
    if (cdf_knots.size() < 2) throw ConfigError("empirical-smooth: need at least two CDF knots");
    Distribution d;
    d.family_ = Family::EmpiricalSmooth;
    for (auto& [x, p] : cdf_knots) {
        d.knot_x_.push_back(x);
        d.knot_p_.push_back(p);
    }
    if (d.knot_x_.front() < 0.0) throw ConfigError("empirical-smooth: knots must start at x >= 0");
    if (d.knot_p_.front() != 0.0) throw ConfigError("empirical-smooth: first knot must have CDF 0");
    if (std::abs(d.knot_p_.back() - 1.0) > 1e-12)
        throw ConfigError("empirical-smooth: last knot must have CDF 1");
    d.knot_p_.back() = 1.0;
    double max_slope = 0.0;
    for (std::size_t i = 1; i < d.knot_x_.size(); ++i) {
        if (!(d.knot_x_[i] > d.knot_x_[i - 1]))
            throw ConfigError("empirical-smooth: knot x values must strictly increase");
        if (d.knot_p_[i] < d.knot_p_[i - 1])
            throw ConfigError("empirical-smooth: CDF knots must be nondecreasing");
        max_slope = std::max(max_slope, (d.knot_p_[i] - d.knot_p_[i - 1]) /
                                            (d.knot_x_[i] - d.knot_x_[i - 1]));
    }
    d.lipschitz_ = lipschitz ? std::max(*lipschitz, max_slope) : max_slope;
    d.support_end_ = d.knot_x_.back();
    // prefix integrals of the complement at the knots (trapezoid is exact here)
    d.knot_ci_.resize(d.knot_x_.size());
    d.knot_ci_[0] = d.knot_x_[0];  // complement == 1 on [0, x0]
    for (std::size_t i = 1; i < d.knot_x_.size(); ++i) {
        const double w = d.knot_x_[i] - d.knot_x_[i - 1];
        d.knot_ci_[i] = d.knot_ci_[i - 1] +
                        0.5 * w * ((1.0 - d.knot_p_[i - 1]) + (1.0 - d.knot_p_[i]));
    }
    d.mean_ = d.knot_ci_.back();
    for (std::size_t i = 0; i + 1 < d.knot_x_.size(); ++i)
        d.density_breaks_.push_back(d.knot_x_[i]);
    d.density_breaks_.push_back(d.knot_x_.back());
    return d;
}

std::string Distribution::family_name() const {
    switch (family_) {
        case Family::Exponential: return "exponential";
        case Family::Erlang: return "erlang";
        case Family::HyperExponential: return "hyperexponential";
        case Family::Uniform: return "uniform";
        case Family::WeibullContinuous: return "weibull-continuous";
        case Family::EmpiricalSmooth: return "empirical-smooth";
    }
    return "?";
}

double Distribution::complement(double x) const {
    check_nonneg_arg(x);
    switch (family_) {
        case Family::Exponential:
            return std::exp(-rates_[0] * x);
        case Family::Erlang:
            return erlang_complement(shape_k_, rates_[0] * x);
        case Family::HyperExponential: {
            double s = 0.0;
            for (std::size_t i = 0; i < weights_.size(); ++i)
                s += weights_[i] * std::exp(-rates_[i] * x);
            return s;
        }
        case Family::Uniform:
            if (x <= lower_) return 1.0;
            if (x >= upper_) return 0.0;
            return (upper_ - x) / (upper_ - lower_);
        case Family::WeibullContinuous:
            return std::exp(-std::pow(x / wb_scale_, wb_shape_));
        case Family::EmpiricalSmooth: {
            if (x <= knot_x_.front()) return 1.0;
            if (x >= knot_x_.back()) return 0.0;
            auto it = std::upper_bound(knot_x_.begin(), knot_x_.end(), x);
            const std::size_t i = static_cast<std::size_t>(it - knot_x_.begin());
            const double f = (x - knot_x_[i - 1]) / (knot_x_[i] - knot_x_[i - 1]);
            return 1.0 - (knot_p_[i - 1] + f * (knot_p_[i] - knot_p_[i - 1]));
        }
    }
    return 0.0;
}

double Distribution::cdf(double x) const { return 1.0 - complement(x); }

double Distribution::density(double x) const {
    check_nonneg_arg(x);
    switch (family_) {
        case Family::Exponential:
            return rates_[0] * std::exp(-rates_[0] * x);
        case Family::Erlang: {
            const double rx = rates_[0] * x;
            double term = rates_[0] * std::exp(-rx);
            for (int m = 1; m < shape_k_; ++m) term *= rx / static_cast<double>(m);
            return term;
        }
        case Family::HyperExponential: {
            double s = 0.0;
            for (std::size_t i = 0; i < weights_.size(); ++i)
                s += weights_[i] * rates_[i] * std::exp(-rates_[i] * x);
            return s;
        }
        case Family::Uniform:
            return (x >= lower_ && x < upper_) ? 1.0 / (upper_ - lower_) : 0.0;
        case Family::WeibullContinuous: {
            if (x == 0.0) return wb_shape_ > 1.0 ? 0.0 : (wb_shape_ == 1.0 ? 1.0 / wb_scale_ : kInf);
            const double u = std::pow(x / wb_scale_, wb_shape_);
            return (wb_shape_ / wb_scale_) * std::pow(x / wb_scale_, wb_shape_ - 1.0) * std::exp(-u);
        }
        case Family::EmpiricalSmooth: {
            if (x < knot_x_.front() || x >= knot_x_.back()) return 0.0;
            auto it = std::upper_bound(knot_x_.begin(), knot_x_.end(), x);
            const std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(it - knot_x_.begin()),
                                                        knot_x_.size() - 1);
            return (knot_p_[i] - knot_p_[i - 1]) / (knot_x_[i] - knot_x_[i - 1]);
        }
    }
    return 0.0;
}

double Distribution::complement_integral(double x) const {
    check_nonneg_arg(x);
    switch (family_) {
        case Family::Exponential:
            return (1.0 - std::exp(-rates_[0] * x)) / rates_[0];
        case Family::Erlang:
            return erlang_complement_integral(shape_k_, rates_[0], x);
        case Family::HyperExponential: {
            double s = 0.0;
            for (std::size_t i = 0; i < weights_.size(); ++i)
                s += weights_[i] * (1.0 - std::exp(-rates_[i] * x)) / rates_[i];
            return s;
        }
        case Family::Uniform: {
            if (x <= lower_) return x;
            if (x >= upper_) return mean_;
            const double d = x - lower_;
            return lower_ + d - 0.5 * d * d / (upper_ - lower_);
        }
        case Family::WeibullContinuous: {
            // no closed form: composite Gauss-Legendre with scale-sized panels
            if (x == 0.0) return 0.0;
            const double panel = wb_scale_ * 0.5;
            double total = 0.0, a = 0.0;
            while (a < x) {
                const double b = std::min(x, a + panel);
                total += gauss16(a, b, [this](double y) { return complement(y); });
                a = b;
            }
            return total;
        }
        case Family::EmpiricalSmooth: {
            if (x <= knot_x_.front()) return x;
            if (x >= knot_x_.back()) return mean_;
            auto it = std::upper_bound(knot_x_.begin(), knot_x_.end(), x);
            const std::size_t i = static_cast<std::size_t>(it - knot_x_.begin());
            const double w = x - knot_x_[i - 1];
            // complement is linear on the segment, trapezoid is exact
            return knot_ci_[i - 1] + 0.5 * w * ((1.0 - knot_p_[i - 1]) + complement(x));
        }
    }
    return 0.0;
}

double Distribution::equilibrium_cdf(double x) const {
    if (!(mean_ > 0.0) || !std::isfinite(mean_))
        throw ConfigError("equilibrium_cdf: mean must be finite and positive");
    return std::min(1.0, complement_integral(x) / mean_);
}

double Distribution::complement_quantile(double u) const {
    if (u < 0.0 || u > 1.0) throw DomainError("complement_quantile: u must lie in [0, 1]");
    if (u >= 1.0) return 0.0;
    switch (family_) {
        case Family::Exponential:
            return -std::log(u) / rates_[0];
        case Family::Uniform:
            return upper_ - u * (upper_ - lower_);
        case Family::WeibullContinuous:
            return wb_scale_ * std::pow(-std::log(u), 1.0 / wb_shape_);
        case Family::EmpiricalSmooth: {
            const double p = 1.0 - u;
            auto it = std::lower_bound(knot_p_.begin(), knot_p_.end(), p);
            std::size_t i = static_cast<std::size_t>(it - knot_p_.begin());
            if (i == 0) return knot_x_[0];
            if (knot_p_[i] == knot_p_[i - 1]) return knot_x_[i - 1];
            const double f = (p - knot_p_[i - 1]) / (knot_p_[i] - knot_p_[i - 1]);
            return knot_x_[i - 1] + f * (knot_x_[i] - knot_x_[i - 1]);
        }
        default: {  // Erlang / HyperExponential: monotone bisection
            if (u <= 0.0) return support_end_;
            double lo = 0.0, hi = mean_;
            while (complement(hi) > u) hi *= 2.0;
            for (int it = 0; it < 200 && (hi - lo) > 1e-14 * (1.0 + hi); ++it) {
                const double mid = 0.5 * (lo + hi);
                (complement(mid) > u ? lo : hi) = mid;
            }
            return 0.5 * (lo + hi);
        }
    }
}

double Distribution::sample(CounterRng& rng) const {
    switch (family_) {
        case Family::Exponential:
            return rng.exponential(rates_[0]);
        case Family::Erlang: {
            double s = 0.0;
            for (int i = 0; i < shape_k_; ++i) s += rng.exponential(rates_[0]);
            return s;
        }
        case Family::HyperExponential: {
            double u = rng.uniform();
            for (std::size_t i = 0; i + 1 < weights_.size(); ++i) {
                if (u < weights_[i]) return rng.exponential(rates_[i]);
                u -= weights_[i];
            }
            return rng.exponential(rates_.back());
        }
        case Family::Uniform:
            return lower_ + rng.uniform() * (upper_ - lower_);
        case Family::WeibullContinuous:
            return wb_scale_ * std::pow(-std::log(rng.uniform_open()), 1.0 / wb_shape_);
        case Family::EmpiricalSmooth:
            return complement_quantile(rng.uniform_open());
    }
    return 0.0;
}

void Distribution::require_role(LifetimeRole role) const {
    if (!(mean_ > 0.0) || !std::isfinite(mean_))
        throw ConfigError(family_name() + ": finite positive mean required");
    if (role == LifetimeRole::Patience && !std::isfinite(lipschitz_))
        throw ConfigError(family_name() +
                          ": patience distribution must have a Lipschitz CDF "
                          "(bounded density); weibull needs shape >= 1");
}

}  // namespace tvfluid
