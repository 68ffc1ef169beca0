#pragma once

#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace tvfluid {

class CounterRng;

enum class Family {
    Exponential,
    Erlang,
    HyperExponential,
    Uniform,
    WeibullContinuous,
    EmpiricalSmooth,
};

enum class LifetimeRole { Service, Patience };

/// Lifetime distribution on [0, inf) with the analytic pieces the fluid model
/// needs: CDF, complement, density, mean, the equilibrium CDF
/// G_e(x) = mu * integral_0^x complement, the support end S = inf{x: F(x)=1},
/// and (for the patience role) the Lipschitz constant of the CDF.
///
/// Immutable after construction; concurrent reads are safe.
class Distribution {
public:
    static Distribution exponential(double rate);
    static Distribution erlang(int shape, double rate);
    static Distribution hyperexponential(std::vector<double> weights, std::vector<double> rates);
    static Distribution uniform(double lower, double upper);
    static Distribution weibull(double shape, double scale);
    /// Piecewise-linear CDF through the given (x, p) knots; density is the
    /// piecewise-constant slope. A declared Lipschitz constant overrides the
    /// maximum slope.
    static Distribution empirical_smooth(std::vector<std::pair<double, double>> cdf_knots,
                                         std::optional<double> lipschitz = std::nullopt);

    Family family() const { return family_; }
    std::string family_name() const;

    double cdf(double x) const;         // throws DomainError on x < 0
    double complement(double x) const;  // 1 - cdf(x)
    double density(double x) const;
    double mean() const { return mean_; }

    /// integral_0^x complement(y) dy (closed form where the family has one).
    double complement_integral(double x) const;
    /// Equilibrium CDF: complement_integral(x) / mean.
    double equilibrium_cdf(double x) const;

    /// inf{x >= 0 : complement(x) <= u} for u in [0, 1].
    double complement_quantile(double u) const;

    /// One i.i.d. draw (family-specific fast path).
    double sample(CounterRng& rng) const;

    /// S = inf{x : cdf(x) = 1}; +inf when the support is unbounded.
    double support_end() const { return support_end_; }
    bool bounded_support() const { return support_end_ < std::numeric_limits<double>::infinity(); }

    /// sup of the density (the CDF's Lipschitz constant).
    double lipschitz_constant() const { return lipschitz_; }

    /// Interior points where the density jumps (quadrature cells split here).
    const std::vector<double>& density_breakpoints() const { return density_breaks_; }

    /// Validates the assumptions the role carries (service: continuous CDF and
    /// finite mean; patience: Lipschitz CDF with a density). Throws ConfigError.
    void require_role(LifetimeRole role) const;

private:
    Distribution() = default;

    Family family_ = Family::Exponential;
    // family parameters (members used per family)
    std::vector<double> weights_;  // hyperexponential
    std::vector<double> rates_;    // exponential/erlang/hyperexponential
    int shape_k_ = 1;              // erlang
    double lower_ = 0.0, upper_ = 0.0;      // uniform
    double wb_shape_ = 1.0, wb_scale_ = 1.0;  // weibull
    std::vector<double> knot_x_, knot_p_;   // empirical: CDF knots
    std::vector<double> knot_ci_;           // empirical: complement_integral at knots

    double mean_ = 0.0;
    double support_end_ = 0.0;
    double lipschitz_ = 0.0;
    std::vector<double> density_breaks_;
};

}  // namespace tvfluid
