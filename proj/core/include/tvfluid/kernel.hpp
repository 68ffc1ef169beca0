#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <mutex>
#include <vector>

#include "tvfluid/distribution.hpp"
#include "tvfluid/grid.hpp"
#include "tvfluid/rate.hpp"

namespace tvfluid {

/// Time-varying patience kernels, tabulated per grid node t on the x-grid
/// x_j = j*h up to cap(t) = min(t + omega0, S_F):
///
///   queued_mass(t, x)  = integral_0^x F^c(s) lambda(t-s) ds     (still-patient mass)
///   expiry_mass(t, x)  = integral_0^x f(s)  lambda(t-s) ds      (expired mass)
///   peak_mass(t)       = queued_mass(t, cap(t))
///   age_of_mass(t, y)  = inf{x >= 0 : queued_mass(t, x) >= y}, capped at cap(t)
///   entry_rate(t, y)   = lambda(t) - expiry_mass(t, age_of_mass(t, min(y, peak)))
///
/// Cells use composite trapezoid split at rate/density breakpoints, with the
/// closed form substituted on (constant-rate, exponential-patience) cells.
/// Tables grow lazily toward cap(t) under a mutex; reads are otherwise
/// concurrent-safe and the cache is logically immutable.
class KernelCache {
public:
    KernelCache(Grid grid, std::shared_ptr<const RateFunction> rate,
                std::shared_ptr<const Distribution> patience, double omega0);

    const Grid& grid() const { return grid_; }
    double omega0() const { return omega0_; }
    double cap(std::size_t node) const;
    double rate_at(std::size_t node) const;

    double queued_mass(std::size_t node, double x) const;  // nondecreasing in x
    double expiry_mass(std::size_t node, double x) const;  // nondecreasing in x
    double peak_mass(std::size_t node) const;
    double age_of_mass(std::size_t node, double y) const;  // generalized inverse
    double entry_rate(std::size_t node, double y) const;   // nonincreasing in y

    /// Number of out-of-domain x arguments that were clamped.
    std::uint64_t clamp_count() const { return clamp_count_.load(); }

private:
    struct NodeTable {
        std::vector<double> fd;   // queued_mass at x_0..x_m (+ cap point when complete)
        std::vector<double> ft;   // expiry_mass at the same points
        bool complete = false;    // last entry sits at cap(node)
    };

    const NodeTable& ensure_extent(std::size_t node, double x) const;
    double interp(const NodeTable& tab, std::size_t node, double x, bool density) const;
    double cell_integral(double a, double b, double t_abs, bool density) const;
    double age_of_mass_unlocked(std::size_t node, double y) const;

    Grid grid_;
    std::shared_ptr<const RateFunction> rate_;
    std::shared_ptr<const Distribution> patience_;
    double omega0_;

    mutable std::vector<NodeTable> tables_;
    mutable std::mutex mutex_;
    mutable std::atomic<std::uint64_t> clamp_count_{0};
};

/// Constant-rate specialization H(y) = lambda0 * F^c(F_d^{-1}(y / lambda0)),
/// zero for y >= lambda0 * N_F. Realized through a unit-rate KernelCache so
/// that it shares the tabulation and interpolation of the time-varying path
/// (the two solves then agree to rounding, not merely to grid order).
class ConstantRateKernel {
public:
    /// x_max bounds the tabulated range; pass at least T + omega0 of the
    /// scenario it will be compared against.
    ConstantRateKernel(double h, double rate0,
                       std::shared_ptr<const Distribution> patience, double x_max);

    double rate0() const { return rate0_; }
    double saturation_mass() const;  // lambda0 * N_F
    double entry_rate(double y) const;

    const KernelCache& unit_cache() const { return *unit_; }

private:
    double rate0_;
    std::shared_ptr<KernelCache> unit_;  // kernels for lambda == 1
};

}  // namespace tvfluid
