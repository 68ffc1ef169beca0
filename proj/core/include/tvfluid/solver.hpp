#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tvfluid/distribution.hpp"
#include "tvfluid/grid.hpp"
#include "tvfluid/initial_condition.hpp"
#include "tvfluid/kernel.hpp"
#include "tvfluid/rate.hpp"

namespace tvfluid {

struct SolverConfig {
    double picard_tol = 1e-10;   // uniform-distance stopping threshold
    int max_iters = 400;         // per contraction window
    double kappa_target = 0.5;   // contraction modulus the window is sized for
    double window_cap = std::numeric_limits<double>::infinity();  // cap on the proof's M
    enum class Guess { PreviousWindow, Zero, Elevated } initial_guess = Guess::PreviousWindow;

    void validate() const;
};

struct WindowDiagnostics {
    std::size_t first_node = 0;
    std::size_t last_node = 0;
    int iterations = 0;
    double final_delta = 0.0;
};

struct SolveDiagnostics {
    double window_length = 0.0;      // b
    double kappa = 0.0;              // contraction modulus at b
    double lipschitz_used = 0.0;     // L entering kappa
    std::vector<WindowDiagnostics> windows;
    double key_equation_residual = 0.0;  // max node |X - Psi(X)|
    std::uint64_t kernel_clamps = 0;
};

/// Everything a solve consumes, bundled so derived computations (processes,
/// elapsed measures, time shift) can reconstruct any quantity later.
struct ModelInputs {
    std::shared_ptr<const RateFunction> rate;
    std::shared_ptr<const Distribution> patience;
    std::shared_ptr<const Distribution> service;
    InitialCondition initial;

    void validate(const Grid& grid) const;
};

/// Solution of the key convolution equation on the grid plus every sequence
/// derived during the solve. Immutable once returned.
struct FluidSolution {
    Grid grid;
    ModelInputs inputs;
    SolverConfig config;
    std::shared_ptr<KernelCache> kernels;

    double q0 = 0.0;                // initial queue mass Q(0)
    std::vector<double> total;      // X(t_i)
    std::vector<double> queue;      // Q = (X-1)^+
    std::vector<double> in_service; // Z = min(X, 1)
    std::vector<double> wait;       // omega(t_i)
    std::vector<double> entry;      // H_{t_i}(Q_i), the service entry rate
    std::vector<double> entered;    // a(t_i) = integral_0^t entry - Q + Q(0)
    std::vector<double> z0_profile; // Zbar(0)(C_{t_i})
    std::vector<double> service_cdf;        // G(t_i)
    std::vector<double> service_complement; // G^c(t_i)
    SolveDiagnostics diagnostics;

    double sup_rate() const { return inputs.rate->sup(); }
    double service_mu() const { return 1.0 / inputs.service->mean(); }
};

/// Solve the key equation
///   X(t) = Zbar(0)(C_t) + Q(0) G^c(t)
///          + (1/mu) integral_0^t H_{t-s}((X(t-s)-1)^+) dG_e(s)
///          + integral_0^t (X(t-s)-1)^+ dG(s)
/// by Picard iteration on contraction windows of length b, where b satisfies
/// kappa(b) = (L/mu)[G_e(b)-G_e(0)] + [G(b)-G(0)] <= kappa_target with
/// L = L_F / F^c(min(S_F, M)/2).
FluidSolution solve(const Grid& grid, ModelInputs inputs, const SolverConfig& config);

/// Solve with the entry rate replaced by the constant-rate specialization
/// lambda0 * H(y / lambda0); requires a constant rate on [0, T].
FluidSolution solve_constant_specialized(const Grid& grid, ModelInputs inputs,
                                         const SolverConfig& config);

/// One application of the window map Psi: given trajectory values on
/// [first_node, first_node + width) and the frozen prefix before them,
/// returns Psi(x) on the same nodes. Exposed for contraction tests.
class PicardOperator {
public:
    PicardOperator(const Grid& grid, ModelInputs inputs, const SolverConfig& config);

    std::vector<double> apply(const std::vector<double>& prefix,
                              const std::vector<double>& window,
                              std::size_t first_node) const;

    double window_length() const { return window_length_; }
    double kappa() const { return kappa_; }
    const KernelCache& kernels() const { return *kernels_; }

private:
    Grid grid_;
    ModelInputs inputs_;
    SolverConfig config_;
    std::shared_ptr<KernelCache> kernels_;
    double window_length_ = 0.0;
    double kappa_ = 0.0;
};

/// Renewal function U_G(t) = sum_n G^{n*}(t) on the grid, truncated once a
/// term's sup falls below tol.
std::vector<double> renewal_function(const Distribution& service, const Grid& grid,
                                     double tol = 1e-10);

/// sup over the maximal overloaded prefix {t <= tau0 : X(s) >= 1 for s <= t} of
/// |a(t) - integral_0^t (1 - Zbar(0)(C_{t-s})) dU_G(s)|; 0 on an empty prefix.
double overloaded_prefix_deviation(const FluidSolution& sol,
                                   const std::vector<double>& renewal);

/// Restart the model at grid node tau per the time-shifted dynamic equations:
/// rebuilds the initial state (omega(tau), Q(tau), Zbar(tau)(C_.)), shifts the
/// rate, and re-solves on [0, T - tau]. The result should coincide with the
/// original solution on [tau, T] up to discretization.
FluidSolution time_shift(const FluidSolution& sol, std::size_t tau_node);
/// Same, taking the shift time; tau off the grid is a DomainError.
FluidSolution time_shift_at(const FluidSolution& sol, double tau);

}  // namespace tvfluid
