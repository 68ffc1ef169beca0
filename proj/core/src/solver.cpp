#include "tvfluid/solver.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include "tvfluid/errors.hpp"
#include "tvfluid/processes.hpp"

namespace tvfluid {

void SolverConfig::validate() const {
    if (!(picard_tol > 0.0)) throw ConfigError("solver.picard_tol must be positive");
    if (max_iters < 1) throw ConfigError("solver.max_iters must be at least 1");
    if (!(kappa_target > 0.0) || !(kappa_target < 1.0))
        throw ConfigError("solver.kappa_target must lie in (0, 1)");
    if (!(window_cap > 0.0)) throw ConfigError("solver.window_cap must be positive");
}

void ModelInputs::validate(const Grid& grid) const {
    if (!rate || !patience || !service) throw ConfigError("model: rate, patience and service required");
    patience->require_role(LifetimeRole::Patience);
    service->require_role(LifetimeRole::Service);
    if (rate->t_max() < grid.horizon() - 1e-9)
        throw ConfigError("model: rate profile must cover [0, T]");
    if (rate->t_min() > 1e-12) throw ConfigError("model: rate profile must start at or before 0");
    initial.validate(*rate, grid.step(), grid.horizon());
}

namespace {

// Contraction window per the constructive existence proof: the largest w with
//   kappa(w) = L(w) * integral_0^w G^c + [G(w) - G(0)] <= kappa_target,
//   L(w) = L_F / F^c(min(S_F, min(M, 2w)) / 2),
// where (1/mu)[G_e(w) - G_e(0)] collapses to integral_0^w G^c. The window is
// also bounded by min(S_F, M)/2, the range on which the entry rate is
// provably Lipschitz.
struct WindowChoice {
    double length = 0.0;
    double kappa = 0.0;
    double lipschitz = 0.0;
};

WindowChoice pick_window(const Distribution& patience, const Distribution& service,
                         const SolverConfig& cfg, const Grid& grid) {
    const double sf = patience.support_end();
    auto lipschitz_at = [&](double w) {
        const double reach = std::min(sf, std::min(cfg.window_cap, 2.0 * w)) / 2.0;
        return patience.lipschitz_constant() / patience.complement(reach);
    };
    auto kappa_at = [&](double w) {
        return lipschitz_at(w) * service.complement_integral(w) + service.cdf(w);
    };
    double upper = std::min(grid.horizon(), std::min(sf, cfg.window_cap) / 2.0);
    WindowChoice choice;
    if (kappa_at(upper) <= cfg.kappa_target) {
        choice.length = upper;
    } else {
        double lo = 0.0, hi = upper;
        for (int i = 0; i < 200 && (hi - lo) > 1e-12 * upper; ++i) {
            const double mid = 0.5 * (lo + hi);
            (kappa_at(mid) <= cfg.kappa_target ? lo : hi) = mid;
        }
        choice.length = lo;
    }
    choice.kappa = kappa_at(choice.length);
    choice.lipschitz = lipschitz_at(choice.length);
    if (choice.length < grid.step()) {
        std::ostringstream msg;
        msg << "solver: contraction window b = " << choice.length << " collapsed below h = "
            << grid.step() << " (L_F = " << patience.lipschitz_constant()
            << ", L = " << choice.lipschitz << ", kappa_target = " << cfg.kappa_target
            << ", window_cap M = " << cfg.window_cap
            << "); enlarge h, raise kappa_target, or lower window_cap";
        throw ConfigError(msg.str());
    }
    return choice;
}

// Prebuilt node arrays shared by the solver and the Picard operator.
struct Context {
    std::size_t n = 0;
    double h = 0.0;
    double inv_mu = 0.0;
    double q0 = 0.0;
    std::vector<double> z0c;      // Zbar(0)(C_{t_i})
    std::vector<double> gc;       // G^c(t_i)
    std::vector<double> g;        // G(t_i)
    std::vector<double> dg;       // G(t_{j+1}) - G(t_j)
    std::vector<double> dge;      // G_e(t_{j+1}) - G_e(t_j)
    std::function<double(std::size_t, double)> entry;  // H_{t_i}(y)
};

Context build_context(const Grid& grid, const ModelInputs& in, const KernelCache& kernels,
                      const ConstantRateKernel* specialized) {
    Context ctx;
    ctx.n = grid.nodes();
    ctx.h = grid.step();
    const Distribution& service = *in.service;
    const double mu = 1.0 / service.mean();
    ctx.inv_mu = 1.0 / mu;
    ctx.q0 = kernels.queued_mass(0, in.initial.omega0);
    ctx.z0c.resize(ctx.n);
    ctx.gc.resize(ctx.n);
    ctx.g.resize(ctx.n);
    for (std::size_t i = 0; i < ctx.n; ++i) {
        const double t = grid.time(i);
        ctx.z0c[i] = in.initial.in_service.eval(t);
        ctx.gc[i] = service.complement(t);
        ctx.g[i] = 1.0 - ctx.gc[i];
    }
    ctx.dg.resize(ctx.n > 0 ? ctx.n - 1 : 0);
    ctx.dge.resize(ctx.dg.size());
    for (std::size_t j = 0; j + 1 < ctx.n; ++j) {
        ctx.dg[j] = ctx.g[j + 1] - ctx.g[j];
        ctx.dge[j] = mu * (service.complement_integral(grid.time(j + 1)) -
                           service.complement_integral(grid.time(j)));
    }
    if (specialized) {
        ctx.entry = [specialized](std::size_t, double y) { return specialized->entry_rate(y); };
    } else {
        ctx.entry = [&kernels](std::size_t i, double y) { return kernels.entry_rate(i, y); };
    }
    return ctx;
}

double rhs_at(const Context& ctx, std::size_t i, const std::vector<double>& q,
              const std::vector<double>& eta) {
    double conv_e = 0.0, conv_g = 0.0;
    for (std::size_t j = 0; j < i; ++j) {
        conv_e += (eta[i - j] + eta[i - j - 1]) * ctx.dge[j];
        conv_g += (q[i - j] + q[i - j - 1]) * ctx.dg[j];
    }
    return ctx.z0c[i] + ctx.q0 * ctx.gc[i] + 0.5 * (ctx.inv_mu * conv_e + conv_g);
}

FluidSolution solve_impl(const Grid& grid, ModelInputs inputs, const SolverConfig& config,
                         bool specialized) {
    config.validate();
    inputs.validate(grid);

    auto kernels = std::make_shared<KernelCache>(grid, inputs.rate, inputs.patience,
                                                 inputs.initial.omega0);
    std::unique_ptr<ConstantRateKernel> const_kernel;
    if (specialized) {
        const auto& vals = inputs.rate->values();
        for (double v : vals)
            if (v != vals.front())
                throw ConfigError("specialized solve: rate must be constant");
        const_kernel = std::make_unique<ConstantRateKernel>(
            grid.step(), vals.front(), inputs.patience,
            grid.horizon() + inputs.initial.omega0 + grid.step());
    }
    Context ctx = build_context(grid, inputs, *kernels, const_kernel.get());
    inputs.initial.check_nonidling(ctx.q0, 1e-3);

    const WindowChoice window = pick_window(*inputs.patience, *inputs.service, config, grid);
    const std::size_t wlen = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::floor(window.length / ctx.h + 1e-12)));

    const std::size_t n = ctx.n;
    std::vector<double> x(n, 0.0), q(n, 0.0), eta(n, 0.0);
    x[0] = ctx.q0 + ctx.z0c[0];
    q[0] = std::max(x[0] - 1.0, 0.0);
    eta[0] = ctx.entry(0, q[0]);

    FluidSolution sol{grid, std::move(inputs), config, kernels};
    sol.q0 = ctx.q0;
    sol.diagnostics.window_length = window.length;
    sol.diagnostics.kappa = window.kappa;
    sol.diagnostics.lipschitz_used = window.lipschitz;

    const double stop = 0.05 * config.picard_tol;
    std::vector<double> xnew(n, 0.0);
    std::size_t first = 1;
    while (first < n) {
        const std::size_t last = std::min(n - 1, first + wlen - 1);
        for (std::size_t i = first; i <= last; ++i) {
            switch (config.initial_guess) {
                case SolverConfig::Guess::PreviousWindow: x[i] = x[first - 1]; break;
                case SolverConfig::Guess::Zero: x[i] = 0.0; break;
                case SolverConfig::Guess::Elevated: x[i] = 2.0 * x[0] + 1.0; break;
            }
            q[i] = std::max(x[i] - 1.0, 0.0);
            eta[i] = ctx.entry(i, q[i]);
        }
        WindowDiagnostics wd;
        wd.first_node = first;
        wd.last_node = last;
        double delta = 0.0;
        for (int iter = 1;; ++iter) {
            delta = 0.0;
            for (std::size_t i = first; i <= last; ++i) {
                xnew[i] = rhs_at(ctx, i, q, eta);
                delta = std::max(delta, std::abs(xnew[i] - x[i]));
            }
            for (std::size_t i = first; i <= last; ++i) {
                x[i] = xnew[i];
                q[i] = std::max(x[i] - 1.0, 0.0);
                eta[i] = ctx.entry(i, q[i]);
            }
            wd.iterations = iter;
            wd.final_delta = delta;
            if (delta <= stop) break;
            if (iter >= config.max_iters) {
                std::ostringstream msg;
                msg << "solver: Picard iteration did not reach " << stop << " within "
                    << config.max_iters << " sweeps on window [" << grid.time(first) << ", "
                    << grid.time(last) << "] (last change " << delta << ")";
                throw DivergenceError(msg.str(), delta);
            }
        }
        sol.diagnostics.windows.push_back(wd);
        first = last + 1;
    }

    double residual = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        residual = std::max(residual, std::abs(x[i] - rhs_at(ctx, i, q, eta)));
    sol.diagnostics.key_equation_residual = residual;

    sol.total = std::move(x);
    sol.queue = std::move(q);
    sol.entry = std::move(eta);
    sol.in_service.resize(n);
    sol.wait.resize(n);
    sol.entered.resize(n);
    sol.z0_profile = std::move(ctx.z0c);
    sol.service_cdf = std::move(ctx.g);
    sol.service_complement = std::move(ctx.gc);
    double running = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sol.in_service[i] = std::min(sol.total[i], 1.0);
        sol.wait[i] = kernels->age_of_mass(i, sol.queue[i]);
        if (i > 0) running += 0.5 * (sol.entry[i - 1] + sol.entry[i]) * ctx.h;
        sol.entered[i] = running - sol.queue[i] + sol.queue[0];
    }
    sol.diagnostics.kernel_clamps = kernels->clamp_count();
    return sol;
}

}  // namespace

FluidSolution solve(const Grid& grid, ModelInputs inputs, const SolverConfig& config) {
    return solve_impl(grid, std::move(inputs), config, false);
}

FluidSolution solve_constant_specialized(const Grid& grid, ModelInputs inputs,
                                         const SolverConfig& config) {
    return solve_impl(grid, std::move(inputs), config, true);
}

PicardOperator::PicardOperator(const Grid& grid, ModelInputs inputs, const SolverConfig& config)
    : grid_(grid), inputs_(std::move(inputs)), config_(config) {
    config_.validate();
    inputs_.validate(grid_);
    kernels_ = std::make_shared<KernelCache>(grid_, inputs_.rate, inputs_.patience,
                                             inputs_.initial.omega0);
    const WindowChoice window = pick_window(*inputs_.patience, *inputs_.service, config_, grid_);
    window_length_ = window.length;
    kappa_ = window.kappa;
}

std::vector<double> PicardOperator::apply(const std::vector<double>& prefix,
                                          const std::vector<double>& window,
                                          std::size_t first_node) const {
    if (prefix.size() != first_node)
        throw DomainError("picard: prefix must hold exactly the nodes before the window");
    const std::size_t top = first_node + window.size();
    if (top > grid_.nodes()) throw DomainError("picard: window exceeds the grid");
    Context ctx = build_context(grid_, inputs_, *kernels_, nullptr);
    std::vector<double> q(top, 0.0), eta(top, 0.0);
    for (std::size_t i = 0; i < top; ++i) {
        const double xi = i == 0 ? ctx.q0 + ctx.z0c[0]
                                 : (i < first_node ? prefix[i] : window[i - first_node]);
        q[i] = std::max(xi - 1.0, 0.0);
        eta[i] = ctx.entry(i, q[i]);
    }
    std::vector<double> out(window.size());
    for (std::size_t i = std::max<std::size_t>(first_node, 1); i < top; ++i)
        out[i - first_node] = rhs_at(ctx, i, q, eta);
    if (first_node == 0) out[0] = ctx.q0 + ctx.z0c[0];
    return out;
}

std::vector<double> renewal_function(const Distribution& service, const Grid& grid, double tol) {
    const std::size_t n = grid.nodes();
    std::vector<double> dg(n > 0 ? n - 1 : 0);
    std::vector<double> term(n), u(n, 1.0);
    for (std::size_t i = 0; i < n; ++i) term[i] = service.cdf(grid.time(i));
    for (std::size_t j = 0; j + 1 < n; ++j)
        dg[j] = service.cdf(grid.time(j + 1)) - service.cdf(grid.time(j));
    const int limit =
        static_cast<int>(std::ceil(10.0 * grid.horizon() / service.mean())) + 1;
    int count = 0;
    std::vector<double> next(n);
    while (*std::max_element(term.begin(), term.end()) >= tol) {
        if (++count > limit)
            throw DivergenceError("renewal function: series truncation not reached",
                                  *std::max_element(term.begin(), term.end()));
        for (std::size_t i = 0; i < n; ++i) u[i] += term[i];
        next[0] = 0.0;
        for (std::size_t i = 1; i < n; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < i; ++j)
                acc += (term[i - j] + term[i - j - 1]) * dg[j];
            next[i] = 0.5 * acc;
        }
        term.swap(next);
    }
    return u;
}

double overloaded_prefix_deviation(const FluidSolution& sol, const std::vector<double>& renewal) {
    const std::size_t n = sol.grid.nodes();
    if (renewal.size() != n) throw DomainError("renewal table does not match the grid");
    if (sol.total[0] < 1.0) return 0.0;
    std::size_t prefix_end = 0;
    while (prefix_end + 1 < n && sol.total[prefix_end + 1] >= 1.0) ++prefix_end;
    std::vector<double> busy(prefix_end + 1);
    for (std::size_t i = 0; i <= prefix_end; ++i) busy[i] = 1.0 - sol.z0_profile[i];
    double dev = 0.0;
    for (std::size_t i = 0; i <= prefix_end; ++i) {
        double acc = busy[i];  // unit jump of U_G at s = 0
        for (std::size_t j = 0; j < i; ++j)
            acc += 0.5 * (busy[i - j] + busy[i - j - 1]) * (renewal[j + 1] - renewal[j]);
        dev = std::max(dev, std::abs(sol.entered[i] - acc));
    }
    return dev;
}

FluidSolution time_shift(const FluidSolution& sol, std::size_t tau_node) {
    const std::size_t n = sol.grid.nodes();
    if (tau_node + 1 >= n) throw DomainError("time_shift: shift must leave a nonempty horizon");
    const double h = sol.grid.step();
    const double tau = sol.grid.time(tau_node);
    const Grid shifted_grid(h, sol.grid.horizon() - tau);

    // Zbar(tau)(C_x) tabulated on the remaining horizon, forced monotone
    // against quadrature noise at the rounding level.
    std::vector<std::pair<double, double>> knots(shifted_grid.nodes());
    double prev = std::min(1.0, service_measure(sol, tau_node, 0.0));
    for (std::size_t j = 0; j < shifted_grid.nodes(); ++j) {
        double v = service_measure(sol, tau_node, shifted_grid.time(j));
        v = std::min(v, prev);
        v = std::max(v, 0.0);
        knots[j] = {shifted_grid.time(j), v};
        prev = v;
    }

    ModelInputs inputs;
    inputs.rate = std::make_shared<RateFunction>(sol.inputs.rate->shifted(tau));
    inputs.patience = sol.inputs.patience;
    inputs.service = sol.inputs.service;
    inputs.initial.omega0 = sol.wait[tau_node];
    inputs.initial.in_service = InServiceProfile::table(std::move(knots));
    return solve(shifted_grid, std::move(inputs), sol.config);
}

FluidSolution time_shift_at(const FluidSolution& sol, double tau) {
    const double h = sol.grid.step();
    const double pos = tau / h;
    const double rounded = std::round(pos);
    if (std::abs(pos - rounded) > 1e-9 || tau < 0.0)
        throw DomainError("time_shift: tau must sit on the grid");
    return time_shift(sol, static_cast<std::size_t>(rounded));
}

}  // namespace tvfluid
