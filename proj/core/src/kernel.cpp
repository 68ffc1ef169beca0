#include "tvfluid/kernel.hpp"

#include <algorithm>
#include <cmath>

#include "tvfluid/errors.hpp"

namespace tvfluid {

namespace {
constexpr double kTailComplement = 1e-18;  // tabulation cutoff for unbounded support
}

KernelCache::KernelCache(Grid grid, std::shared_ptr<const RateFunction> rate,
                         std::shared_ptr<const Distribution> patience, double omega0)
    : grid_(grid), rate_(std::move(rate)), patience_(std::move(patience)), omega0_(omega0) {
    if (!(omega0_ >= 0.0)) throw ConfigError("kernel: omega0 must be nonnegative");
    tables_.resize(grid_.nodes());
}

double KernelCache::cap(std::size_t node) const {
    return std::min(grid_.time(node) + omega0_, patience_->support_end());
}

double KernelCache::rate_at(std::size_t node) const {
    return rate_->value_extended(grid_.time(node));
}

// integral over [a, b] of w(s) * lambda(t_abs - s), w = F^c or f, split at the
// rate breakpoints and the density breakpoints so each piece has a smooth
// integrand; closed form on (constant-rate, exponential) pieces, trapezoid
// otherwise.
double KernelCache::cell_integral(double a, double b, double t_abs, bool density) const {
    if (b <= a) return 0.0;
    double splits[16];
    int nsplit = 0;
    {
        const auto& ts = rate_->times();
        // rate breakpoint bp maps to s = t_abs - bp; s in (a,b) <=> bp in (t_abs-b, t_abs-a)
        auto lo = std::upper_bound(ts.begin(), ts.end(), t_abs - b);
        for (auto it = lo; it != ts.end() && *it < t_abs - a && nsplit < 12; ++it) {
            const double s = t_abs - *it;
            if (s > a && s < b) splits[nsplit++] = s;
        }
        const auto& db = patience_->density_breakpoints();
        auto dlo = std::upper_bound(db.begin(), db.end(), a);
        for (auto it = dlo; it != db.end() && *it < b && nsplit < 16; ++it) splits[nsplit++] = *it;
    }
    std::sort(splits, splits + nsplit);

    const bool is_exp = patience_->family() == Family::Exponential;
    const double theta = is_exp ? 1.0 / patience_->mean() : 0.0;

    double total = 0.0;
    double p = a;
    for (int k = 0; k <= nsplit; ++k) {
        const double q = (k == nsplit) ? b : splits[k];
        if (q <= p) continue;
        const double lam_p = rate_->value_extended(t_abs - p);
        const double lam_q = rate_->value_extended(t_abs - q);
        if (is_exp && lam_p == lam_q) {
            // constant rate on the piece: exact exponential cell
            const double mass = std::exp(-theta * p) - std::exp(-theta * q);
            total += density ? lam_p * mass : lam_p * mass / theta;
        } else if (density) {
            // one-sided left limit at q keeps jump cells exact for piecewise
            // constant densities (pieces are already split at the jumps)
            const double fq = patience_->density(q - (q - p) * 1e-9);
            total += 0.5 * (patience_->density(p) * lam_p + fq * lam_q) * (q - p);
        } else {
            total += 0.5 * (patience_->complement(p) * lam_p +
                            patience_->complement(q) * lam_q) * (q - p);
        }
        p = q;
    }
    return total;
}

const KernelCache::NodeTable& KernelCache::ensure_extent(std::size_t node, double x) const {
    NodeTable& tab = tables_[node];
    if (tab.fd.empty()) {
        tab.fd.push_back(0.0);
        tab.ft.push_back(0.0);
    }
    const double h = grid_.step();
    const double cap_x = cap(node);
    const double t_abs = grid_.time(node);
    const double target = std::min(x, cap_x);
    auto coord = [&](std::size_t j) { return std::min(static_cast<double>(j) * h, cap_x); };
    while (!tab.complete) {
        const std::size_t last = tab.fd.size() - 1;
        const double c_last = coord(last);
        if (c_last >= cap_x) {
            tab.complete = true;
            break;
        }
        if (c_last >= target) break;
        const double c_next = coord(last + 1);
        tab.fd.push_back(tab.fd.back() + cell_integral(c_last, c_next, t_abs, false));
        tab.ft.push_back(tab.ft.back() + cell_integral(c_last, c_next, t_abs, true));
        if (c_next >= cap_x) tab.complete = true;
    }
    return tab;
}

double KernelCache::interp(const NodeTable& tab, std::size_t node, double x, bool density) const {
    const std::vector<double>& v = density ? tab.ft : tab.fd;
    const double h = grid_.step();
    const double cap_x = cap(node);
    auto coord = [&](std::size_t j) { return std::min(static_cast<double>(j) * h, cap_x); };
    if (v.size() == 1) return v[0];
    const double last_c = coord(v.size() - 1);
    if (x >= last_c) return v.back();
    std::size_t j = std::min(static_cast<std::size_t>(x / h), v.size() - 2);
    while (coord(j + 1) < x) ++j;  // guards rounding at cell edges
    const double c0 = coord(j), c1 = coord(j + 1);
    const double f = (x - c0) / (c1 - c0);
    return v[j] + f * (v[j + 1] - v[j]);
}

double KernelCache::queued_mass(std::size_t node, double x) const {
    if (x < 0.0) throw DomainError("queued_mass: age must be nonnegative");
    std::lock_guard<std::mutex> lock(mutex_);
    const double cap_x = cap(node);
    if (x > cap_x * (1.0 + 1e-12) + 1e-15) clamp_count_.fetch_add(1);
    const NodeTable& tab = ensure_extent(node, x);
    return interp(tab, node, std::min(x, cap_x), false);
}

double KernelCache::expiry_mass(std::size_t node, double x) const {
    if (x < 0.0) throw DomainError("expiry_mass: age must be nonnegative");
    std::lock_guard<std::mutex> lock(mutex_);
    const double cap_x = cap(node);
    if (x > cap_x * (1.0 + 1e-12) + 1e-15) clamp_count_.fetch_add(1);
    const NodeTable& tab = ensure_extent(node, x);
    return interp(tab, node, std::min(x, cap_x), true);
}

double KernelCache::peak_mass(std::size_t node) const {
    std::lock_guard<std::mutex> lock(mutex_);
    const NodeTable& tab = ensure_extent(node, cap(node));
    return tab.fd.back();
}

// unlocked core of the generalized inverse
double KernelCache::age_of_mass_unlocked(std::size_t node, double y) const {
    if (y == 0.0) return 0.0;
    const double h = grid_.step();
    const double cap_x = cap(node);
    auto coord = [&](std::size_t j) { return std::min(static_cast<double>(j) * h, cap_x); };
    // grow until the tabulated mass brackets y or the cap is reached
    const NodeTable* tab = &ensure_extent(node, 0.0);
    while (!tab->complete && tab->fd.back() < y)
        tab = &ensure_extent(node, coord(tab->fd.size() - 1) + h);
    if (tab->fd.back() < y) return cap_x;  // y >= N_{F,t}: the cap
    auto it = std::lower_bound(tab->fd.begin(), tab->fd.end(), y);
    std::size_t j = static_cast<std::size_t>(it - tab->fd.begin());
    if (j == 0) return 0.0;
    const double f = (y - tab->fd[j - 1]) / (tab->fd[j] - tab->fd[j - 1]);
    return coord(j - 1) + f * (coord(j) - coord(j - 1));
}

double KernelCache::age_of_mass(std::size_t node, double y) const {
    if (y < 0.0) throw DomainError("age_of_mass: mass must be nonnegative");
    std::lock_guard<std::mutex> lock(mutex_);
    return age_of_mass_unlocked(node, y);
}

double KernelCache::entry_rate(std::size_t node, double y) const {
    if (y < 0.0) throw DomainError("entry_rate: mass must be nonnegative");
    const double lam = rate_at(node);
    if (y == 0.0) return lam;
    std::lock_guard<std::mutex> lock(mutex_);
    const double age = age_of_mass_unlocked(node, y);
    const NodeTable& tab = ensure_extent(node, age);
    return lam - interp(tab, node, age, true);
}

ConstantRateKernel::ConstantRateKernel(double h, double rate0,
                                       std::shared_ptr<const Distribution> patience,
                                       double x_max)
    : rate0_(rate0) {
    if (!(rate0 > 0.0)) throw ConfigError("constant-rate kernel: rate must be positive");
    if (!(x_max > 0.0)) throw ConfigError("constant-rate kernel: x_max must be positive");
    double reach = std::min(x_max, patience->support_end());
    if (!patience->bounded_support())
        reach = std::min(reach, patience->complement_quantile(kTailComplement));
    auto unit_rate = std::make_shared<RateFunction>(
        RateFunction::constant(1.0, -reach - h, h));
    unit_ = std::make_shared<KernelCache>(Grid(h, h), unit_rate, patience, reach);
}

double ConstantRateKernel::saturation_mass() const { return rate0_ * unit_->peak_mass(0); }

double ConstantRateKernel::entry_rate(double y) const {
    if (y < 0.0) throw DomainError("entry_rate: mass must be nonnegative");
    if (y >= saturation_mass()) return 0.0;
    return rate0_ * unit_->entry_rate(0, y / rate0_);
}

}  // namespace tvfluid
