#include "tvfluid/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <deque>
#include <mutex>
#include <queue>
#include <thread>
#include <tuple>

#include "tvfluid/errors.hpp"
#include "tvfluid/rng.hpp"
#include "tvfluid/runner.hpp"

namespace tvfluid {

namespace {

// conditional residual lifetime given survival past `age`
double draw_residual(const Distribution& d, double age, CounterRng& rng) {
    const double tail = d.complement(age);
    if (tail <= 0.0) return 0.0;
    const double x = d.complement_quantile(tail * rng.uniform_open());
    return std::max(x - age, 0.0);
}

struct AgeSampler {
    // inverse of M(x) = integral_0^x F^c(s) lambda(-s) ds on [0, omega0]
    std::vector<double> xs, cum;
    double total = 0.0;

    AgeSampler(const RateFunction& rate, const Distribution& patience, double omega0) {
        const int cells = 4096;
        xs.resize(cells + 1);
        cum.resize(cells + 1, 0.0);
        const double dx = omega0 / cells;
        auto f = [&](double s) { return patience.complement(s) * rate.value_extended(-s); };
        for (int i = 0; i <= cells; ++i) xs[i] = dx * i;
        for (int i = 1; i <= cells; ++i)
            cum[i] = cum[i - 1] + 0.5 * (f(xs[i - 1]) + f(xs[i])) * dx;
        total = cum.back();
    }

    double quantile(double u) const {
        const double target = u * total;
        auto it = std::lower_bound(cum.begin(), cum.end(), target);
        std::size_t i = static_cast<std::size_t>(it - cum.begin());
        if (i == 0) return xs[0];
        if (i >= cum.size()) return xs.back();
        const double span = cum[i] - cum[i - 1];
        const double f = span > 0.0 ? (target - cum[i - 1]) / span : 0.0;
        return xs[i - 1] + f * (xs[i] - xs[i - 1]);
    }
};

// residual service drawn from the normalized in-service profile
double profile_quantile(const InServiceProfile& profile, double u, double horizon) {
    const double z0 = profile.initial_mass();
    const double target = u * z0;
    double lo = 0.0, hi = horizon;
    while (profile.eval(hi) > target && hi < 64.0 * horizon + 64.0) hi *= 2.0;
    if (profile.eval(hi) > target) return hi;  // never completes in any horizon of interest
    for (int i = 0; i < 100; ++i) {
        const double mid = 0.5 * (lo + hi);
        (profile.eval(mid) > target ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

InitialCustomers sample_initial(const SimScenario& s, std::uint64_t rep) {
    CounterRng rng(s.seed, 2 * rep + 1);
    InitialCustomers init;
    const InitialCondition& ic = s.initial;
    const double omega0 = ic.omega0;
    double q0 = 0.0;
    if (omega0 > 0.0) {
        AgeSampler sampler(*s.rate, *s.patience, omega0);
        q0 = sampler.total;
        const std::size_t waiters =
            static_cast<std::size_t>(std::floor(s.servers * q0));
        init.waiting.reserve(waiters);
        for (std::size_t k = 0; k < waiters; ++k) {
            const double age = sampler.quantile(rng.uniform());
            const double residual = draw_residual(*s.patience, age, rng);
            init.waiting.push_back({age, residual});
        }
        // FCFS: oldest waiter heads the queue
        std::sort(init.waiting.begin(), init.waiting.end(),
                  [](const auto& a, const auto& b) { return a.age > b.age; });
    }
    const double z0 = ic.in_service.initial_mass();
    const std::size_t busy = static_cast<std::size_t>(std::floor(s.servers * z0));
    init.service_residual.reserve(busy);
    for (std::size_t k = 0; k < busy; ++k)
        init.service_residual.push_back(
            profile_quantile(ic.in_service, rng.uniform(), s.grid.horizon()));
    return init;
}

}  // namespace

void SimScenario::validate() const {
    if (servers < 1) throw ConfigError("sim.servers must be at least 1");
    if (replications < 1) throw ConfigError("sim.replications must be at least 1");
    if (!rate || !patience || !service) throw ConfigError("sim: rate, patience, service required");
    if (rate->t_max() < grid.horizon() - 1e-9)
        throw ConfigError("sim: rate profile must cover [0, T]");
    if (!std::isfinite(rate->sup(0.0, grid.horizon())))
        throw ConfigError("sim: sup lambda must be finite");
}

SimEnsemble SimEnsemble::from_fluid(const FluidSolution& sol) {
    SimEnsemble ens;
    ens.grid = sol.grid;
    ens.servers = 1;
    ens.total = {sol.total};
    ens.queue = {sol.queue};
    ens.in_service = {sol.in_service};
    ens.mean_total = sol.total;
    ens.mean_queue = sol.queue;
    ens.mean_in_service = sol.in_service;
    const std::size_t n = sol.grid.nodes();
    ens.var_total.assign(n, 0.0);
    ens.var_queue.assign(n, 0.0);
    ens.var_in_service.assign(n, 0.0);
    return ens;
}

ReplicationResult run_replication(const SimScenario& scenario, const InitialCustomers& initial,
                                  std::uint64_t replication_index) {
    CounterRng rng(scenario.seed, 2 * replication_index);
    const int n = scenario.servers;
    const Grid& grid = scenario.grid;
    const double horizon = grid.horizon();
    const RateFunction& rate = *scenario.rate;
    const double lam_max = rate.sup(0.0, horizon);

    enum State : unsigned char { Waiting, Served, Abandoned };
    struct Customer {
        double service_time;
        State state;
    };
    std::vector<Customer> customers;
    std::deque<std::size_t> fifo;  // waiting customer ids, head = next to serve

    // (time, priority, sequence, customer) with priority abandon(0) <
    // completion(1) < arrival(2); sequence breaks remaining ties
    using Event = std::tuple<double, int, std::uint64_t, std::size_t>;
    std::priority_queue<Event, std::vector<Event>, std::greater<Event>> events;
    std::uint64_t seq = 0;

    ReplicationResult res;
    int busy = 0;

    for (const auto& w : initial.waiting) {
        customers.push_back({scenario.service->sample(rng), Waiting});
        fifo.push_back(customers.size() - 1);
        events.emplace(w.residual_patience, 0, seq++, customers.size() - 1);
    }
    std::size_t waiting = initial.waiting.size();
    for (double residual : initial.service_residual) {
        customers.push_back({residual, Served});
        ++busy;
        if (residual <= horizon) events.emplace(residual, 1, seq++, customers.size() - 1);
    }

    // nonhomogeneous Poisson arrivals by thinning against n * lam_max
    if (lam_max > 0.0) {
        double t = 0.0;
        while (true) {
            t += rng.exponential(static_cast<double>(n) * lam_max);
            if (t > horizon) break;
            if (rng.uniform() * lam_max <= rate.value_extended(t)) {
                customers.push_back({scenario.service->sample(rng), Waiting});
                const std::size_t id = customers.size() - 1;
                const double patience = scenario.patience->sample(rng);
                events.emplace(t, 2, seq++, id);
                events.emplace(t + patience, 0, seq++, id);
            }
        }
    }

    const std::size_t nodes = grid.nodes();
    res.total.resize(nodes);
    res.queue.resize(nodes);
    res.in_service.resize(nodes);
    std::size_t next_node = 0;
    auto record_until = [&](double t) {
        while (next_node < nodes && grid.time(next_node) < t - 1e-15) {
            res.queue[next_node] = static_cast<double>(waiting);
            res.in_service[next_node] = static_cast<double>(busy);
            res.total[next_node] = static_cast<double>(waiting + busy);
            ++next_node;
        }
    };
    auto start_service = [&](double now) {
        while (busy < n && !fifo.empty()) {
            const std::size_t id = fifo.front();
            fifo.pop_front();
            if (customers[id].state != Waiting) continue;  // lazily removed
            customers[id].state = Served;
            --waiting;
            ++busy;
            ++res.entered;
            const double done = now + customers[id].service_time;
            if (done <= horizon) events.emplace(done, 1, seq++, id);
        }
    };
    start_service(0.0);

    while (!events.empty()) {
        auto [t, pri, s, id] = events.top();
        events.pop();
        if (t > horizon) break;
        record_until(t);
        switch (pri) {
            case 0:  // patience expires
                if (customers[id].state == Waiting) {
                    customers[id].state = Abandoned;
                    --waiting;
                    ++res.abandoned;
                }
                break;
            case 1:  // service completes, a server frees
                --busy;
                start_service(t);
                break;
            case 2:  // arrival
                ++res.arrivals;
                ++waiting;
                fifo.push_back(id);
                start_service(t);
                break;
        }
        if (busy < n && waiting > 0)
            throw ConsistencyError("sim: idle server with a live waiting customer");
    }
    record_until(horizon + 1.0);
    res.still_waiting = waiting;
    return res;
}

SimEnsemble simulate(const SimScenario& scenario) {
    scenario.validate();
    const std::size_t reps = static_cast<std::size_t>(scenario.replications);
    const std::size_t nodes = scenario.grid.nodes();
    SimEnsemble ens;
    ens.grid = scenario.grid;
    ens.servers = scenario.servers;
    ens.total.assign(reps, {});
    ens.queue.assign(reps, {});
    ens.in_service.assign(reps, {});

    const double inv_n = 1.0 / static_cast<double>(scenario.servers);
    auto run_one = [&](std::size_t r) {
        const InitialCustomers init = sample_initial(scenario, r);
        ReplicationResult res = run_replication(scenario, init, r);
        const std::uint64_t initially_waiting = init.waiting.size();
        if (initially_waiting + res.arrivals != res.entered + res.abandoned + res.still_waiting)
            throw ConsistencyError("sim: sample-path conservation violated");
        auto scale = [&](std::vector<double>& v) {
            for (double& x : v) x *= inv_n;
        };
        scale(res.total);
        scale(res.queue);
        scale(res.in_service);
        ens.total[r] = std::move(res.total);
        ens.queue[r] = std::move(res.queue);
        ens.in_service[r] = std::move(res.in_service);
    };

    const unsigned workers = std::max(1u, std::min<unsigned>(worker_limit(),
                                                             static_cast<unsigned>(reps)));
    if (workers <= 1) {
        for (std::size_t r = 0; r < reps; ++r) run_one(r);
    } else {
        std::vector<std::thread> pool;
        std::atomic<std::size_t> cursor{0};
        std::exception_ptr error;
        std::mutex error_mutex;
        for (unsigned w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                while (true) {
                    const std::size_t r = cursor.fetch_add(1);
                    if (r >= reps) return;
                    try {
                        run_one(r);
                    } catch (...) {
                        std::lock_guard<std::mutex> lock(error_mutex);
                        if (!error) error = std::current_exception();
                        return;
                    }
                }
            });
        for (auto& th : pool) th.join();
        if (error) std::rethrow_exception(error);
    }

    auto stats = [&](const std::vector<std::vector<double>>& paths, std::vector<double>& mean,
                     std::vector<double>& var) {
        mean.assign(nodes, 0.0);
        var.assign(nodes, 0.0);
        for (const auto& p : paths)
            for (std::size_t i = 0; i < nodes; ++i) mean[i] += p[i];
        for (double& m : mean) m /= static_cast<double>(reps);
        for (const auto& p : paths)
            for (std::size_t i = 0; i < nodes; ++i) {
                const double d = p[i] - mean[i];
                var[i] += d * d;
            }
        for (double& v : var) v /= static_cast<double>(reps);
    };
    stats(ens.total, ens.mean_total, ens.var_total);
    stats(ens.queue, ens.mean_queue, ens.var_queue);
    stats(ens.in_service, ens.mean_in_service, ens.var_in_service);
    return ens;
}

ComparisonReport compare_to_fluid(const FluidSolution& sol, const SimEnsemble& ensemble) {
    if (sol.grid.nodes() != ensemble.grid.nodes() ||
        std::abs(sol.grid.step() - ensemble.grid.step()) > 1e-12)
        throw DomainError("compare: grids do not match");
    ComparisonReport rep;
    for (std::size_t i = 0; i < sol.grid.nodes(); ++i) {
        rep.sup_total = std::max(rep.sup_total, std::abs(ensemble.mean_total[i] - sol.total[i]));
        rep.sup_queue = std::max(rep.sup_queue, std::abs(ensemble.mean_queue[i] - sol.queue[i]));
        rep.sup_in_service = std::max(rep.sup_in_service,
                                      std::abs(ensemble.mean_in_service[i] - sol.in_service[i]));
    }
    return rep;
}

}  // namespace tvfluid
