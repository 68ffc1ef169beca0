#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <vector>

#include "tvfluid/distribution.hpp"
#include "tvfluid/grid.hpp"
#include "tvfluid/initial_condition.hpp"
#include "tvfluid/rate.hpp"
#include "tvfluid/solver.hpp"

namespace tvfluid {

/// Discrete-event scenario for the stochastic queue with n servers: arrivals
/// are a nonhomogeneous Poisson process with rate n*lambda(t), service and
/// patience draws are i.i.d., FCFS, and a waiting customer abandons exactly
/// when its patience expires before service starts.
struct SimScenario {
    int servers = 1;
    std::shared_ptr<const RateFunction> rate;  // unscaled lambda
    std::shared_ptr<const Distribution> patience;
    std::shared_ptr<const Distribution> service;
    InitialCondition initial;  // fluid state, sampled at scale n
    Grid grid{1.0, 1.0};       // sampling grid and horizon
    std::uint64_t seed = 0;
    int replications = 1;

    void validate() const;
};

/// Explicit initial customers for one replication (unit tests inject these
/// directly; simulate() samples them from the fluid initial state).
struct InitialCustomers {
    struct Waiter {
        double age;                // time already spent waiting
        double residual_patience;  // > 0
    };
    std::vector<Waiter> waiting;          // FCFS order: oldest first
    std::vector<double> service_residual; // remaining service times
};

/// Scaled sample paths plus ensemble statistics on the grid.
struct SimEnsemble {
    Grid grid{1.0, 1.0};
    int servers = 1;
    // paths[r][i]: replication r at node i, already divided by n
    std::vector<std::vector<double>> total;
    std::vector<std::vector<double>> queue;
    std::vector<std::vector<double>> in_service;
    std::vector<double> mean_total, mean_queue, mean_in_service;
    std::vector<double> var_total, var_queue, var_in_service;

    /// Zero-noise surrogate: a single "replication" that copies a fluid
    /// trajectory (the n -> infinity limit object).
    static SimEnsemble from_fluid(const FluidSolution& sol);
};

/// Runs all replications (parallel up to TVFLUID_THREADS, merged by index).
SimEnsemble simulate(const SimScenario& scenario);

/// One replication with explicit initial customers; deterministic given rng.
struct ReplicationResult {
    std::vector<double> total, queue, in_service;  // unscaled head counts
    std::uint64_t arrivals = 0, entered = 0, abandoned = 0, still_waiting = 0;
};
ReplicationResult run_replication(const SimScenario& scenario,
                                  const InitialCustomers& initial,
                                  std::uint64_t replication_index);

struct ComparisonReport {
    double sup_total = 0.0;
    double sup_queue = 0.0;
    double sup_in_service = 0.0;
};

/// sup over grid nodes of |ensemble mean - fluid| per quantity; throws
/// DomainError when the grids differ.
ComparisonReport compare_to_fluid(const FluidSolution& sol, const SimEnsemble& ensemble);

}  // namespace tvfluid
