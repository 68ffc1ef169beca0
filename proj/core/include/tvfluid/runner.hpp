#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace tvfluid {

/// Exit codes shared by the CLI and the library-level runners.
enum ExitCode : int {
    kOk = 0,
    kInputError = 2,       // schema/validation/domain problems
    kDivergence = 3,       // numerical non-convergence
    kInvariantFailure = 4, // --strict and an invariant check failed
};

struct RunOptions {
    std::filesystem::path scenario_path;
    std::filesystem::path out_dir = ".";
    std::optional<double> grid_h;       // overrides scenario grid.h
    std::optional<std::uint64_t> seed;  // overrides scenario sim.seed
    bool strict = false;                // invariant violations flip the exit code
};

/// Each runner writes its files under out_dir and returns an ExitCode; all
/// errors are reported on stderr, never thrown across this boundary.
int run_solve(const RunOptions& options);
int run_simulate(const RunOptions& options);
int run_compare(const RunOptions& options);
int run_equivalence(const RunOptions& options);
int run_check_invariants(const RunOptions& options);

/// Worker cap for replication parallelism: TVFLUID_THREADS when set, else
/// hardware concurrency.
unsigned worker_limit();

}  // namespace tvfluid
