#pragma once

#include <stdexcept>
#include <string>

namespace tvfluid {

/// Input or configuration rejected before numerics run.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Argument outside an operation's documented domain.
struct DomainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// An iterative scheme failed to reach its tolerance.
struct DivergenceError : std::runtime_error {
    DivergenceError(const std::string& what, double last_residual)
        : std::runtime_error(what), last_residual(last_residual) {}
    double last_residual;
};

/// A structural identity the model guarantees failed at runtime.
struct ConsistencyError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace tvfluid
