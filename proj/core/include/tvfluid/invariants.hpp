#pragma once

#include <string>
#include <vector>

#include "tvfluid/processes.hpp"
#include "tvfluid/solver.hpp"

namespace tvfluid {

struct InvariantCheck {
    std::string name;
    bool pass = false;
    double measured = 0.0;   // worst observed slack (signed; <= threshold passes)
    double threshold = 0.0;
};

/// Runs the structural checks every solved trajectory must satisfy:
///   - key-equation residual <= picard_tol
///   - entered-service mass a(t) nondecreasing          (slack 10 h sup lambda)
///   - queue bound (X-1)^+ <= N_{F,t}                   (slack 10 h sup lambda)
///   - arrival epoch t - omega(t) nondecreasing         (slack 10 h)
///   - bounded increments |dX| <= (sup lambda + 2 mu + 1) h
///   - non-idling coupling Q (1 - Z) <= 10 h
///   - queue/system balance residuals <= 10 h (sup lambda + mu)
std::vector<InvariantCheck> check_invariants(const FluidSolution& sol);

bool all_pass(const std::vector<InvariantCheck>& checks);

}  // namespace tvfluid
