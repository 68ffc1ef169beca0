#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "tvfluid/solver.hpp"

namespace tvfluid {

/// One measure-valued state at a fixed time, tabulated over the x-grid.
struct MeasureSnapshot {
    enum class Kind { VirtualBufferResidual, InServiceResidual };
    Kind kind;
    std::size_t node;
    std::vector<double> x;       // probe points (virtual buffer allows x < 0)
    std::vector<double> mass;    // nonincreasing in x
};

/// Cumulative flows over the grid: arrived E, left the virtual buffer B,
/// entered service A, abandoned L, completed service S. All nondecreasing.
struct FlowLedger {
    std::vector<double> arrived;
    std::vector<double> left_buffer;
    std::vector<double> entered_service;
    std::vector<double> abandoned;
    std::vector<double> completed;
};

struct BalanceResiduals {
    double queue = 0.0;   // max |Q - (Q0 + E - L - A)|
    double system = 0.0;  // max |X - (X0 + E - L - S)|
};

/// omega(t_i) as solved (accessor; the sequence lives on the solution).
const std::vector<double>& waiting_times(const FluidSolution& sol);

/// Rbar(t)(C_x) = integral_{t-omega(t)}^t F^c(x + t - s) dE(s); x may be
/// negative (virtual-buffer fluid can carry negative remaining patience).
double buffer_measure(const FluidSolution& sol, std::size_t node, double x);

/// Zbar(t)(C_x) = Zbar(0)(C_{x+t})
///              + integral_0^t F^c(omega(s)) G^c(x + t - s) dB(s), x >= 0.
double service_measure(const FluidSolution& sol, std::size_t node, double x);

MeasureSnapshot buffer_snapshot(const FluidSolution& sol, std::size_t node);
MeasureSnapshot service_snapshot(const FluidSolution& sol, std::size_t node);

/// Builds the cumulative-flow family; throws ConsistencyError if a ledger
/// entry decreases by more than 10 h sup(lambda).
FlowLedger build_flow_ledger(const FluidSolution& sol);

BalanceResiduals balance_residuals(const FluidSolution& sol, const FlowLedger& ledger);

}  // namespace tvfluid
