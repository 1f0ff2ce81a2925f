#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "tcdp/approx.hpp"
#include "tcdp/policy.hpp"

namespace tcdp {

/// Solves one node given the previous node on the same grid line (or null
/// at the start of a line).
using NodeSolver = std::function<Decision(std::size_t state, std::span<const double> x, const Decision* previous)>;

enum class Execution { Serial, Parallel };

/// Runs `solve` at every (state, node). Nodes are processed in lines along
/// the last grid dimension so each line is a self-contained warm-start
/// chain; lines are the unit of parallel work, which keeps results
/// independent of the thread count.
std::vector<std::vector<Decision>> sweep_nodes(const TensorNodeGrid& grid, std::size_t n_states,
                                               const NodeSolver& solve, Execution mode, int workers = 0);

/// Fits node values of each state to a complete Chebyshev surface.
std::vector<ChebyshevSurface> fit_values(const TensorNodeGrid& grid, int degree,
                                         const std::vector<std::vector<Decision>>& decisions);

}  // namespace tcdp
