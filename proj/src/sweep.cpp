#include "tcdp/sweep.hpp"

#include <exception>
#include <stdexcept>

#include <omp.h>

namespace tcdp {

namespace {

void solve_line(const TensorNodeGrid& grid, std::size_t state, std::size_t line, const NodeSolver& solve,
                std::vector<Decision>& out) {
  const auto m = static_cast<std::size_t>(grid.nodes_per_dim());
  std::vector<double> x(grid.dimension());
  const Decision* prev = nullptr;
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t flat = line * m + i;
    grid.point(flat, x);
    out[flat] = solve(state, x, prev);
    prev = &out[flat];
  }
}

}  // namespace

std::vector<std::vector<Decision>> sweep_nodes(const TensorNodeGrid& grid, std::size_t n_states,
                                               const NodeSolver& solve, Execution mode, int workers) {
  std::vector<std::vector<Decision>> out(n_states, std::vector<Decision>(grid.size()));
  const std::size_t lines = grid.size() / static_cast<std::size_t>(grid.nodes_per_dim());
  const std::size_t jobs = n_states * lines;
  if (mode == Execution::Serial) {
    for (std::size_t j = 0; j < jobs; ++j) solve_line(grid, j / lines, j % lines, solve, out[j / lines]);
    return out;
  }
  std::exception_ptr error;
  const int threads = workers > 0 ? workers : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
  for (std::size_t j = 0; j < jobs; ++j) {
    try {
      solve_line(grid, j / lines, j % lines, solve, out[j / lines]);
    } catch (...) {
#pragma omp critical(tcdp_sweep_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return out;
}

std::vector<ChebyshevSurface> fit_values(const TensorNodeGrid& grid, int degree,
                                         const std::vector<std::vector<Decision>>& decisions) {
  std::vector<ChebyshevSurface> out;
  out.reserve(decisions.size());
  std::vector<double> v(grid.size());
  for (const auto& state : decisions) {
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = state[i].value;
    out.push_back(fit_complete(v, degree, grid));
  }
  return out;
}

}  // namespace tcdp
