#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "tcdp/approx.hpp"
#include "tcdp/market.hpp"
#include "tcdp/nlp.hpp"
#include "tcdp/policy.hpp"
#include "tcdp/sweep.hpp"

namespace tcdp {

/// Terminal-wealth (consumption = false) or consumption CRRA model over the
/// fraction hypercube [0,1]^k; gamma == 1 selects log utility.
struct PortfolioModel {
  ParameterChain chain;
  double gamma = 3.0;
  double horizon = 1.0;
  double dt = 1.0 / 52.0;
  bool consumption = false;
  double rho = 0.05;
  int degree = 10;
  int nodes_per_dim = 0;     // 0: degree + 1
  int quadrature_order = 0;  // 0: 3 for dt <= 1/12, else 5
  /// Replaces the lognormal scenarios of each chain state when non-empty.
  std::vector<ReturnScenarioSet> scenario_override;
  NlpOptions nlp;
  bool multistart = true;
  bool trading_enabled = true;
  double consumption_guess = 0.05;

  int periods() const;
  int nodes() const { return nodes_per_dim > 0 ? nodes_per_dim : degree + 1; }
  int order() const;
  double beta() const;
  std::size_t k() const { return chain.states.front().k(); }
  bool log_utility() const { return gamma == 1.0; }
  HyperRectangle domain() const { return HyperRectangle::unit_cube(k()); }
  /// Throws std::invalid_argument (message names the violated rule).
  void validate() const;
};

/// True when T/dt is within 1e-9 (relative) of a positive integer.
bool integer_periods(double horizon, double dt, int* n = nullptr);

ValueSurface terminal_surface(const PortfolioModel& model);

/// Log-utility wealth coefficient a_t for period index t (1 without consumption).
double log_wealth_coefficient(const PortfolioModel& model, int t);

struct HorizonSolution {
  std::vector<ValueSurface> surfaces;  // t = 0..N
  std::vector<StagePolicy> policies;   // t = 0..N-1; states empty when not retained
};

struct RunOptions {
  Execution execution = Execution::Parallel;
  int workers = 0;
  /// Which periods keep their node policies (default: all).
  std::function<bool(int t)> retain_policy;
  std::function<void(int t)> progress;
};

std::pair<ValueSurface, StagePolicy> bellman_step(const PortfolioModel& model, const ValueSurface& next, int t,
                                                  const RunOptions& opt = {});

HorizonSolution solve_horizon(const PortfolioModel& model, const RunOptions& opt = {});

/// Per-point solver for period t and discrete state, using next = surfaces at t+1.
PointSolver make_point_solver(const PortfolioModel& model, const ValueSurface& next, int t, std::size_t state);

}  // namespace tcdp
