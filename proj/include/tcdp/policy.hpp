#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "tcdp/approx.hpp"
#include "tcdp/nlp.hpp"

namespace tcdp {

/// Optimal controls at one state. `buy`/`sell` are per traded asset
/// (risky assets, then the option leg for option models). `consumption`
/// is NaN for models without consumption.
struct Decision {
  std::vector<double> buy;
  std::vector<double> sell;
  std::vector<double> post;  // post-trade holdings x + buy - sell
  double consumption = std::numeric_limits<double>::quiet_NaN();
  double value = 0.0;
  SolveStatus status = SolveStatus::Converged;
  int iterations = 0;

  bool has_consumption() const { return !std::isnan(consumption); }
  /// Largest single trade, max(|buy|_inf, |sell|_inf).
  double trade_size() const;
  /// Sum of buy and sell entries.
  double total_trade() const;
};

/// Solves the period subproblem at an arbitrary continuous state.
using PointSolver = std::function<Decision(std::span<const double> x)>;

/// One surface per discrete state at a given period index.
struct ValueSurface {
  int t = 0;
  std::vector<ChebyshevSurface> states;
};

/// Node decisions per discrete state; node order is the grid's flat order.
struct StagePolicy {
  int t = 0;
  std::vector<std::vector<Decision>> states;
};

}  // namespace tcdp
