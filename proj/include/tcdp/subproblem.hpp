#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "tcdp/approx.hpp"
#include "tcdp/nlp.hpp"
#include "tcdp/policy.hpp"

namespace tcdp {

/// How next-period values are aggregated over scenarios.
///   Power:       E[Pi^{1-gamma} g(x')]
///   Log:         E[a log Pi + g(x')]
///   EpsteinZin:  1/(1-gamma) (E[((1-gamma) Pi^{1-gamma} g(x'))^theta])^{1/theta},
///                theta = (1-psi)/(1-gamma)
enum class Aggregator { Power, Log, EpsteinZin };

struct TradeScenario {
  std::vector<double> R;  // gross return per traded asset
  double weight = 0.0;
  const ChebyshevSurface* next = nullptr;
};

/// One node's maximization over (buy, sell[, c]) for k traded assets.
/// Variable layout: buy[0..k), sell[0..k), then c when consumption is on.
struct TradeSubproblem {
  std::vector<double> x;    // pre-trade fractions
  std::vector<double> tau;  // cost ratio per asset
  std::vector<char> frozen; // asset whose post-trade holding is forced to 0
  std::vector<TradeScenario> scenarios;
  double Rf = 1.0;
  double dt = 1.0;
  double gamma = 3.0;
  Aggregator aggregator = Aggregator::Power;
  double log_coef = 1.0;  // a_{t+dt} for the log aggregator
  double psi = 3.0;       // Epstein-Zin risk aversion
  bool consumption = false;
  double beta = 1.0;
  double c_min = 1e-8;
  bool trading_enabled = true;

  std::size_t k() const { return x.size(); }
  int dimension() const { return static_cast<int>(2 * k() + (consumption ? 1 : 0)); }

  /// Objective value (to maximize) and gradient; -inf when some Pi <= 0.
  double evaluate(std::span<const double> v, std::span<double> grad) const;

  SmoothProgram program() const;

  /// Feasible full-length start that moves toward the post-trade target
  /// holdings `target` (length k) with consumption `c`.
  std::vector<double> start_toward(std::span<const double> target, double c) const;
  /// Zero trade, selling proportionally only if cash would be negative.
  std::vector<double> zero_trade_start(double c) const;

  Decision to_decision(const SolveReport& rep) const;
};

struct StartHints {
  std::vector<double> target;  // e.g. Merton point, empty to skip
  double consumption = 0.01;
  const Decision* warm = nullptr;
  bool multistart = true;
};

/// Runs the solver from the structured starts (zero trade, target) and the
/// warm start, keeps the best KKT point (ties go to the smaller total trade)
/// and nets any buy/sell pair on the same asset.
Decision solve_trade(const TradeSubproblem& sp, const StartHints& hints, const NlpOptions& opt);

}  // namespace tcdp
