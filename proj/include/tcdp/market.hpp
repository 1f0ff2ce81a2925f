#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace tcdp {

/// One discrete parameter state: rates are annual, tau is per asset.
struct MarketParams {
  double r = 0.0;
  std::vector<double> mu;
  std::vector<double> sigma;
  Eigen::MatrixXd corr;
  std::vector<double> tau;

  std::size_t k() const { return mu.size(); }
  /// Throws std::invalid_argument on shape or sign violations and
  /// std::domain_error on a non-PSD correlation.
  void validate() const;
};

struct ParameterChain {
  std::vector<MarketParams> states;
  Eigen::MatrixXd transition;  // row-stochastic

  static ParameterChain single(MarketParams p);
  std::size_t size() const { return states.size(); }
  void validate() const;
};

/// Joint chain of independent factors: transition is the Kronecker product,
/// state index is row-major over the factor indices (last factor fastest).
Eigen::MatrixXd kronecker(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

struct Scenario {
  std::vector<double> R;
  double weight;
};

struct ReturnScenarioSet {
  std::vector<Scenario> scenarios;
  double Rf = 1.0;

  std::size_t size() const { return scenarios.size(); }
};

ReturnScenarioSet lognormal_return_scenarios(const MarketParams& p, double dt, int order);

/// Binomial lattice parameters for sub-period length h.
struct BinomialParams {
  double p, u, d;
};
BinomialParams binomial_params(double mu, double sigma, double h);

/// n+1 scenarios R_j = u^j d^{n-j}, j = 0..n (one risky asset), R_f left at 1.
ReturnScenarioSet binomial_return_pmf(double mu, double sigma, double dt, int n);

/// (Lambda Sigma Lambda)^{-1} (mu - r) / gamma.
std::vector<double> merton_point(const MarketParams& p, double gamma);

std::vector<std::pair<std::size_t, double>> chain_transitions(const ParameterChain& chain, std::size_t state);

}  // namespace tcdp
