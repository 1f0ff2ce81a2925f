#include "tcdp/market.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "tcdp/quadrature.hpp"

namespace tcdp {

void MarketParams::validate() const {
  const std::size_t n = mu.size();
  if (n == 0) throw std::invalid_argument("market needs at least one risky asset");
  if (sigma.size() != n || tau.size() != n) throw std::invalid_argument("mu, sigma and tau lengths differ");
  if (corr.rows() != static_cast<Eigen::Index>(n) || corr.cols() != static_cast<Eigen::Index>(n)) {
    throw std::invalid_argument("correlation matrix has the wrong shape");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!(sigma[i] >= 0.0)) throw std::invalid_argument("sigma must be nonnegative");
    if (!(tau[i] >= 0.0)) throw std::invalid_argument("tau must be nonnegative");
    if (std::abs(corr(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) - 1.0) > 1e-12) {
      throw std::invalid_argument("correlation diagonal must be 1");
    }
  }
  if (!corr.isApprox(corr.transpose(), 1e-12)) throw std::invalid_argument("correlation must be symmetric");
  psd_cholesky(corr);
}

ParameterChain ParameterChain::single(MarketParams p) {
  ParameterChain c;
  c.states.push_back(std::move(p));
  c.transition = Eigen::MatrixXd::Ones(1, 1);
  return c;
}

void ParameterChain::validate() const {
  if (states.empty()) throw std::invalid_argument("chain needs at least one state");
  const auto n = static_cast<Eigen::Index>(states.size());
  if (transition.rows() != n || transition.cols() != n) throw std::invalid_argument("transition shape mismatch");
  for (Eigen::Index i = 0; i < n; ++i) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      const double v = transition(i, j);
      if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("transition entries must lie in [0,1]");
      s += v;
    }
    if (std::abs(s - 1.0) > 1e-12) throw std::invalid_argument("transition row " + std::to_string(i) + " does not sum to 1");
  }
  for (const auto& s : states) {
    s.validate();
    if (s.k() != states.front().k()) throw std::invalid_argument("chain states differ in asset count");
  }
}

Eigen::MatrixXd kronecker(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

ReturnScenarioSet lognormal_return_scenarios(const MarketParams& p, double dt, int order) {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  p.validate();
  const std::size_t k = p.k();
  ReturnScenarioSet set;
  set.Rf = std::exp(p.r * dt);
  bool degenerate = true;
  for (double s : p.sigma) degenerate = degenerate && s == 0.0;
  if (degenerate) {
    Scenario s;
    for (std::size_t i = 0; i < k; ++i) s.R.push_back(std::exp(p.mu[i] * dt));
    s.weight = 1.0;
    set.scenarios.push_back(std::move(s));
    return set;
  }
  const Eigen::MatrixXd L = psd_cholesky(p.corr);
  const auto rule = gauss_hermite_rule(order);
  const double norm = std::pow(std::numbers::pi, -0.5 * static_cast<double>(k));
  const double sqdt = std::sqrt(dt);
  std::vector<int> idx(k, 0);
  double total = 0.0;
  while (true) {
    Scenario s;
    s.weight = norm;
    for (std::size_t a = 0; a < k; ++a) s.weight *= rule.weights[static_cast<std::size_t>(idx[a])];
    s.R.resize(k);
    for (std::size_t i = 0; i < k; ++i) {
      double z = 0.0;
      for (std::size_t j = 0; j <= i; ++j) {
        z += L(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * std::sqrt(2.0) *
             rule.nodes[static_cast<std::size_t>(idx[j])];
      }
      s.R[i] = std::exp((p.mu[i] - 0.5 * p.sigma[i] * p.sigma[i]) * dt + p.sigma[i] * sqdt * z);
    }
    total += s.weight;
    set.scenarios.push_back(std::move(s));
    std::size_t a = k;
    bool done = false;
    while (a > 0) {
      --a;
      if (++idx[a] < order) break;
      idx[a] = 0;
      if (a == 0) done = true;
    }
    if (done) break;
  }
  for (auto& s : set.scenarios) s.weight /= total;
  return set;
}

BinomialParams binomial_params(double mu, double sigma, double h) {
  if (!(sigma > 0.0) || !(h > 0.0)) throw std::invalid_argument("binomial lattice needs sigma > 0 and h > 0");
  BinomialParams b;
  b.p = 0.5 + (mu - 0.5 * sigma * sigma) / (2.0 * sigma) * std::sqrt(h);
  b.u = std::exp(sigma * std::sqrt(h));
  b.d = 1.0 / b.u;
  if (!(b.p > 0.0 && b.p < 1.0)) throw std::domain_error("binomial up-probability outside (0,1); step too coarse");
  return b;
}

ReturnScenarioSet binomial_return_pmf(double mu, double sigma, double dt, int n) {
  if (n < 1) throw std::invalid_argument("binomial sub-period count must be positive");
  const double h = dt / n;
  const auto b = binomial_params(mu, sigma, h);
  const double s = sigma * std::sqrt(h);
  ReturnScenarioSet set;
  double total = 0.0;
  for (int j = 0; j <= n; ++j) {
    const double logc = std::lgamma(n + 1.0) - std::lgamma(j + 1.0) - std::lgamma(n - j + 1.0);
    const double w = std::exp(logc + j * std::log(b.p) + (n - j) * std::log1p(-b.p));
    set.scenarios.push_back(Scenario{{std::exp((2.0 * j - n) * s)}, w});
    total += w;
  }
  for (auto& sc : set.scenarios) sc.weight /= total;
  return set;
}

std::vector<double> merton_point(const MarketParams& p, double gamma) {
  if (!(gamma > 0.0)) throw std::invalid_argument("gamma must be positive");
  const auto k = static_cast<Eigen::Index>(p.k());
  Eigen::MatrixXd S(k, k);
  Eigen::VectorXd ex(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    ex(i) = p.mu[static_cast<std::size_t>(i)] - p.r;
    for (Eigen::Index j = 0; j < k; ++j) {
      S(i, j) = p.sigma[static_cast<std::size_t>(i)] * p.corr(i, j) * p.sigma[static_cast<std::size_t>(j)];
    }
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(S);
  if (!lu.isInvertible()) throw std::domain_error("Lambda Sigma Lambda is singular");
  Eigen::VectorXd m = lu.solve(ex) / gamma;
  return std::vector<double>(m.data(), m.data() + k);
}

std::vector<std::pair<std::size_t, double>> chain_transitions(const ParameterChain& chain, std::size_t state) {
  if (state >= chain.size()) throw std::out_of_range("chain state index out of range");
  std::vector<std::pair<std::size_t, double>> out;
  for (Eigen::Index j = 0; j < chain.transition.cols(); ++j) {
    const double v = chain.transition(static_cast<Eigen::Index>(state), j);
    if (v > 0.0) out.emplace_back(static_cast<std::size_t>(j), v);
  }
  return out;
}

}  // namespace tcdp
