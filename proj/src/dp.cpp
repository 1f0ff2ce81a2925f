#include "tcdp/dp.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>

#include "tcdp/subproblem.hpp"

namespace tcdp {

bool integer_periods(double horizon, double dt, int* n) {
  if (!(horizon > 0.0) || !(dt > 0.0)) return false;
  const double q = horizon / dt;
  const double r = std::round(q);
  if (r < 1.0 || std::abs(q - r) > 1e-9 * std::max(1.0, q)) return false;
  if (n != nullptr) *n = static_cast<int>(r);
  return true;
}

int PortfolioModel::periods() const {
  int n = 0;
  if (!integer_periods(horizon, dt, &n)) throw std::invalid_argument("horizon not integer periods");
  return n;
}

int PortfolioModel::order() const {
  if (quadrature_order > 0) return quadrature_order;
  return dt <= 1.0 / 12.0 + 1e-12 ? 3 : 5;
}

double PortfolioModel::beta() const { return std::exp(-rho * dt); }

void PortfolioModel::validate() const {
  chain.validate();
  if (!(gamma > 0.0)) throw std::invalid_argument("gamma must be positive");
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  if (!integer_periods(horizon, dt)) throw std::invalid_argument("horizon not integer periods");
  if (degree < 0) throw std::invalid_argument("degree must be nonnegative");
  if (nodes() < degree + 1) throw std::invalid_argument("nodes per dimension must be at least degree + 1");
  if (consumption) {
    const double b = beta();
    if (!(b > 0.0 && b < 1.0)) throw std::invalid_argument("discount factor must lie in (0,1)");
    for (const auto& s : chain.states) {
      if (!(s.r > 0.0)) throw std::invalid_argument("consumption terminal value needs r > 0");
    }
  }
  if (!scenario_override.empty() && scenario_override.size() != chain.size()) {
    throw std::invalid_argument("scenario override must give one set per chain state");
  }
}

double log_wealth_coefficient(const PortfolioModel& model, int t) {
  if (!model.consumption) return 1.0;
  const int n = model.periods();
  const double b = model.beta();
  double a = model.dt / (1.0 - b);
  for (int j = n; j > t; --j) a = model.dt + b * a;
  return a;
}

ValueSurface terminal_surface(const PortfolioModel& model) {
  model.validate();
  ValueSurface vs;
  vs.t = model.periods();
  const auto dom = model.domain();
  if (!model.consumption) {
    const double g = model.log_utility() ? 0.0 : 1.0 / (1.0 - model.gamma);
    for (std::size_t s = 0; s < model.chain.size(); ++s) vs.states.push_back(ChebyshevSurface::constant(dom, model.degree, g));
    return vs;
  }
  const TensorNodeGrid grid(model.nodes(), dom);
  const double b = model.beta();
  std::vector<double> v(grid.size());
  std::vector<double> x(model.k());
  for (const auto& p : model.chain.states) {
    for (std::size_t i = 0; i < grid.size(); ++i) {
      grid.point(i, x);
      double cost = 0.0;
      for (std::size_t j = 0; j < x.size(); ++j) cost += p.tau[j] * x[j];
      const double base = p.r * (1.0 - cost);
      v[i] = model.log_utility() ? std::log(base) * model.dt / (1.0 - b)
                                 : std::pow(base, 1.0 - model.gamma) * model.dt / ((1.0 - model.gamma) * (1.0 - b));
    }
    vs.states.push_back(fit_complete(v, model.degree, grid));
  }
  return vs;
}

namespace {

// Everything a node solve at period t needs; owned so point solvers can
// outlive the step that created them.
struct StageContext {
  std::vector<ChebyshevSurface> mixed;  // sum_theta' P(theta, theta') G_{t+dt, theta'}
  std::vector<ReturnScenarioSet> scenarios;
  std::vector<std::vector<double>> merton;
  double log_coef = 1.0;
};

std::shared_ptr<StageContext> make_context(const PortfolioModel& model, const ValueSurface& next, int t) {
  auto ctx = std::make_shared<StageContext>();
  const std::size_t S = model.chain.size();
  if (next.states.size() != S) throw std::invalid_argument("next surface has the wrong number of states");
  for (std::size_t s = 0; s < S; ++s) {
    ChebyshevSurface acc = next.states.front().combine(0.0, next.states.front(), 0.0);
    for (std::size_t j = 0; j < S; ++j) {
      const double p = model.chain.transition(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(j));
      if (p != 0.0) acc = acc.combine(1.0, next.states[j], p);
    }
    ctx->mixed.push_back(std::move(acc));
    const auto& params = model.chain.states[s];
    ctx->scenarios.push_back(model.scenario_override.empty() ? lognormal_return_scenarios(params, model.dt, model.order())
                                                             : model.scenario_override[s]);
    std::vector<double> m(model.k(), 0.0);
    try {
      m = merton_point(params, model.gamma);
    } catch (const std::exception&) {
    }
    double sum = 0.0;
    for (double& v : m) {
      v = std::clamp(v, 0.0, 1.0);
      sum += v;
    }
    if (sum > 0.95) {
      for (double& v : m) v *= 0.95 / sum;
    }
    ctx->merton.push_back(std::move(m));
  }
  ctx->log_coef = log_wealth_coefficient(model, t + 1);
  return ctx;
}

TradeSubproblem make_subproblem(const PortfolioModel& model, const StageContext& ctx, std::size_t s,
                                std::span<const double> x) {
  const auto& params = model.chain.states[s];
  const auto& set = ctx.scenarios[s];
  TradeSubproblem sp;
  sp.x.assign(x.begin(), x.end());
  sp.tau = params.tau;
  sp.Rf = model.scenario_override.empty() ? std::exp(params.r * model.dt) : set.Rf;
  sp.dt = model.dt;
  sp.gamma = model.gamma;
  sp.aggregator = model.log_utility() ? Aggregator::Log : Aggregator::Power;
  sp.log_coef = ctx.log_coef;
  sp.consumption = model.consumption;
  sp.beta = model.consumption ? model.beta() : 1.0;
  sp.trading_enabled = model.trading_enabled;
  sp.scenarios.reserve(set.size());
  for (const auto& sc : set.scenarios) sp.scenarios.push_back(TradeScenario{sc.R, sc.weight, &ctx.mixed[s]});
  return sp;
}

Decision solve_node(const PortfolioModel& model, const StageContext& ctx, std::size_t s, std::span<const double> x,
                    const Decision* warm) {
  const TradeSubproblem sp = make_subproblem(model, ctx, s, x);
  StartHints hints;
  hints.target = ctx.merton[s];
  hints.consumption = model.consumption_guess;
  hints.warm = warm;
  hints.multistart = model.multistart;
  return solve_trade(sp, hints, model.nlp);
}

}  // namespace

std::pair<ValueSurface, StagePolicy> bellman_step(const PortfolioModel& model, const ValueSurface& next, int t,
                                                  const RunOptions& opt) {
  const auto ctx = make_context(model, next, t);
  const TensorNodeGrid grid(model.nodes(), model.domain());
  auto decisions = sweep_nodes(
      grid, model.chain.size(),
      [&](std::size_t s, std::span<const double> x, const Decision* prev) { return solve_node(model, *ctx, s, x, prev); },
      opt.execution, opt.workers);
  for (const auto& st : decisions) {
    for (const auto& d : st) {
      if (d.status == SolveStatus::Infeasible || !std::isfinite(d.value)) {
        throw std::runtime_error("node subproblem failed at period " + std::to_string(t));
      }
    }
  }
  ValueSurface vs;
  vs.t = t;
  vs.states = fit_values(grid, model.degree, decisions);
  StagePolicy pol;
  pol.t = t;
  pol.states = std::move(decisions);
  return {std::move(vs), std::move(pol)};
}

HorizonSolution solve_horizon(const PortfolioModel& model, const RunOptions& opt) {
  model.validate();
  const int n = model.periods();
  HorizonSolution sol;
  sol.surfaces.resize(static_cast<std::size_t>(n) + 1);
  sol.policies.resize(static_cast<std::size_t>(n));
  sol.surfaces[static_cast<std::size_t>(n)] = terminal_surface(model);
  for (int t = n - 1; t >= 0; --t) {
    auto [vs, pol] = bellman_step(model, sol.surfaces[static_cast<std::size_t>(t) + 1], t, opt);
    sol.surfaces[static_cast<std::size_t>(t)] = std::move(vs);
    if (!opt.retain_policy || opt.retain_policy(t)) {
      sol.policies[static_cast<std::size_t>(t)] = std::move(pol);
    } else {
      sol.policies[static_cast<std::size_t>(t)].t = t;
    }
    if (opt.progress) opt.progress(t);
  }
  return sol;
}

PointSolver make_point_solver(const PortfolioModel& model, const ValueSurface& next, int t, std::size_t state) {
  auto ctx = make_context(model, next, t);
  if (state >= model.chain.size()) throw std::out_of_range("state index out of range");
  return [model, ctx, state](std::span<const double> x) { return solve_node(model, *ctx, state, x, nullptr); };
}

}  // namespace tcdp
