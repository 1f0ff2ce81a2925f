#include "tcdp/options.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <ostream>
#include <stdexcept>
#include <string>

#include "tcdp/market.hpp"
#include "tcdp/subproblem.hpp"
#include "tcdp/sweep.hpp"

namespace tcdp {

std::string to_string(OptionKind k) {
  switch (k) {
    case OptionKind::Put: return "put";
    case OptionKind::Call: return "call";
    case OptionKind::Butterfly: return "butterfly";
  }
  return "?";
}

OptionKind parse_option_kind(const std::string& s) {
  if (s == "put") return OptionKind::Put;
  if (s == "call") return OptionKind::Call;
  if (s == "butterfly") return OptionKind::Butterfly;
  throw std::invalid_argument("unknown option kind '" + s + "'");
}

double option_payoff(OptionKind kind, double A) {
  switch (kind) {
    case OptionKind::Put: return std::max(1.0 - A, 0.0);
    case OptionKind::Call: return std::max(A - 1.0, 0.0);
    case OptionKind::Butterfly: return std::abs(A - 1.0);
  }
  return 0.0;
}

namespace {

int integer_ratio(double a, double b, const char* what) {
  int n = 0;
  if (!integer_periods(a, b, &n)) throw std::invalid_argument(std::string(what) + " is not an integer multiple");
  return n;
}

double log_binomial_pmf(int m, int j, double p) {
  return std::lgamma(m + 1.0) - std::lgamma(j + 1.0) - std::lgamma(m - j + 1.0) + j * std::log(p) +
         (m - j) * std::log1p(-p);
}

double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace

OptionLattice build_lattice(double mu, double sigma, double dt, double h, double expiration, double prune) {
  if (!(dt > 0.0) || !(h > 0.0) || !(expiration > 0.0)) throw std::invalid_argument("lattice steps must be positive");
  OptionLattice lat;
  lat.h = h;
  lat.n = integer_ratio(dt, h, "trading step over sub-period");
  lat.periods = integer_ratio(expiration, dt, "expiration over trading step");
  const auto b = binomial_params(mu, sigma, h);
  lat.u = b.u;
  lat.d = b.d;
  lat.p = b.p;
  const double s = sigma * std::sqrt(h);
  const double log_eps = std::log(std::max(prune, std::numeric_limits<double>::min()));
  for (int t = 0; t <= lat.periods; ++t) {
    const int m = t * lat.n;
    std::vector<double> layer(static_cast<std::size_t>(m) + 1);
    for (int j = 0; j <= m; ++j) layer[static_cast<std::size_t>(j)] = std::exp((2.0 * j - m) * s);
    lat.A.push_back(std::move(layer));
    const int mode = std::clamp(static_cast<int>(std::floor((m + 1) * b.p)), 0, m);
    int lo = mode, hi = mode;
    while (lo > 0 && log_binomial_pmf(m, lo - 1, b.p) >= log_eps) --lo;
    while (hi < m && log_binomial_pmf(m, hi + 1, b.p) >= log_eps) ++hi;
    lat.lo.push_back(lo);
    lat.hi.push_back(hi);
  }
  return lat;
}

OptionLattice price_option(const OptionLattice& lattice, OptionKind kind, double r) {
  OptionLattice out = lattice;
  const double growth = std::exp(r * lattice.h);
  out.q = (growth - lattice.d) / (lattice.u - lattice.d);
  if (!(out.q > 0.0 && out.q < 1.0)) throw std::domain_error("risk-neutral probability outside (0,1)");
  const double disc = std::exp(-r * lattice.h);
  const int total = lattice.periods * lattice.n;
  const double s = std::log(lattice.u);
  std::vector<double> P(static_cast<std::size_t>(total) + 1);
  for (int j = 0; j <= total; ++j) P[static_cast<std::size_t>(j)] = option_payoff(kind, std::exp((2.0 * j - total) * s));
  out.price.assign(static_cast<std::size_t>(lattice.periods) + 1, {});
  out.price.back() = P;
  for (int step = total - 1; step >= 0; --step) {
    for (int j = 0; j <= step; ++j) {
      const auto jj = static_cast<std::size_t>(j);
      P[jj] = disc * (out.q * P[jj + 1] + (1.0 - out.q) * P[jj]);
    }
    P.resize(static_cast<std::size_t>(step) + 1);
    if (step % lattice.n == 0) out.price[static_cast<std::size_t>(step / lattice.n)] = P;
  }
  return out;
}

void write_price_csv(std::ostream& os, const OptionLattice& lattice, double dt) {
  if (lattice.price.empty()) throw std::invalid_argument("lattice has not been priced");
  const auto old = os.precision(17);
  os << "t,A,price\n";
  for (std::size_t t = 0; t < lattice.price.size(); ++t) {
    for (std::size_t j = 0; j < lattice.price[t].size(); ++j) {
      os << static_cast<double>(t) * dt << ',' << lattice.A[t][j] << ',' << lattice.price[t][j] << '\n';
    }
  }
  os.precision(old);
}

double black_scholes_put(double S, double K, double r, double sigma, double T) {
  if (!(S > 0.0) || !(K > 0.0) || !(sigma > 0.0) || !(T > 0.0)) {
    throw std::invalid_argument("Black-Scholes needs S, K, sigma, T > 0");
  }
  const double v = sigma * std::sqrt(T);
  const double d1 = (std::log(S / K) + (r + 0.5 * sigma * sigma) * T) / v;
  const double d2 = d1 - v;
  return K * std::exp(-r * T) * norm_cdf(-d2) - S * norm_cdf(-d1);
}

double black_scholes_call(double S, double K, double r, double sigma, double T) {
  if (!(S > 0.0) || !(K > 0.0) || !(sigma > 0.0) || !(T > 0.0)) {
    throw std::invalid_argument("Black-Scholes needs S, K, sigma, T > 0");
  }
  const double v = sigma * std::sqrt(T);
  const double d1 = (std::log(S / K) + (r + 0.5 * sigma * sigma) * T) / v;
  const double d2 = d1 - v;
  return S * norm_cdf(d1) - K * std::exp(-r * T) * norm_cdf(d2);
}

int OptionPortfolioModel::periods_per_round() const {
  int n = 0;
  if (!integer_periods(option.expiration, dt, &n)) throw std::invalid_argument("horizon not integer periods");
  return n;
}

double OptionPortfolioModel::beta() const { return std::exp(-rho * dt); }

std::vector<double> OptionPortfolioModel::merton() const {
  const double m = (mu - r) / (risk_aversion() * sigma * sigma);
  return {std::clamp(m, 0.0, 0.95), 0.0};
}

void OptionPortfolioModel::validate() const {
  if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
  if (!(tau_stock >= 0.0) || !(option.tau >= 0.0)) throw std::invalid_argument("transaction costs must be nonnegative");
  if (!(gamma > 0.0) || gamma == 1.0) throw std::invalid_argument("gamma must be positive and differ from 1");
  if (rounds < 1) throw std::invalid_argument("rounds must be positive");
  if (!(option.expiration > 0.0)) throw std::invalid_argument("expiration must be positive");
  periods_per_round();
  if (!integer_periods(dt, h)) throw std::invalid_argument("dt is not an integer multiple of h");
  if (degree < 0) throw std::invalid_argument("degree must be nonnegative");
  if (nodes() < degree + 1) throw std::invalid_argument("nodes per dimension must be at least degree + 1");
  if (preference == Preference::EpsteinZin) {
    if (!consumption) throw std::invalid_argument("Epstein-Zin preferences need the consumption model");
    if (!(psi > 0.0) || psi == 1.0) throw std::invalid_argument("psi must be positive and differ from 1");
  }
  if (consumption) {
    const double b = beta();
    if (!(b > 0.0 && b < 1.0)) throw std::invalid_argument("discount factor must lie in (0,1)");
    if (!(r > 0.0)) throw std::invalid_argument("consumption terminal value needs r > 0");
  }
}

ChebyshevSurface option_terminal_surface(const OptionPortfolioModel& model) {
  const auto dom = HyperRectangle::unit_cube(2);
  if (!model.consumption) return ChebyshevSurface::constant(dom, model.degree, 1.0 / (1.0 - model.gamma));
  const TensorNodeGrid grid(model.nodes(), dom);
  const double scale = model.dt / ((1.0 - model.beta()) * (1.0 - model.gamma));
  std::vector<double> v(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double x = grid.point(i)[0];
    v[i] = std::pow(model.r * (1.0 - model.tau_stock * x), 1.0 - model.gamma) * scale;
  }
  return fit_complete(v, model.degree, grid);
}

ChebyshevSurface reissue_surface(const ChebyshevSurface& g_plus) {
  if (g_plus.dimension() != 2) throw std::invalid_argument("reissue expects an (x, y) surface");
  const auto& dom = g_plus.domain();
  const int d = g_plus.degree();
  // T_j at the y-lower edge (z = -1) is (-1)^j; fold y out of every term.
  const double y0 = dom.lower[1];
  const double z = 2.0 * (y0 - dom.lower[1]) / (dom.upper[1] - dom.lower[1]) - 1.0;
  std::vector<double> Ty(static_cast<std::size_t>(d) + 1);
  chebyshev_basis(z, d, Ty);
  const auto idx = graded_lex_indices(d, 2);
  std::vector<double> folded(static_cast<std::size_t>(d) + 1, 0.0);
  const auto c = g_plus.coefficients();
  for (std::size_t i = 0; i < idx.size(); ++i) {
    folded[static_cast<std::size_t>(idx[i][0])] += c[i] * Ty[static_cast<std::size_t>(idx[i][1])];
  }
  std::vector<double> out(idx.size(), 0.0);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i][1] == 0) out[i] = folded[static_cast<std::size_t>(idx[i][0])];
  }
  return ChebyshevSurface(dom, d, std::move(out));
}

namespace {

struct OptionStateData {
  std::vector<TradeScenario> scenarios;
  bool frozen = false;
};

// Everything one layer's node solves need; shared so point solvers can
// outlive the step.
struct OptionContext {
  std::vector<ChebyshevSurface> next;  // per retained node of t+1, or one surface
  int next_first = 0;
  std::vector<OptionStateData> states;
  std::vector<double> merton;
};

std::shared_ptr<OptionContext> make_option_context(const OptionPortfolioModel& model, const OptionLattice& lat, int t,
                                                   const ValueSurface& next) {
  if (t < 0 || t >= lat.periods) throw std::out_of_range("lattice layer out of range");
  if (lat.price.empty()) throw std::invalid_argument("lattice has not been priced");
  const auto tt = static_cast<std::size_t>(t);
  auto ctx = std::make_shared<OptionContext>();
  ctx->next = next.states;
  ctx->next_first = lat.lo[tt + 1];
  const bool uniform = ctx->next.size() == 1;
  if (!uniform && static_cast<int>(ctx->next.size()) != lat.retained(t + 1)) {
    throw std::invalid_argument("next surface count does not match the lattice layer");
  }
  const auto pmf = binomial_return_pmf(model.mu, model.sigma, model.dt, lat.n);
  ctx->merton = model.merton();
  for (int j = lat.lo[tt]; j <= lat.hi[tt]; ++j) {
    OptionStateData sd;
    const double P = lat.price[tt][static_cast<std::size_t>(j)];
    sd.frozen = !model.option_enabled || !(P > 0.0);
    for (int l = 0; l <= lat.n; ++l) {
      const int child = j + l;
      const double Pn = lat.price[tt + 1][static_cast<std::size_t>(child)];
      const double ratio = sd.frozen ? 0.0 : Pn / P;
      const ChebyshevSurface* g;
      if (uniform) {
        g = &ctx->next.front();
      } else {
        // Children outside the retained window take the nearest retained node.
        const int c = std::clamp(child, lat.lo[tt + 1], lat.hi[tt + 1]) - ctx->next_first;
        g = &ctx->next[static_cast<std::size_t>(c)];
      }
      sd.scenarios.push_back(TradeScenario{{pmf.scenarios[static_cast<std::size_t>(l)].R[0], ratio},
                                           pmf.scenarios[static_cast<std::size_t>(l)].weight, g});
    }
    ctx->states.push_back(std::move(sd));
  }
  return ctx;
}

Decision solve_option_node(const OptionPortfolioModel& model, const OptionContext& ctx, std::size_t s,
                           std::span<const double> x, const Decision* warm) {
  const auto& sd = ctx.states[s];
  TradeSubproblem sp;
  sp.x.assign(x.begin(), x.end());
  sp.tau = {model.tau_stock, model.option.tau};
  sp.frozen = {0, static_cast<char>(sd.frozen ? 1 : 0)};
  sp.scenarios = sd.scenarios;
  sp.Rf = std::exp(model.r * model.dt);
  sp.dt = model.dt;
  sp.gamma = model.gamma;
  sp.aggregator = model.preference == Preference::EpsteinZin ? Aggregator::EpsteinZin : Aggregator::Power;
  sp.psi = model.psi;
  sp.consumption = model.consumption;
  sp.beta = model.consumption ? model.beta() : 1.0;
  StartHints hints;
  hints.target = ctx.merton;
  hints.consumption = model.consumption_guess;
  hints.warm = warm;
  hints.multistart = model.multistart;
  return solve_trade(sp, hints, model.nlp);
}

ValueSurface next_values(const OptionPortfolioModel& model, const std::vector<ValueSurface>& surfaces, int t) {
  const int N = model.periods();
  const int Nr = model.periods_per_round();
  const auto& nxt = surfaces[static_cast<std::size_t>(t) + 1];
  if (t + 1 == N || (t + 1) % Nr != 0) return nxt;
  ValueSurface vs;
  vs.t = nxt.t;
  vs.states = {reissue_surface(nxt.states.front())};
  return vs;
}

}  // namespace

std::pair<ValueSurface, StagePolicy> bellman_step_option(const OptionPortfolioModel& model,
                                                         const OptionLattice& lattice, int t,
                                                         const ValueSurface& next, const RunOptions& opt) {
  const auto ctx = make_option_context(model, lattice, t, next);
  const TensorNodeGrid grid(model.nodes(), HyperRectangle::unit_cube(2));
  auto decisions = sweep_nodes(
      grid, ctx->states.size(),
      [&](std::size_t s, std::span<const double> x, const Decision* prev) {
        return solve_option_node(model, *ctx, s, x, prev);
      },
      opt.execution, opt.workers);
  for (const auto& st : decisions) {
    for (const auto& d : st) {
      if (d.status == SolveStatus::Infeasible || !std::isfinite(d.value)) {
        throw std::runtime_error("option node subproblem failed at layer " + std::to_string(t));
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

OptionSolution solve_option_horizon(const OptionPortfolioModel& model, const RunOptions& opt) {
  model.validate();
  OptionSolution sol;
  sol.lattice = price_option(build_lattice(model.mu, model.sigma, model.dt, model.h, model.option.expiration, model.prune),
                             model.option.kind, model.r);
  const int N = model.periods();
  sol.surfaces.resize(static_cast<std::size_t>(N) + 1);
  sol.policies.resize(static_cast<std::size_t>(N));
  sol.surfaces.back().t = N;
  sol.surfaces.back().states = {option_terminal_surface(model)};
  for (int t = N - 1; t >= 0; --t) {
    const ValueSurface next = next_values(model, sol.surfaces, t);
    auto [vs, pol] = bellman_step_option(model, sol.lattice, sol.local(t), next, opt);
    vs.t = t;
    pol.t = t;
    sol.surfaces[static_cast<std::size_t>(t)] = std::move(vs);
    const bool keep = opt.retain_policy ? opt.retain_policy(t) : t == 0;
    if (keep) sol.policies[static_cast<std::size_t>(t)] = std::move(pol);
    else sol.policies[static_cast<std::size_t>(t)].t = t;
    if (opt.progress) opt.progress(t);
  }
  return sol;
}

PointSolver make_option_point_solver(const OptionPortfolioModel& model, const OptionSolution& sol, int t, int j) {
  const int N = model.periods();
  if (t < 0 || t >= N) throw std::out_of_range("period out of range");
  const int lt = sol.local(t);
  const auto lt_s = static_cast<std::size_t>(lt);
  if (j < sol.lattice.lo[lt_s] || j > sol.lattice.hi[lt_s]) throw std::out_of_range("lattice node not retained");
  const ValueSurface next = next_values(model, sol.surfaces, t);
  auto ctx = make_option_context(model, sol.lattice, lt, next);
  const auto s = static_cast<std::size_t>(j - sol.lattice.lo[lt_s]);
  return [model, ctx, s](std::span<const double> x) { return solve_option_node(model, *ctx, s, x, nullptr); };
}

}  // namespace tcdp
