#include "tcdp/subproblem.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace tcdp {

namespace {

constexpr std::size_t kMaxAssets = 16;

double utility(double c, double gamma) {
  return gamma == 1.0 ? std::log(c) : std::pow(c, 1.0 - gamma) / (1.0 - gamma);
}

double marginal_utility(double c, double gamma) { return gamma == 1.0 ? 1.0 / c : std::pow(c, -gamma); }

}  // namespace

double TradeSubproblem::evaluate(std::span<const double> v, std::span<double> grad) const {
  const std::size_t n = k();
  if (n > kMaxAssets) throw std::invalid_argument("too many traded assets");
  std::array<double, kMaxAssets> a{}, xn{}, gG{}, dA{};
  double cash = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double bp = v[i], sp = v[n + i];
    a[i] = x[i] + bp - sp;
    cash -= x[i] + bp - sp + tau[i] * (bp + sp);
  }
  const double c = consumption ? v[2 * n] : 0.0;
  cash -= c * dt;

  const double neg_inf = -std::numeric_limits<double>::infinity();
  double agg = 0.0, dB = 0.0;
  for (std::size_t i = 0; i < n; ++i) dA[i] = 0.0;
  const double one_minus_gamma = 1.0 - gamma;
  const double theta = aggregator == Aggregator::EpsteinZin ? (1.0 - psi) / (1.0 - gamma) : 1.0;

  // Per-scenario F and dF/da, dF/db are accumulated with the aggregator's
  // weight; EZ needs the power sum first, so it keeps a second pass scale.
  double ez_sum = 0.0;
  for (const auto& sc : scenarios) {
    double pi = Rf * cash;
    for (std::size_t i = 0; i < n; ++i) {
      xn[i] = sc.R[i] * a[i];
      pi += xn[i];
    }
    if (!(pi > 0.0)) {
      std::fill(grad.begin(), grad.end(), 0.0);
      return neg_inf;
    }
    const double inv = 1.0 / pi;
    for (std::size_t i = 0; i < n; ++i) xn[i] *= inv;
    const double G = sc.next->value_and_gradient(std::span<const double>(xn.data(), n), std::span<double>(gG.data(), n));
    double q = 0.0;
    for (std::size_t i = 0; i < n; ++i) q += gG[i] * xn[i];

    double F, fa_scale, fb;
    // dF/da_i = fa_scale * R_i * (base + gG_i), dF/db = fb
    double base;
    if (aggregator == Aggregator::Log) {
      F = log_coef * std::log(pi) + G;
      fa_scale = inv;
      base = log_coef - q;
      fb = Rf * inv * (log_coef - q);
    } else {
      const double pg = std::pow(pi, -gamma);
      F = pg * pi * G;
      fa_scale = pg;
      base = one_minus_gamma * G - q;
      fb = Rf * pg * (one_minus_gamma * G - q);
    }
    double wgt = sc.weight;
    if (aggregator == Aggregator::EpsteinZin) {
      const double u = one_minus_gamma * F;
      if (!(u > 0.0)) throw std::domain_error("Epstein-Zin recursion left the positive domain");
      ez_sum += sc.weight * std::pow(u, theta);
      wgt = sc.weight * std::pow(u, theta - 1.0);
    } else {
      agg += sc.weight * F;
    }
    for (std::size_t i = 0; i < n; ++i) dA[i] += wgt * fa_scale * sc.R[i] * (base + gG[i]);
    dB += wgt * fb;
  }
  if (aggregator == Aggregator::EpsteinZin) {
    const double m = std::pow(ez_sum, 1.0 / theta);
    agg = m / one_minus_gamma;
    const double scale = m / ez_sum;  // M^{1/theta - 1}
    for (std::size_t i = 0; i < n; ++i) dA[i] *= scale;
    dB *= scale;
  }

  double value = 0.0, disc = 1.0;
  if (consumption) {
    if (!(c > 0.0)) {
      std::fill(grad.begin(), grad.end(), 0.0);
      return neg_inf;
    }
    value = utility(c, gamma) * dt;
    disc = beta;
  }
  value += disc * agg;
  for (std::size_t i = 0; i < n; ++i) {
    grad[i] = disc * (dA[i] - (1.0 + tau[i]) * dB);
    grad[n + i] = disc * (-dA[i] + (1.0 - tau[i]) * dB);
  }
  if (consumption) grad[2 * n] = marginal_utility(c, gamma) * dt - disc * dt * dB;
  return value;
}

SmoothProgram TradeSubproblem::program() const {
  const std::size_t n = k();
  SmoothProgram prog;
  prog.dimension = dimension();
  const auto dim = static_cast<std::size_t>(prog.dimension);
  prog.lower.assign(dim, 0.0);
  prog.upper.assign(dim, std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < n; ++i) {
    const bool fixed = !trading_enabled || (!frozen.empty() && frozen[i]);
    if (!fixed) continue;
    prog.upper[i] = 0.0;
    const double s = trading_enabled ? x[i] : 0.0;
    prog.lower[n + i] = prog.upper[n + i] = s;
  }
  if (consumption) prog.lower[2 * n] = c_min;
  prog.A = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n + 1), static_cast<Eigen::Index>(dim));
  prog.b.resize(static_cast<Eigen::Index>(n + 1));
  double sx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    prog.A(r, r) = -1.0;
    prog.A(r, static_cast<Eigen::Index>(n + i)) = 1.0;
    prog.b(r) = x[i];
    sx += x[i];
  }
  const auto last = static_cast<Eigen::Index>(n);
  for (std::size_t i = 0; i < n; ++i) {
    prog.A(last, static_cast<Eigen::Index>(i)) = 1.0 + tau[i];
    prog.A(last, static_cast<Eigen::Index>(n + i)) = -(1.0 - tau[i]);
  }
  if (consumption) prog.A(last, static_cast<Eigen::Index>(2 * n)) = dt;
  prog.b(last) = 1.0 - sx;
  auto self = this;
  prog.objective = [self](std::span<const double> v, std::span<double> g) { return self->evaluate(v, g); };
  return prog;
}

std::vector<double> TradeSubproblem::zero_trade_start(double c) const {
  const std::size_t n = k();
  std::vector<double> v(static_cast<std::size_t>(dimension()), 0.0);
  double cash = 1.0;
  double sellable = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    cash -= x[i];
    const bool fixed = !trading_enabled || (!frozen.empty() && frozen[i]);
    if (fixed) {
      const double s = trading_enabled ? x[i] : 0.0;
      v[n + i] = s;
      cash += (1.0 - tau[i]) * s;
    } else {
      sellable += (1.0 - tau[i]) * x[i];
    }
  }
  if (consumption) {
    c = std::max(c, c_min);
    v[2 * n] = c;
    cash -= c * dt;
  }
  if (cash < 0.0 && sellable > 0.0 && trading_enabled) {
    const double s = std::min(1.0, -cash / sellable);
    for (std::size_t i = 0; i < n; ++i) {
      const bool fixed = !frozen.empty() && frozen[i];
      if (!fixed) v[n + i] = s * x[i];
    }
    cash += s * sellable;
  }
  if (consumption && cash < 0.0) {
    // Shrink consumption to what the remaining cash allows.
    const double cmax = std::max(c_min, (cash + v[2 * n] * dt) / dt);
    v[2 * n] = std::max(c_min, std::min(v[2 * n], cmax));
  }
  return v;
}

std::vector<double> TradeSubproblem::start_toward(std::span<const double> target, double c) const {
  const std::size_t n = k();
  const SmoothProgram prog = program();
  std::vector<double> z = zero_trade_start(c);
  std::vector<double> t = z;
  for (std::size_t i = 0; i < n; ++i) {
    if (prog.lower[i] == prog.upper[i]) continue;
    const double d = std::max(0.0, target[i]) - x[i];
    t[i] = std::max(0.0, d);
    t[n + i] = std::max(0.0, -d);
  }
  if (consumption) t[2 * n] = std::max(c_min, c);
  // Largest lambda in [0,1] with z + lambda (t - z) feasible.
  double lambda = 1.0;
  for (Eigen::Index r = 0; r < prog.A.rows(); ++r) {
    double az = 0.0, ad = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
      az += prog.A(r, static_cast<Eigen::Index>(i)) * z[i];
      ad += prog.A(r, static_cast<Eigen::Index>(i)) * (t[i] - z[i]);
    }
    if (ad > 0.0) lambda = std::min(lambda, std::max(0.0, prog.b(r) - az) / ad);
  }
  std::vector<double> v(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    v[i] = z[i] + lambda * (t[i] - z[i]);
    v[i] = std::clamp(v[i], prog.lower[i], prog.upper[i]);
  }
  return v;
}

Decision TradeSubproblem::to_decision(const SolveReport& rep) const {
  const std::size_t n = k();
  Decision d;
  d.buy.assign(rep.v.begin(), rep.v.begin() + static_cast<std::ptrdiff_t>(n));
  d.sell.assign(rep.v.begin() + static_cast<std::ptrdiff_t>(n), rep.v.begin() + static_cast<std::ptrdiff_t>(2 * n));
  if (consumption) d.consumption = rep.v[2 * n];
  d.post.resize(n);
  for (std::size_t i = 0; i < n; ++i) d.post[i] = x[i] + d.buy[i] - d.sell[i];
  d.value = rep.value;
  d.status = rep.status;
  d.iterations = rep.iterations;
  return d;
}

double Decision::trade_size() const {
  double m = 0.0;
  for (double b : buy) m = std::max(m, std::abs(b));
  for (double s : sell) m = std::max(m, std::abs(s));
  return m;
}

double Decision::total_trade() const {
  double m = 0.0;
  for (double b : buy) m += std::abs(b);
  for (double s : sell) m += std::abs(s);
  return m;
}

namespace {

double l1_trade(const std::vector<double>& v, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < 2 * n; ++i) s += std::abs(v[i]);
  return s;
}

int status_rank(SolveStatus s) {
  switch (s) {
    case SolveStatus::Converged: return 0;
    case SolveStatus::Stalled: return 1;
    case SolveStatus::MaxIter: return 2;
    case SolveStatus::Infeasible: return 3;
  }
  return 4;
}

}  // namespace

Decision solve_trade(const TradeSubproblem& sp, const StartHints& hints, const NlpOptions& opt) {
  const std::size_t n = sp.k();
  const SmoothProgram prog = sp.program();
  std::vector<std::vector<double>> starts;
  auto add = [&](std::vector<double> s) {
    for (const auto& e : starts) {
      if (e == s) return;
    }
    starts.push_back(std::move(s));
  };
  if (hints.warm != nullptr && hints.warm->post.size() == n) {
    const double c = hints.warm->has_consumption() ? hints.warm->consumption : hints.consumption;
    add(sp.start_toward(hints.warm->post, c));
  }
  if (hints.multistart || starts.empty()) {
    add(sp.zero_trade_start(hints.consumption));
    if (!hints.target.empty()) add(sp.start_toward(hints.target, hints.consumption));
  }

  SolveReport best;
  bool have = false;
  for (const auto& s : starts) {
    SolveReport rep = maximize(prog, s, opt);
    if (!std::isfinite(rep.value)) continue;
    if (!have) {
      best = std::move(rep);
      have = true;
      continue;
    }
    const int rb = status_rank(best.status), rr = status_rank(rep.status);
    const double tie = 1e-12 * std::max(1.0, std::abs(best.value));
    bool better;
    if (rr != rb && (rr >= 2 || rb >= 2)) {
      better = rr < rb;
    } else if (rep.value > best.value + tie) {
      better = true;
    } else if (rep.value >= best.value - tie) {
      better = l1_trade(rep.v, n) < l1_trade(best.v, n);
    } else {
      better = false;
    }
    if (better) best = std::move(rep);
  }
  if (!have) {
    SolveReport fail;
    fail.v = starts.front();
    fail.status = SolveStatus::Infeasible;
    fail.value = -std::numeric_limits<double>::infinity();
    return sp.to_decision(fail);
  }

  // Net buy/sell pairs on the same asset.
  std::vector<double> netted = best.v;
  bool changed = false;
  for (std::size_t i = 0; i < n; ++i) {
    if (prog.lower[i] == prog.upper[i]) continue;
    const double m = std::min(netted[i], netted[n + i]);
    if (m > 0.0) {
      netted[i] -= m;
      netted[n + i] -= m;
      changed = true;
    }
  }
  if (changed && constraint_violation(prog, netted) <= 1e-9) {
    std::vector<double> g(netted.size());
    const double v = sp.evaluate(netted, g);
    if (v >= best.value - 1e-12) {
      best.v = std::move(netted);
      best.value = v;
    }
  }
  return sp.to_decision(best);
}

}  // namespace tcdp
