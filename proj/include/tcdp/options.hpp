#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "tcdp/approx.hpp"
#include "tcdp/dp.hpp"
#include "tcdp/nlp.hpp"
#include "tcdp/policy.hpp"

namespace tcdp {

enum class OptionKind { Put, Call, Butterfly };

std::string to_string(OptionKind k);
/// Accepts "put", "call", "butterfly"; throws std::invalid_argument otherwise.
OptionKind parse_option_kind(const std::string& s);

/// At-the-money option issued with strike K = S; prices are per unit strike.
struct OptionSpec {
  OptionKind kind = OptionKind::Put;
  double expiration = 0.5;
  double tau = 0.001;
};

/// Payoff per unit strike at A = S/K.
double option_payoff(OptionKind kind, double A);

/// Recombining lattice over one option life. Layer t (trading time t*dt)
/// holds nodes j = 0..t*n with A = u^(2j - t*n). `lo`/`hi` bound the nodes
/// whose physical probability is at least the pruning threshold; the DP
/// only visits those.
struct OptionLattice {
  double h = 0.0;
  int n = 0;        // sub-periods per trading period
  int periods = 0;  // trading periods to expiration
  double u = 1.0, d = 1.0, p = 0.5, q = 0.5;
  std::vector<std::vector<double>> A;
  std::vector<std::vector<double>> price;  // filled by price_option
  std::vector<int> lo, hi;

  std::size_t layer_size(int t) const { return A[static_cast<std::size_t>(t)].size(); }
  int retained(int t) const { return hi[static_cast<std::size_t>(t)] - lo[static_cast<std::size_t>(t)] + 1; }
};

/// Throws std::invalid_argument unless dt/h and expiration/dt are integers,
/// std::domain_error when p leaves (0,1).
OptionLattice build_lattice(double mu, double sigma, double dt, double h, double expiration, double prune = 1e-12);

/// Backward risk-neutral recursion at sub-period resolution from the exact
/// payoff; returns a copy with `price` and `q` filled.
OptionLattice price_option(const OptionLattice& lattice, OptionKind kind, double r);

/// Rows "t,A,price" for every priced lattice node.
void write_price_csv(std::ostream& os, const OptionLattice& lattice, double dt);

double black_scholes_put(double S, double K, double r, double sigma, double T);
double black_scholes_call(double S, double K, double r, double sigma, double T);

enum class Preference { CRRA, EpsteinZin };

/// One risky asset, one option on it, and cash. State (x, y) on [0,1]^2 per
/// lattice value A. `gamma` is the CRRA coefficient; under Epstein-Zin it is
/// 1/IES and `psi` is risk aversion.
struct OptionPortfolioModel {
  double r = 0.01;
  double mu = 0.07;
  double sigma = 0.2;
  double tau_stock = 0.001;
  OptionSpec option;
  double gamma = 3.0;
  double psi = 3.0;
  double rho = 0.015;
  bool consumption = false;
  Preference preference = Preference::CRRA;
  int rounds = 1;  // issue rounds; horizon = rounds * expiration
  double dt = 1.0 / 52.0;
  double h = 1.0 / 520.0;
  int degree = 40;
  int nodes_per_dim = 0;  // 0: degree + 1
  double prune = 1e-12;
  bool option_enabled = true;
  NlpOptions nlp;
  bool multistart = true;
  double consumption_guess = 0.02;

  int periods_per_round() const;
  int periods() const { return rounds * periods_per_round(); }
  double horizon() const { return rounds * option.expiration; }
  double beta() const;
  int nodes() const { return nodes_per_dim > 0 ? nodes_per_dim : degree + 1; }
  double risk_aversion() const { return preference == Preference::EpsteinZin ? psi : gamma; }
  /// Frictionless fractions (stock, option) used as a start hint: ((mu-r)/(RA sigma^2), 0).
  std::vector<double> merton() const;
  void validate() const;
};

/// g_T on [0,1]^2: 1/(1-gamma) without consumption, otherwise
/// (r(1 - tau_stock x))^{1-gamma} dt / ((1-beta)(1-gamma)).
ChebyshevSurface option_terminal_surface(const OptionPortfolioModel& model);

/// Value for any incoming (x, y, A) at an issue time: g_{t+}(x, 0), i.e.
/// the expired option's payoff already sits in wealth and the new
/// at-the-money option starts at y = 0. Exact coefficient restriction.
ChebyshevSurface reissue_surface(const ChebyshevSurface& g_plus);

/// One period at local lattice layer t. `next` holds one surface per
/// retained node of layer t+1, or a single surface that applies to every
/// A (terminal or reissue values).
std::pair<ValueSurface, StagePolicy> bellman_step_option(const OptionPortfolioModel& model,
                                                         const OptionLattice& lattice, int t,
                                                         const ValueSurface& next, const RunOptions& opt = {});

struct OptionSolution {
  OptionLattice lattice;               // one option life, priced
  std::vector<ValueSurface> surfaces;  // global t = 0..N; issue times hold g_{t+} at A = 1
  std::vector<StagePolicy> policies;   // t = 0..N-1

  int local(int t) const { return t % lattice.periods; }
  /// Retained lattice index range of the surfaces at global period t < N.
  int first_index(int t) const { return lattice.lo[static_cast<std::size_t>(local(t))]; }
};

/// Default policy retention keeps t = 0 only.
OptionSolution solve_option_horizon(const OptionPortfolioModel& model, const RunOptions& opt = {});

/// Per-point solver at global period t and lattice node j (A = 1 at t = 0 is j = 0).
PointSolver make_option_point_solver(const OptionPortfolioModel& model, const OptionSolution& sol, int t, int j);

}  // namespace tcdp
