#pragma once

// Reference computations that share no code with the solvers under test.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace oracle {

struct Scenario1d {
  double R;
  double w;
};

// One risky asset, proportional cost tau on both sides, CRRA gamma,
// terminal-wealth utility. Value per unit wealth at pre-trade fraction x
// with `periods` remaining, maximizing over post-trade fractions on a grid
// of spacing `step` plus the no-trade point.
class BruteForceDp {
 public:
  BruteForceDp(std::vector<Scenario1d> sc, double Rf, double tau, double gamma, double step)
      : sc_(std::move(sc)), Rf_(Rf), tau_(tau), gamma_(gamma), step_(step) {}

  double value(double x, int periods) const {
    if (periods == 0) return 1.0 / (1.0 - gamma_);
    double best = -std::numeric_limits<double>::infinity();
    const int n = static_cast<int>(std::lround(1.0 / step_));
    auto consider = [&](double y) {
      const double cash = 1.0 - x - (y - x) - tau_ * std::abs(y - x);
      if (cash < 0.0) return;
      double v = 0.0;
      for (const auto& s : sc_) {
        const double W = Rf_ * cash + s.R * y;
        v += s.w * std::pow(W, 1.0 - gamma_) * value(s.R * y / W, periods - 1);
      }
      best = std::max(best, v);
    };
    for (int i = 0; i <= n; ++i) consider(i * step_);
    consider(x);
    return best;
  }

 private:
  std::vector<Scenario1d> sc_;
  double Rf_, tau_, gamma_, step_;
};

// Standard normal CDF via erfc.
inline double norm_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

inline double bs_put(double S, double K, double r, double sigma, double T) {
  const double d1 = (std::log(S / K) + (r + 0.5 * sigma * sigma) * T) / (sigma * std::sqrt(T));
  const double d2 = d1 - sigma * std::sqrt(T);
  return K * std::exp(-r * T) * norm_cdf(-d2) - S * norm_cdf(-d1);
}

}  // namespace oracle
