#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "tcdp/approx.hpp"
#include "tcdp/policy.hpp"

namespace tcdp {

/// Wealth-equivalent of a CRRA-separated value per unit wealth:
/// ((1-gamma) v)^{1/(1-gamma)}, or exp(v) for log utility (gamma == 1).
/// Throws std::domain_error when the sign of v does not fit gamma.
double certainty_equivalent(double value, double gamma);

struct ErrorReport {
  double l1 = 0.0;    // mean |error| over every control at every probe
  double linf = 0.0;  // max of the same
  std::size_t samples = 0;
  std::size_t failures = 0;
  int degree = 0;
  std::uint64_t seed = 0;
};

/// Where policy-error probes are drawn: the budget simplex
/// {x >= 0, sum x <= 1} (the reachable states) or the whole grid domain.
enum class ProbeRegion { Budget, Box };

/// Fits every control recorded at the grid nodes (buy, sell, and
/// consumption when present) to a degree-`degree` complete Chebyshev
/// polynomial, re-solves at `probes` uniform points of `region` and
/// compares. Failed probes are skipped; more than 1% is an error.
ErrorReport policy_approx_error(const std::vector<Decision>& nodes, const TensorNodeGrid& grid, int degree,
                                const PointSolver& solver, std::size_t probes = 1000, std::uint64_t seed = 1,
                                bool parallel = true, ProbeRegion region = ProbeRegion::Budget);

struct DistanceReport {
  double l1 = 0.0;
  double linf = 0.0;
  std::size_t probes = 0;
  std::uint64_t seed = 0;
};

/// Monte-Carlo L1 (mean |a-b|) and Linf over uniform points of the shared domain.
DistanceReport surface_distance(const ChebyshevSurface& a, const ChebyshevSurface& b, std::size_t probes = 1000,
                                std::uint64_t seed = 1);

/// Same over every discrete state: mean of the per-state means, max of maxima.
DistanceReport surface_distance(const ValueSurface& a, const ValueSurface& b, std::size_t probes = 1000,
                                std::uint64_t seed = 1);

/// `count` uniform points of `domain` from std::mt19937_64(seed).
std::vector<std::vector<double>> uniform_probes(const HyperRectangle& domain, std::size_t count, std::uint64_t seed);

/// `count` uniform points of {x >= 0, sum x <= 1} in `k` dimensions
/// (normalized exponential spacings, std::mt19937_64(seed)).
std::vector<std::vector<double>> budget_probes(std::size_t k, std::size_t count, std::uint64_t seed);

}  // namespace tcdp
