#include "tcdp/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <random>
#include <stdexcept>

namespace tcdp {

double certainty_equivalent(double value, double gamma) {
  if (!(gamma > 0.0)) throw std::invalid_argument("gamma must be positive");
  if (gamma == 1.0) return std::exp(value);
  const double u = (1.0 - gamma) * value;
  if (!(u > 0.0)) throw std::domain_error("value sign inconsistent with gamma");
  return std::pow(u, 1.0 / (1.0 - gamma));
}

std::vector<std::vector<double>> uniform_probes(const HyperRectangle& domain, std::size_t count, std::uint64_t seed) {
  domain.validate();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<std::vector<double>> pts(count, std::vector<double>(domain.dimension()));
  for (auto& p : pts) {
    for (std::size_t j = 0; j < p.size(); ++j) p[j] = domain.lower[j] + unit(rng) * (domain.upper[j] - domain.lower[j]);
  }
  return pts;
}

std::vector<std::vector<double>> budget_probes(std::size_t k, std::size_t count, std::uint64_t seed) {
  if (k == 0) throw std::invalid_argument("dimension must be positive");
  std::mt19937_64 rng(seed);
  std::exponential_distribution<double> spacing(1.0);
  std::vector<double> e(k + 1);
  std::vector<std::vector<double>> pts(count, std::vector<double>(k));
  for (auto& p : pts) {
    double sum = 0.0;
    for (auto& v : e) sum += (v = spacing(rng));
    for (std::size_t j = 0; j < k; ++j) p[j] = e[j] / sum;
  }
  return pts;
}

namespace {

std::vector<double> controls(const Decision& d) {
  std::vector<double> c = d.buy;
  c.insert(c.end(), d.sell.begin(), d.sell.end());
  if (d.has_consumption()) c.push_back(d.consumption);
  return c;
}

}  // namespace

ErrorReport policy_approx_error(const std::vector<Decision>& nodes, const TensorNodeGrid& grid, int degree,
                                const PointSolver& solver, std::size_t probes, std::uint64_t seed, bool parallel,
                                ProbeRegion region) {
  if (nodes.size() != grid.size()) throw std::invalid_argument("node decisions do not match the grid");
  if (probes < 100) throw std::invalid_argument("policy error needs at least 100 probes");
  const std::size_t nc = controls(nodes.front()).size();
  std::vector<ChebyshevSurface> fits;
  std::vector<double> v(grid.size());
  for (std::size_t c = 0; c < nc; ++c) {
    for (std::size_t i = 0; i < grid.size(); ++i) v[i] = controls(nodes[i])[c];
    fits.push_back(fit_complete(v, degree, grid));
  }
  const auto& dom = grid.domain();
  if (region == ProbeRegion::Budget) {
    for (std::size_t j = 0; j < dom.dimension(); ++j) {
      if (dom.lower[j] > 0.0 || dom.upper[j] < 1.0) throw std::invalid_argument("domain does not cover the budget simplex");
    }
  }
  const auto pts = region == ProbeRegion::Budget ? budget_probes(dom.dimension(), probes, seed)
                                                 : uniform_probes(dom, probes, seed);
  // Per probe: sum and max of |error| over controls; sum < 0 marks a failure.
  std::vector<double> err_sum(probes, -1.0), err_max(probes, 0.0);
  std::exception_ptr ex;
#pragma omp parallel for schedule(dynamic, 4) if (parallel)
  for (long long i = 0; i < static_cast<long long>(probes); ++i) {
    try {
      const auto& p = pts[static_cast<std::size_t>(i)];
      const Decision d = solver(p);
      if (d.status == SolveStatus::Infeasible || !std::isfinite(d.value)) continue;
      const auto c = controls(d);
      double sum = 0.0, mx = 0.0;
      for (std::size_t j = 0; j < nc; ++j) {
        const double e = std::abs(fits[j].value(p) - c[j]);
        sum += e;
        mx = std::max(mx, e);
      }
      err_sum[static_cast<std::size_t>(i)] = sum;
      err_max[static_cast<std::size_t>(i)] = mx;
    } catch (...) {
#pragma omp critical
      if (!ex) ex = std::current_exception();
    }
  }
  if (ex) std::rethrow_exception(ex);
  ErrorReport rep;
  rep.degree = degree;
  rep.seed = seed;
  double sum = 0.0;
  for (std::size_t i = 0; i < probes; ++i) {
    if (err_sum[i] < 0.0) {
      ++rep.failures;
      continue;
    }
    ++rep.samples;
    sum += err_sum[i];
    rep.linf = std::max(rep.linf, err_max[i]);
  }
  if (rep.failures * 100 > probes) throw std::runtime_error("more than 1% of policy probes failed");
  rep.l1 = sum / static_cast<double>(rep.samples * nc);
  return rep;
}

DistanceReport surface_distance(const ChebyshevSurface& a, const ChebyshevSurface& b, std::size_t probes,
                                std::uint64_t seed) {
  if (!(a.domain() == b.domain())) throw std::invalid_argument("surfaces have different domains");
  if (probes == 0) throw std::invalid_argument("probe count must be positive");
  DistanceReport r;
  r.probes = probes;
  r.seed = seed;
  double sum = 0.0;
  for (const auto& p : uniform_probes(a.domain(), probes, seed)) {
    const double d = std::abs(a.value(p) - b.value(p));
    sum += d;
    r.linf = std::max(r.linf, d);
  }
  r.l1 = sum / static_cast<double>(probes);
  return r;
}

DistanceReport surface_distance(const ValueSurface& a, const ValueSurface& b, std::size_t probes,
                                std::uint64_t seed) {
  if (a.states.size() != b.states.size() || a.states.empty()) throw std::invalid_argument("state counts differ");
  DistanceReport r;
  r.probes = probes;
  r.seed = seed;
  for (std::size_t s = 0; s < a.states.size(); ++s) {
    const auto d = surface_distance(a.states[s], b.states[s], probes, seed);
    r.l1 += d.l1;
    r.linf = std::max(r.linf, d.linf);
  }
  r.l1 /= static_cast<double>(a.states.size());
  return r;
}

}  // namespace tcdp
