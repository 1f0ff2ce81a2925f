#include "tcdp/approx.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace tcdp {

HyperRectangle HyperRectangle::unit_cube(std::size_t k) {
  return HyperRectangle{std::vector<double>(k, 0.0), std::vector<double>(k, 1.0)};
}

void HyperRectangle::validate() const {
  if (lower.empty()) throw std::invalid_argument("domain has no dimensions");
  if (lower.size() != upper.size()) throw std::invalid_argument("domain bounds differ in length");
  for (std::size_t j = 0; j < lower.size(); ++j) {
    if (!(upper[j] > lower[j]) || !std::isfinite(lower[j]) || !std::isfinite(upper[j])) {
      throw std::invalid_argument("domain upper bound must exceed lower bound in dimension " +
                                  std::to_string(j));
    }
  }
}

bool HyperRectangle::contains(std::span<const double> x) const {
  for (std::size_t j = 0; j < lower.size(); ++j) {
    if (x[j] < lower[j] || x[j] > upper[j]) return false;
  }
  return true;
}

std::uint64_t basis_count(int degree, int dimension) {
  if (degree < 0 || dimension < 1) throw std::invalid_argument("basis_count needs d >= 0, k >= 1");
  // binomial(d + k, k) computed incrementally; each partial product is exact.
  std::uint64_t c = 1;
  for (int i = 1; i <= dimension; ++i) {
    c = c * static_cast<std::uint64_t>(degree + i) / static_cast<std::uint64_t>(i);
  }
  return c;
}

namespace {

void enumerate_nested(int level, int remaining, std::vector<int>& current,
                      std::vector<std::vector<int>>& out) {
  if (level == static_cast<int>(current.size())) {
    out.push_back(current);
    return;
  }
  for (int a = 0; a <= remaining; ++a) {
    current[level] = a;
    enumerate_nested(level + 1, remaining - a, current, out);
  }
  current[level] = 0;
}

// Permutations between graded-lex storage and the nested evaluation layout,
// plus each graded index's position in the full (d+1)^k tensor.
struct IndexLayout {
  std::vector<std::size_t> graded_to_nested;
  std::vector<std::size_t> graded_to_tensor;
  std::vector<int> zero_count;  // per graded index
};

std::shared_ptr<const IndexLayout> layout_for(int degree, int dimension) {
  static std::mutex mutex;
  static std::map<std::pair<int, int>, std::shared_ptr<const IndexLayout>> cache;
  std::lock_guard lock(mutex);
  auto key = std::make_pair(degree, dimension);
  if (auto it = cache.find(key); it != cache.end()) return it->second;

  auto graded = graded_lex_indices(degree, dimension);
  std::vector<std::vector<int>> nested;
  std::vector<int> cur(static_cast<std::size_t>(dimension), 0);
  enumerate_nested(0, degree, cur, nested);

  std::map<std::vector<int>, std::size_t> nested_pos;
  for (std::size_t i = 0; i < nested.size(); ++i) nested_pos.emplace(nested[i], i);

  auto layout = std::make_shared<IndexLayout>();
  layout->graded_to_nested.resize(graded.size());
  layout->graded_to_tensor.resize(graded.size());
  layout->zero_count.resize(graded.size());
  const std::size_t side = static_cast<std::size_t>(degree) + 1;
  for (std::size_t g = 0; g < graded.size(); ++g) {
    layout->graded_to_nested[g] = nested_pos.at(graded[g]);
    std::size_t flat = 0;
    int zeros = 0;
    for (int a : graded[g]) {
      flat = flat * side + static_cast<std::size_t>(a);
      if (a == 0) ++zeros;
    }
    layout->graded_to_tensor[g] = flat;
    layout->zero_count[g] = zeros;
  }
  cache.emplace(key, layout);
  return layout;
}

// T_0..T_d and their z-derivatives.
inline void basis_with_derivative(double z, int d, double* t, double* dt) {
  t[0] = 1.0;
  dt[0] = 0.0;
  if (d == 0) return;
  t[1] = z;
  dt[1] = 1.0;
  for (int n = 2; n <= d; ++n) {
    t[n] = 2.0 * z * t[n - 1] - t[n - 2];
    dt[n] = 2.0 * t[n - 1] + 2.0 * z * dt[n - 1] - dt[n - 2];
  }
}

constexpr std::size_t kStackBasis = 2048;

}  // namespace

std::vector<std::vector<int>> graded_lex_indices(int degree, int dimension) {
  if (degree < 0 || dimension < 1) throw std::invalid_argument("graded_lex_indices needs d >= 0, k >= 1");
  std::vector<std::vector<int>> all;
  std::vector<int> cur(static_cast<std::size_t>(dimension), 0);
  enumerate_nested(0, degree, cur, all);
  std::stable_sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
    int sa = 0, sb = 0;
    for (int v : a) sa += v;
    for (int v : b) sb += v;
    if (sa != sb) return sa < sb;
    return a < b;
  });
  return all;
}

void chebyshev_basis(double z, int degree, std::span<double> out) {
  out[0] = 1.0;
  if (degree == 0) return;
  out[1] = z;
  for (int n = 2; n <= degree; ++n) out[n] = 2.0 * z * out[n - 1] - out[n - 2];
}

// ---------------------------------------------------------------------------
// TensorNodeGrid

TensorNodeGrid::TensorNodeGrid(int nodes_per_dim, HyperRectangle domain)
    : m_(nodes_per_dim), domain_(std::move(domain)) {
  if (m_ < 1) throw std::invalid_argument("node count per dimension must be positive");
  domain_.validate();
  const std::size_t k = domain_.dimension();
  size_ = 1;
  for (std::size_t j = 0; j < k; ++j) size_ *= static_cast<std::size_t>(m_);
  z_.resize(static_cast<std::size_t>(m_));
  for (int i = 1; i <= m_; ++i) {
    z_[static_cast<std::size_t>(i - 1)] = -std::cos((2.0 * i - 1.0) * std::numbers::pi / (2.0 * m_));
  }
  // Exact symmetry of the canonical nodes about zero.
  for (int i = 0; i < m_ / 2; ++i) {
    const double a = 0.5 * (z_[static_cast<std::size_t>(m_ - 1 - i)] - z_[static_cast<std::size_t>(i)]);
    z_[static_cast<std::size_t>(i)] = -a;
    z_[static_cast<std::size_t>(m_ - 1 - i)] = a;
  }
  if (m_ % 2 == 1) z_[static_cast<std::size_t>(m_ / 2)] = 0.0;

  coords_.resize(k * static_cast<std::size_t>(m_));
  for (std::size_t j = 0; j < k; ++j) {
    const double lo = domain_.lower[j], hi = domain_.upper[j];
    for (int i = 0; i < m_; ++i) {
      coords_[j * static_cast<std::size_t>(m_) + static_cast<std::size_t>(i)] =
          (z_[static_cast<std::size_t>(i)] + 1.0) * (hi - lo) / 2.0 + lo;
    }
  }
}

void TensorNodeGrid::point(std::size_t flat, std::span<double> out) const {
  const std::size_t k = dimension();
  const auto m = static_cast<std::size_t>(m_);
  for (std::size_t j = k; j-- > 0;) {
    out[j] = coords_[j * m + flat % m];
    flat /= m;
  }
}

std::vector<double> TensorNodeGrid::point(std::size_t flat) const {
  std::vector<double> p(dimension());
  point(flat, p);
  return p;
}

std::vector<int> TensorNodeGrid::multi_index(std::size_t flat) const {
  const std::size_t k = dimension();
  const auto m = static_cast<std::size_t>(m_);
  std::vector<int> idx(k);
  for (std::size_t j = k; j-- > 0;) {
    idx[j] = static_cast<int>(flat % m);
    flat /= m;
  }
  return idx;
}

TensorNodeGrid chebyshev_nodes(int m, const HyperRectangle& domain) { return TensorNodeGrid(m, domain); }

// ---------------------------------------------------------------------------
// ChebyshevSurface

ChebyshevSurface::ChebyshevSurface(HyperRectangle domain, int degree, std::vector<double> coefficients)
    : domain_(std::move(domain)), degree_(degree), graded_(std::move(coefficients)) {
  domain_.validate();
  if (degree_ < 0) throw std::invalid_argument("degree must be nonnegative");
  const auto k = static_cast<int>(domain_.dimension());
  if (graded_.size() != basis_count(degree_, k)) {
    throw std::invalid_argument("coefficient count does not match binomial(d+k, k)");
  }
  auto layout = layout_for(degree_, k);
  nested_.resize(graded_.size());
  for (std::size_t g = 0; g < graded_.size(); ++g) nested_[layout->graded_to_nested[g]] = graded_[g];
}

ChebyshevSurface ChebyshevSurface::constant(HyperRectangle domain, int degree, double value) {
  const auto k = static_cast<int>(domain.dimension());
  std::vector<double> c(basis_count(degree, k), 0.0);
  c[0] = value;
  return ChebyshevSurface(std::move(domain), degree, std::move(c));
}

ChebyshevSurface ChebyshevSurface::combine(double a, const ChebyshevSurface& other, double b) const {
  if (!(domain_ == other.domain_) || degree_ != other.degree_) {
    throw std::invalid_argument("combine needs surfaces on the same domain and degree");
  }
  std::vector<double> c(graded_.size());
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = a * graded_[i] + b * other.graded_[i];
  return ChebyshevSurface(domain_, degree_, std::move(c));
}

namespace {

// Generic nested evaluation for k >= 4. Accumulates value and (optionally)
// partials with respect to z_level..z_{k-1}.
template <bool WithGradient>
double eval_rec(int level, int k, int remaining, const double*& c, const double* t, const double* dt,
                int stride, double* grad) {
  const double* tl = t + level * stride;
  if (level == k - 1) {
    double v = 0.0, g = 0.0;
    for (int a = 0; a <= remaining; ++a) {
      v += c[a] * tl[a];
      if constexpr (WithGradient) g += c[a] * dt[level * stride + a];
    }
    c += remaining + 1;
    if constexpr (WithGradient) grad[level] = g;
    return v;
  }
  double v = 0.0;
  std::array<double, 16> acc{};
  std::array<double, 16> sub{};
  for (int a = 0; a <= remaining; ++a) {
    const double inner = eval_rec<WithGradient>(level + 1, k, remaining - a, c, t, dt, stride, sub.data());
    v += tl[a] * inner;
    if constexpr (WithGradient) {
      acc[static_cast<std::size_t>(level)] += dt[level * stride + a] * inner;
      for (int j = level + 1; j < k; ++j) acc[static_cast<std::size_t>(j)] += tl[a] * sub[static_cast<std::size_t>(j)];
    }
  }
  if constexpr (WithGradient) {
    for (int j = level; j < k; ++j) grad[j] = acc[static_cast<std::size_t>(j)];
  }
  return v;
}

}  // namespace

template <bool WithGradient>
double ChebyshevSurface::eval_impl(std::span<const double> x, double* gradient) const {
  const int k = static_cast<int>(domain_.dimension());
  const int d = degree_;
  const int stride = d + 1;
  const std::size_t need = static_cast<std::size_t>(k * stride);
  std::array<double, kStackBasis> tbuf, dtbuf;
  std::vector<double> theap, dtheap;
  double* t = tbuf.data();
  double* dt = dtbuf.data();
  if (need > kStackBasis) {
    theap.resize(need);
    dtheap.resize(need);
    t = theap.data();
    dt = dtheap.data();
  }
  std::array<double, 16> scale{};
  for (int j = 0; j < k; ++j) {
    const double lo = domain_.lower[static_cast<std::size_t>(j)];
    const double hi = domain_.upper[static_cast<std::size_t>(j)];
    const double z = (2.0 * x[static_cast<std::size_t>(j)] - lo - hi) / (hi - lo);
    scale[static_cast<std::size_t>(j)] = 2.0 / (hi - lo);
    if constexpr (WithGradient) {
      basis_with_derivative(z, d, t + j * stride, dt + j * stride);
    } else {
      chebyshev_basis(z, d, std::span<double>(t + j * stride, static_cast<std::size_t>(stride)));
    }
  }
  const double* c = nested_.data();
  double value = 0.0;
  if (k == 1) {
    double g = 0.0;
    for (int a = 0; a <= d; ++a) {
      value += c[a] * t[a];
      if constexpr (WithGradient) g += c[a] * dt[a];
    }
    if constexpr (WithGradient) gradient[0] = g * scale[0];
    return value;
  }
  if (k == 2) {
    const double* t1 = t;
    const double* t2 = t + stride;
    const double* d1 = dt;
    const double* d2 = dt + stride;
    double g1 = 0.0, g2 = 0.0;
    for (int a = 0; a <= d; ++a) {
      const int len = d - a + 1;
      double inner = 0.0, dinner = 0.0;
      for (int b = 0; b < len; ++b) {
        inner += c[b] * t2[b];
        if constexpr (WithGradient) dinner += c[b] * d2[b];
      }
      c += len;
      value += t1[a] * inner;
      if constexpr (WithGradient) {
        g1 += d1[a] * inner;
        g2 += t1[a] * dinner;
      }
    }
    if constexpr (WithGradient) {
      gradient[0] = g1 * scale[0];
      gradient[1] = g2 * scale[1];
    }
    return value;
  }
  if (k == 3) {
    const double* t1 = t;
    const double* t2 = t + stride;
    const double* t3 = t + 2 * stride;
    const double* d1 = dt;
    const double* d2 = dt + stride;
    const double* d3 = dt + 2 * stride;
    double g1 = 0.0, g2 = 0.0, g3 = 0.0;
    for (int a = 0; a <= d; ++a) {
      double mid = 0.0, mid_d2 = 0.0, mid_d3 = 0.0;
      for (int b = 0; b <= d - a; ++b) {
        const int len = d - a - b + 1;
        double inner = 0.0, dinner = 0.0;
        for (int e = 0; e < len; ++e) {
          inner += c[e] * t3[e];
          if constexpr (WithGradient) dinner += c[e] * d3[e];
        }
        c += len;
        mid += t2[b] * inner;
        if constexpr (WithGradient) {
          mid_d2 += d2[b] * inner;
          mid_d3 += t2[b] * dinner;
        }
      }
      value += t1[a] * mid;
      if constexpr (WithGradient) {
        g1 += d1[a] * mid;
        g2 += t1[a] * mid_d2;
        g3 += t1[a] * mid_d3;
      }
    }
    if constexpr (WithGradient) {
      gradient[0] = g1 * scale[0];
      gradient[1] = g2 * scale[1];
      gradient[2] = g3 * scale[2];
    }
    return value;
  }
  if (k > 16) throw std::invalid_argument("surface dimension above 16 is not supported");
  std::array<double, 16> g{};
  value = eval_rec<WithGradient>(0, k, d, c, t, dt, stride, g.data());
  if constexpr (WithGradient) {
    for (int j = 0; j < k; ++j) gradient[j] = g[static_cast<std::size_t>(j)] * scale[static_cast<std::size_t>(j)];
  }
  return value;
}

double ChebyshevSurface::value(std::span<const double> x) const {
  if (x.size() != dimension()) throw std::invalid_argument("evaluation point has wrong dimension");
  return eval_impl<false>(x, nullptr);
}

SurfaceEvaluation ChebyshevSurface::evaluate(std::span<const double> x) const {
  return SurfaceEvaluation{value(x), !domain_.contains(x)};
}

double ChebyshevSurface::value_and_gradient(std::span<const double> x, std::span<double> gradient) const {
  if (x.size() != dimension() || gradient.size() < dimension()) {
    throw std::invalid_argument("evaluation point has wrong dimension");
  }
  return eval_impl<true>(x, gradient.data());
}

// ---------------------------------------------------------------------------
// Regression

ChebyshevSurface fit_complete(std::span<const double> values, int degree, const TensorNodeGrid& grid) {
  if (degree < 0) throw std::invalid_argument("degree must be nonnegative");
  if (values.size() != grid.size()) throw std::invalid_argument("value count does not match the node grid");
  const int m = grid.nodes_per_dim();
  if (m < degree + 1) throw std::invalid_argument("need at least degree+1 nodes per dimension");
  const std::size_t k = grid.dimension();
  const auto mm = static_cast<std::size_t>(m);
  const auto side = static_cast<std::size_t>(degree) + 1;

  // basis[a * m + i] = T_a(z_i)
  std::vector<double> basis(side * mm);
  {
    std::vector<double> col(side);
    const auto z = grid.canonical_nodes();
    for (std::size_t i = 0; i < mm; ++i) {
      chebyshev_basis(z[i], degree, col);
      for (std::size_t a = 0; a < side; ++a) basis[a * mm + i] = col[a];
    }
  }

  // Contract one axis at a time; axis j shrinks from m to d+1 entries.
  std::vector<double> cur(values.begin(), values.end());
  std::vector<std::size_t> shape(k, mm);
  for (std::size_t j = 0; j < k; ++j) {
    std::size_t outer = 1, inner = 1;
    for (std::size_t q = 0; q < j; ++q) outer *= shape[q];
    for (std::size_t q = j + 1; q < k; ++q) inner *= shape[q];
    std::vector<double> next(outer * side * inner, 0.0);
    for (std::size_t o = 0; o < outer; ++o) {
      const double* src = cur.data() + o * mm * inner;
      double* dst = next.data() + o * side * inner;
      for (std::size_t a = 0; a < side; ++a) {
        const double* brow = basis.data() + a * mm;
        double* drow = dst + a * inner;
        for (std::size_t i = 0; i < mm; ++i) {
          const double w = brow[i];
          const double* srow = src + i * inner;
          for (std::size_t q = 0; q < inner; ++q) drow[q] += w * srow[q];
        }
      }
    }
    cur.swap(next);
    shape[j] = side;
  }

  auto layout = layout_for(degree, static_cast<int>(k));
  double inv_nodes = 1.0;
  for (std::size_t j = 0; j < k; ++j) inv_nodes /= static_cast<double>(m);
  std::vector<double> coefficients(layout->graded_to_tensor.size());
  for (std::size_t g = 0; g < coefficients.size(); ++g) {
    const int nonzero = static_cast<int>(k) - layout->zero_count[g];
    coefficients[g] = std::ldexp(inv_nodes, nonzero) * cur[layout->graded_to_tensor[g]];
  }
  return ChebyshevSurface(grid.domain(), degree, std::move(coefficients));
}

}  // namespace tcdp
