#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace tcdp {

/// Axis-aligned box [lower, upper] in R^k.
struct HyperRectangle {
  std::vector<double> lower;
  std::vector<double> upper;

  static HyperRectangle unit_cube(std::size_t k);

  std::size_t dimension() const { return lower.size(); }

  /// Throws std::invalid_argument unless lower/upper agree in length and
  /// upper[j] > lower[j].
  void validate() const;

  bool contains(std::span<const double> x) const;

  bool operator==(const HyperRectangle&) const = default;
};

/// binomial(d + k, k): number of multi-indices with |alpha| <= d in k dims.
std::uint64_t basis_count(int degree, int dimension);

/// Multi-indices of total degree <= d in graded lexicographic order
/// (ascending total degree, then ascending lexicographic).
std::vector<std::vector<int>> graded_lex_indices(int degree, int dimension);

/// Tensor grid of m Chebyshev nodes per dimension. Flat node index is
/// row-major: the last dimension varies fastest.
class TensorNodeGrid {
 public:
  TensorNodeGrid(int nodes_per_dim, HyperRectangle domain);

  int nodes_per_dim() const { return m_; }
  std::size_t dimension() const { return domain_.dimension(); }
  std::size_t size() const { return size_; }
  const HyperRectangle& domain() const { return domain_; }

  /// z_i = -cos((2i-1)pi/(2m)), i = 1..m, ascending.
  std::span<const double> canonical_nodes() const { return z_; }

  /// Coordinate of node i along dimension j.
  double coordinate(std::size_t j, int i) const {
    return coords_[j * static_cast<std::size_t>(m_) + static_cast<std::size_t>(i)];
  }

  void point(std::size_t flat, std::span<double> out) const;
  std::vector<double> point(std::size_t flat) const;
  std::vector<int> multi_index(std::size_t flat) const;

 private:
  int m_;
  HyperRectangle domain_;
  std::size_t size_;
  std::vector<double> z_;
  std::vector<double> coords_;
};

TensorNodeGrid chebyshev_nodes(int m, const HyperRectangle& domain);

struct SurfaceEvaluation {
  double value;
  bool extrapolated;
};

/// Degree-d complete Chebyshev polynomial on a hyper-rectangle:
///   sum_{|alpha| <= d} b_alpha prod_j T_{alpha_j}(Z_j(x)).
/// Immutable once built; evaluation is thread-safe.
class ChebyshevSurface {
 public:
  /// `coefficients` are in graded lexicographic order.
  ChebyshevSurface(HyperRectangle domain, int degree, std::vector<double> coefficients);

  static ChebyshevSurface constant(HyperRectangle domain, int degree, double value);

  const HyperRectangle& domain() const { return domain_; }
  int degree() const { return degree_; }
  std::size_t dimension() const { return domain_.dimension(); }
  std::size_t size() const { return graded_.size(); }

  /// Coefficients in graded lexicographic order.
  std::span<const double> coefficients() const { return graded_; }

  double operator()(std::span<const double> x) const { return value(x); }
  double value(std::span<const double> x) const;
  SurfaceEvaluation evaluate(std::span<const double> x) const;

  /// Returns the value and writes d/dx into `gradient` (length k).
  double value_and_gradient(std::span<const double> x, std::span<double> gradient) const;

  /// Coefficientwise a*this + b*other; surfaces must share domain and degree.
  ChebyshevSurface combine(double a, const ChebyshevSurface& other, double b) const;

  bool operator==(const ChebyshevSurface& o) const {
    return domain_ == o.domain_ && degree_ == o.degree_ && graded_ == o.graded_;
  }

 private:
  template <bool WithGradient>
  double eval_impl(std::span<const double> x, double* gradient) const;

  HyperRectangle domain_;
  int degree_;
  std::vector<double> graded_;
  std::vector<double> nested_;  // nested order: alpha_1 outermost
};

/// Chebyshev regression b_alpha = 2^{k-n}/m^k sum_i v_i T_alpha(z_i) on a
/// tensor grid; `values` follow the grid's flat ordering.
ChebyshevSurface fit_complete(std::span<const double> values, int degree, const TensorNodeGrid& grid);

/// Chebyshev polynomials T_0..T_d at z by the three-term recurrence.
void chebyshev_basis(double z, int degree, std::span<double> out);

}  // namespace tcdp
