#include "tcdp/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace tcdp {

namespace {

// Orthonormal Hermite values h_0..h_m at x; returns h_m, writes h_{m-1}.
double orthonormal_hermite(int m, double x, double& prev, double& sum_sq) {
  double h0 = std::pow(std::numbers::pi, -0.25);
  sum_sq = h0 * h0;
  if (m == 0) {
    prev = 0.0;
    return h0;
  }
  double h1 = std::sqrt(2.0) * x * h0;
  double hm2 = h0, hm1 = h1;
  if (m > 1) sum_sq += h1 * h1;
  for (int j = 2; j <= m; ++j) {
    const double hj = std::sqrt(2.0 / j) * x * hm1 - std::sqrt((j - 1.0) / j) * hm2;
    hm2 = hm1;
    hm1 = hj;
    if (j < m) sum_sq += hj * hj;
  }
  prev = hm2;
  return hm1;
}

}  // namespace

GaussHermiteRule gauss_hermite_rule(int m) {
  if (m < 1 || m > 64) throw std::invalid_argument("Gauss-Hermite order must be in [1, 64]");
  GaussHermiteRule rule;
  rule.order = m;
  if (m == 1) {
    rule.nodes = {0.0};
    rule.weights = {std::sqrt(std::numbers::pi)};
    return rule;
  }
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(m, m);
  for (int i = 1; i < m; ++i) {
    J(i, i - 1) = J(i - 1, i) = std::sqrt(i / 2.0);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  std::vector<double> x(es.eigenvalues().data(), es.eigenvalues().data() + m);
  std::sort(x.begin(), x.end());

  std::vector<double> w(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    double xi = x[static_cast<std::size_t>(i)];
    double prev = 0.0, sum_sq = 0.0;
    for (int it = 0; it < 8; ++it) {
      const double hm = orthonormal_hermite(m, xi, prev, sum_sq);
      // h_m' = sqrt(2m) h_{m-1}
      const double step = hm / (std::sqrt(2.0 * m) * prev);
      xi -= step;
      if (std::abs(step) < 1e-16 * std::max(1.0, std::abs(xi))) break;
    }
    orthonormal_hermite(m, xi, prev, sum_sq);
    x[static_cast<std::size_t>(i)] = xi;
    w[static_cast<std::size_t>(i)] = 1.0 / sum_sq;
  }
  for (int i = 0; i < m / 2; ++i) {
    const auto lo = static_cast<std::size_t>(i), hi = static_cast<std::size_t>(m - 1 - i);
    const double a = 0.5 * (x[hi] - x[lo]);
    const double b = 0.5 * (w[hi] + w[lo]);
    x[lo] = -a;
    x[hi] = a;
    w[lo] = w[hi] = b;
  }
  if (m % 2 == 1) x[static_cast<std::size_t>(m / 2)] = 0.0;
  rule.nodes = std::move(x);
  rule.weights = std::move(w);
  return rule;
}

Eigen::MatrixXd psd_cholesky(const Eigen::MatrixXd& sigma) {
  const auto k = sigma.rows();
  if (k != sigma.cols()) throw std::invalid_argument("covariance must be square");
  if (!sigma.isApprox(sigma.transpose(), 1e-12)) throw std::invalid_argument("covariance must be symmetric");
  double scale = 0.0;
  for (Eigen::Index i = 0; i < k; ++i) scale = std::max(scale, std::abs(sigma(i, i)));
  const double tol = 1e-12 * std::max(scale, 1e-300);
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(k, k);
  for (Eigen::Index j = 0; j < k; ++j) {
    double d = sigma(j, j);
    for (Eigen::Index q = 0; q < j; ++q) d -= L(j, q) * L(j, q);
    if (d < -tol) throw std::domain_error("covariance is not positive semidefinite");
    if (d <= tol) {
      // Zero pivot: the column must vanish for the matrix to be PSD.
      for (Eigen::Index i = j + 1; i < k; ++i) {
        double s = sigma(i, j);
        for (Eigen::Index q = 0; q < j; ++q) s -= L(i, q) * L(j, q);
        if (std::abs(s) > 1e-8 * std::max(scale, 1e-300)) {
          throw std::domain_error("covariance is not positive semidefinite");
        }
      }
      continue;
    }
    const double ljj = std::sqrt(d);
    L(j, j) = ljj;
    for (Eigen::Index i = j + 1; i < k; ++i) {
      double s = sigma(i, j);
      for (Eigen::Index q = 0; q < j; ++q) s -= L(i, q) * L(j, q);
      L(i, j) = s / ljj;
    }
  }
  return L;
}

double expect_mvn(const std::function<double(std::span<const double>)>& f, std::span<const double> mean,
                  const Eigen::MatrixXd& covariance, int m) {
  const auto k = static_cast<std::size_t>(covariance.rows());
  if (mean.size() != k) throw std::invalid_argument("mean and covariance dimensions differ");
  const Eigen::MatrixXd L = psd_cholesky(covariance);
  const auto rule = gauss_hermite_rule(m);
  std::vector<int> idx(k, 0);
  std::vector<double> point(k);
  const double norm = std::pow(std::numbers::pi, -0.5 * static_cast<double>(k));
  double total = 0.0;
  while (true) {
    double w = norm;
    for (std::size_t a = 0; a < k; ++a) w *= rule.weights[static_cast<std::size_t>(idx[a])];
    for (std::size_t a = 0; a < k; ++a) {
      double s = 0.0;
      for (std::size_t b = 0; b <= a; ++b) {
        s += L(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) *
             rule.nodes[static_cast<std::size_t>(idx[b])];
      }
      point[a] = std::sqrt(2.0) * s + mean[a];
    }
    total += w * f(point);
    std::size_t a = k;
    while (a > 0) {
      --a;
      if (++idx[a] < m) break;
      idx[a] = 0;
      if (a == 0) return total;
    }
    if (k == 0) return total;
  }
}

}  // namespace tcdp
