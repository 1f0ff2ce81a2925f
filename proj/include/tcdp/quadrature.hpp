#pragma once

#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace tcdp {

/// Gauss-Hermite rule for the weight e^{-x^2}.
struct GaussHermiteRule {
  int order = 0;
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// 1 <= m <= 64. Golub-Welsch start, Newton polish on the orthonormal
/// recurrence, nodes symmetrized exactly.
GaussHermiteRule gauss_hermite_rule(int m);

/// Lower-triangular L with L L^T = sigma. Pivots below 1e-12 (relative to
/// the largest diagonal) are treated as zero so rank-deficient PSD input is
/// accepted; a clearly negative pivot throws std::domain_error.
Eigen::MatrixXd psd_cholesky(const Eigen::MatrixXd& sigma);

/// pi^{-k/2} sum w_{i1}..w_{ik} f(sqrt(2) L x_(i) + mean).
double expect_mvn(const std::function<double(std::span<const double>)>& f, std::span<const double> mean,
                  const Eigen::MatrixXd& covariance, int m);

}  // namespace tcdp
