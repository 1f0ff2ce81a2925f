#include "tcdp/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace tcdp {

QpResult solve_qp_feasible_start(const Eigen::MatrixXd& B, const Eigen::VectorXd& g, const Eigen::MatrixXd& C,
                                 const Eigen::VectorXd& h, int max_iter) {
  const Eigen::Index n = B.rows();
  const Eigen::Index m = C.rows();
  QpResult res;
  res.p = Eigen::VectorXd::Zero(n);
  res.multipliers = Eigen::VectorXd::Zero(m);
  std::vector<Eigen::Index> work;
  std::vector<char> in_work(static_cast<std::size_t>(m), 0);
  double gscale = 1.0;
  for (Eigen::Index i = 0; i < n; ++i) gscale = std::max(gscale, std::abs(g(i)));

  Eigen::VectorXd p = Eigen::VectorXd::Zero(n);
  for (int it = 0; it < max_iter; ++it) {
    res.iterations = it + 1;
    const auto w = static_cast<Eigen::Index>(work.size());
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n + w, n + w);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + w);
    K.topLeftCorner(n, n) = B;
    for (Eigen::Index a = 0; a < w; ++a) {
      K.block(n + a, 0, 1, n) = C.row(work[static_cast<std::size_t>(a)]);
      K.block(0, n + a, n, 1) = C.row(work[static_cast<std::size_t>(a)]).transpose();
    }
    rhs.head(n) = -(B * p + g);
    Eigen::VectorXd sol = K.partialPivLu().solve(rhs);
    if (!sol.allFinite() || (K * sol - rhs).lpNorm<Eigen::Infinity>() > 1e-10 * (1.0 + rhs.lpNorm<Eigen::Infinity>())) {
      // Dependent working rows make K singular; take the minimum-norm solution.
      sol = K.completeOrthogonalDecomposition().solve(rhs);
      if (!sol.allFinite()) return res;
    }
    Eigen::VectorXd d = sol.head(n);
    const double dnorm = d.lpNorm<Eigen::Infinity>();
    if (dnorm <= 1e-15 * std::max(1.0, p.lpNorm<Eigen::Infinity>())) {
      // Stationary on the working set: check multiplier signs.
      Eigen::Index drop = -1;
      double most = -1e-13 * gscale;
      for (Eigen::Index a = 0; a < w; ++a) {
        if (sol(n + a) < most) {
          most = sol(n + a);
          drop = a;
        }
      }
      if (drop < 0) {
        res.p = p;
        for (Eigen::Index a = 0; a < w; ++a) {
          res.multipliers(work[static_cast<std::size_t>(a)]) = std::max(0.0, sol(n + a));
        }
        res.ok = true;
        return res;
      }
      in_work[static_cast<std::size_t>(work[static_cast<std::size_t>(drop)])] = 0;
      work.erase(work.begin() + drop);
      continue;
    }
    double alpha = 1.0;
    Eigen::Index block = -1;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (in_work[static_cast<std::size_t>(i)]) continue;
      const double cd = C.row(i).dot(d);
      if (cd <= 1e-14 * C.row(i).lpNorm<Eigen::Infinity>() * dnorm) continue;
      const double slack = std::max(0.0, h(i) - C.row(i).dot(p));
      const double a = slack / cd;
      if (a < alpha) {
        alpha = a;
        block = i;
      }
    }
    p += alpha * d;
    if (block >= 0) {
      work.push_back(block);
      in_work[static_cast<std::size_t>(block)] = 1;
    }
  }
  res.p = p;
  return res;
}

}  // namespace tcdp
