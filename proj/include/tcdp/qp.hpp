#pragma once

#include <Eigen/Dense>

namespace tcdp {

struct QpResult {
  Eigen::VectorXd p;
  Eigen::VectorXd multipliers;  // one per row of C, zero when inactive
  bool ok = false;
  int iterations = 0;
};

/// min 1/2 p'Bp + g'p  s.t.  C p <= h, with h >= 0 so that p = 0 is
/// feasible. B must be symmetric positive definite. Primal active-set
/// method started from p = 0 with an empty working set.
QpResult solve_qp_feasible_start(const Eigen::MatrixXd& B, const Eigen::VectorXd& g, const Eigen::MatrixXd& C,
                                 const Eigen::VectorXd& h, int max_iter = 200);

}  // namespace tcdp
