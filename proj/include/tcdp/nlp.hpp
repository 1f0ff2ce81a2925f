#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace tcdp {

/// Returns f(v) and writes df/dv into grad.
using Objective = std::function<double(std::span<const double> v, std::span<double> grad)>;

/// maximize f(v) s.t. lower <= v <= upper, A v <= b.
/// Variables with lower == upper are held fixed.
struct SmoothProgram {
  int dimension = 0;
  Objective objective;
  std::vector<double> lower;
  std::vector<double> upper;
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
};

enum class SolveStatus { Converged, Stalled, MaxIter, Infeasible };

std::string to_string(SolveStatus s);

struct SolveReport {
  std::vector<double> v;
  double value = 0.0;
  SolveStatus status = SolveStatus::MaxIter;
  double constraint_residual = 0.0;  // max violation of A v <= b
  double kkt_residual = 0.0;
  int iterations = 0;
  int evaluations = 0;
};

struct NlpOptions {
  double tolerance = 1e-8;  // stationarity (infinity norm)
  int max_iterations = 500;
};

/// Max violation of bounds and rows at v.
double constraint_violation(const SmoothProgram& prog, std::span<const double> v);

/// SQP with damped BFGS: each step solves a dense QP over the exact linear
/// constraints; iterates stay feasible. `start` must be feasible (violation
/// <= 1e-9), otherwise Infeasible is returned without iterating.
SolveReport maximize(const SmoothProgram& prog, std::span<const double> start, const NlpOptions& opt = {});

}  // namespace tcdp
