#include "tcdp/nlp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tcdp/qp.hpp"

namespace tcdp {

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Converged: return "converged";
    case SolveStatus::Stalled: return "stalled";
    case SolveStatus::MaxIter: return "max-iter";
    case SolveStatus::Infeasible: return "infeasible";
  }
  return "unknown";
}

double constraint_violation(const SmoothProgram& prog, std::span<const double> v) {
  double viol = 0.0;
  const auto n = static_cast<std::size_t>(prog.dimension);
  for (std::size_t i = 0; i < n; ++i) {
    viol = std::max(viol, prog.lower[i] - v[i]);
    viol = std::max(viol, v[i] - prog.upper[i]);
  }
  for (Eigen::Index r = 0; r < prog.A.rows(); ++r) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += prog.A(r, static_cast<Eigen::Index>(i)) * v[i];
    viol = std::max(viol, s - prog.b(r));
  }
  return viol;
}

namespace {

// Free-variable view of the program: fixed variables are substituted out.
struct Reduced {
  std::vector<int> free_idx;
  std::vector<double> full;  // full-length point, fixed entries set
  Eigen::MatrixXd C;         // rows over free vars: bounds then linear rows
  Eigen::VectorXd rhs0;      // C v_free <= rhs0 (absolute form)
  int nbound_rows = 0;
};

Reduced reduce(const SmoothProgram& prog, std::span<const double> start) {
  Reduced r;
  const int n = prog.dimension;
  r.full.assign(start.begin(), start.end());
  for (int i = 0; i < n; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    if (prog.lower[ui] == prog.upper[ui]) {
      r.full[ui] = prog.lower[ui];
    } else {
      r.free_idx.push_back(i);
    }
  }
  const auto nf = static_cast<Eigen::Index>(r.free_idx.size());
  std::vector<Eigen::VectorXd> rows;
  std::vector<double> rhs;
  for (Eigen::Index a = 0; a < nf; ++a) {
    const auto i = static_cast<std::size_t>(r.free_idx[static_cast<std::size_t>(a)]);
    if (std::isfinite(prog.upper[i])) {
      Eigen::VectorXd row = Eigen::VectorXd::Zero(nf);
      row(a) = 1.0;
      rows.push_back(row);
      rhs.push_back(prog.upper[i]);
    }
    if (std::isfinite(prog.lower[i])) {
      Eigen::VectorXd row = Eigen::VectorXd::Zero(nf);
      row(a) = -1.0;
      rows.push_back(row);
      rhs.push_back(-prog.lower[i]);
    }
  }
  r.nbound_rows = static_cast<int>(rows.size());
  for (Eigen::Index q = 0; q < prog.A.rows(); ++q) {
    Eigen::VectorXd row(nf);
    double fixed_part = 0.0;
    for (Eigen::Index a = 0; a < nf; ++a) row(a) = prog.A(q, r.free_idx[static_cast<std::size_t>(a)]);
    for (int i = 0; i < n; ++i) {
      if (prog.lower[static_cast<std::size_t>(i)] == prog.upper[static_cast<std::size_t>(i)]) {
        fixed_part += prog.A(q, i) * r.full[static_cast<std::size_t>(i)];
      }
    }
    rows.push_back(row);
    rhs.push_back(prog.b(q) - fixed_part);
  }
  r.C.resize(static_cast<Eigen::Index>(rows.size()), nf);
  r.rhs0.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t q = 0; q < rows.size(); ++q) {
    r.C.row(static_cast<Eigen::Index>(q)) = rows[q].transpose();
    r.rhs0(static_cast<Eigen::Index>(q)) = rhs[q];
  }
  return r;
}

}  // namespace

SolveReport maximize(const SmoothProgram& prog, std::span<const double> start, const NlpOptions& opt) {
  const int n = prog.dimension;
  SolveReport rep;
  rep.v.assign(start.begin(), start.end());
  if (constraint_violation(prog, start) > 1e-9) {
    rep.status = SolveStatus::Infeasible;
    rep.constraint_residual = constraint_violation(prog, start);
    return rep;
  }
  Reduced red = reduce(prog, start);
  const auto nf = static_cast<Eigen::Index>(red.free_idx.size());
  std::vector<double> grad_full(static_cast<std::size_t>(n));

  auto eval = [&](const std::vector<double>& full, Eigen::VectorXd& gfree) {
    const double f = prog.objective(full, grad_full);
    ++rep.evaluations;
    gfree.resize(nf);
    for (Eigen::Index a = 0; a < nf; ++a) gfree(a) = -grad_full[static_cast<std::size_t>(red.free_idx[static_cast<std::size_t>(a)])];
    return -f;  // minimize phi = -f
  };

  std::vector<double> x = red.full;
  Eigen::VectorXd g;
  double phi = eval(x, g);
  rep.value = -phi;
  if (nf == 0) {
    rep.status = SolveStatus::Converged;
    return rep;
  }
  Eigen::MatrixXd B = Eigen::MatrixXd::Identity(nf, nf);
  bool scaled = false;
  int flat_count = 0;
  Eigen::VectorXd xf(nf);
  for (int it = 0; it < opt.max_iterations; ++it) {
    rep.iterations = it + 1;
    for (Eigen::Index a = 0; a < nf; ++a) xf(a) = x[static_cast<std::size_t>(red.free_idx[static_cast<std::size_t>(a)])];
    Eigen::VectorXd h = red.rhs0 - red.C * xf;
    for (Eigen::Index q = 0; q < h.size(); ++q) h(q) = std::max(0.0, h(q));
    QpResult qp = solve_qp_feasible_start(B, g, red.C, h);
    if (!qp.ok) {
      // Reset curvature and retry once before giving up.
      B = Eigen::MatrixXd::Identity(nf, nf) * std::max(1e-8, B.diagonal().mean());
      qp = solve_qp_feasible_start(B, g, red.C, h);
      if (!qp.ok) {
        rep.status = SolveStatus::Stalled;
        break;
      }
    }
    const Eigen::VectorXd& p = qp.p;
    const double kkt = (B * p).lpNorm<Eigen::Infinity>();
    rep.kkt_residual = kkt;
    if (kkt <= opt.tolerance || p.lpNorm<Eigen::Infinity>() <= 1e-14) {
      rep.status = SolveStatus::Converged;
      break;
    }
    const double slope = g.dot(p);
    if (slope >= 0.0) {
      // Not a descent direction under the current model.
      B = Eigen::MatrixXd::Identity(nf, nf) * std::max(1e-8, B.diagonal().mean());
      if (++flat_count > 3) {
        rep.status = SolveStatus::Stalled;
        break;
      }
      continue;
    }
    // Cap the step at the feasible boundary along p; the QP solution can
    // overshoot a nearly degenerate active set.
    double alpha = 1.0;
    const Eigen::VectorXd Cp = red.C * p;
    for (Eigen::Index q = 0; q < Cp.size(); ++q) {
      if (Cp(q) > h(q) + 1e-12) alpha = std::min(alpha, h(q) / Cp(q));
    }
    if (!(alpha > 1e-14)) {
      B = Eigen::MatrixXd::Identity(nf, nf) * std::max(1e-8, B.diagonal().mean());
      if (++flat_count > 3) {
        rep.status = SolveStatus::Stalled;
        break;
      }
      continue;
    }
    std::vector<double> xn = x;
    Eigen::VectorXd gn;
    double phin = 0.0;
    bool accepted = false;
    for (int ls = 0; ls < 40; ++ls) {
      for (Eigen::Index a = 0; a < nf; ++a) {
        const auto i = static_cast<std::size_t>(red.free_idx[static_cast<std::size_t>(a)]);
        double v = x[i] + alpha * p(a);
        v = std::clamp(v, prog.lower[i], prog.upper[i]);
        if (std::abs(v - prog.lower[i]) <= 1e-15) v = prog.lower[i];
        xn[i] = v;
      }
      phin = eval(xn, gn);
      if (std::isfinite(phin) && phin <= phi + 1e-4 * alpha * slope) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      rep.status = kkt <= 1e3 * opt.tolerance ? SolveStatus::Converged : SolveStatus::Stalled;
      break;
    }
    Eigen::VectorXd s(nf), y = gn - g;
    for (Eigen::Index a = 0; a < nf; ++a) {
      const auto i = static_cast<std::size_t>(red.free_idx[static_cast<std::size_t>(a)]);
      s(a) = xn[i] - x[i];
    }
    const double decrease = phi - phin;
    x.swap(xn);
    g = gn;
    phi = phin;
    if (decrease <= 1e-16 * std::max(1.0, std::abs(phi))) {
      if (++flat_count >= 3) {
        rep.status = kkt <= 1e3 * opt.tolerance ? SolveStatus::Converged : SolveStatus::Stalled;
        break;
      }
    } else {
      flat_count = 0;
    }
    // Damped BFGS (Powell).
    const double sy = s.dot(y);
    if (!scaled && sy > 0.0 && y.squaredNorm() > 0.0) {
      B = Eigen::MatrixXd::Identity(nf, nf) * (y.squaredNorm() / sy);
      scaled = true;
    }
    const Eigen::VectorXd Bs = B * s;
    const double sBs = s.dot(Bs);
    if (sBs <= 1e-300) continue;
    double theta = 1.0;
    if (sy < 0.2 * sBs) theta = 0.8 * sBs / (sBs - sy);
    const Eigen::VectorXd r = theta * y + (1.0 - theta) * Bs;
    const double sr = s.dot(r);
    if (sr <= 1e-300) continue;
    B += r * r.transpose() / sr - Bs * Bs.transpose() / sBs;
    B = 0.5 * (B + B.transpose());
  }
  rep.v = x;
  rep.value = -phi;
  rep.constraint_residual = std::max(0.0, constraint_violation(prog, x));
  return rep;
}

}  // namespace tcdp
