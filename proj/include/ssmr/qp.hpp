#pragma once

// Dense convex QP solver: Mehrotra predictor-corrector interior point with an
// active-set polishing step.
//
//   minimize   1/2 x^T P x + q^T x
//   subject to A x = b,  G x <= h
//
// P must be symmetric positive semidefinite.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ssmr/error.hpp"

namespace ssmr {

struct QPProblem {
  Eigen::MatrixXd hessian;
  Eigen::VectorXd linear;
  Eigen::MatrixXd eq_matrix;
  Eigen::VectorXd eq_rhs;
  Eigen::MatrixXd ineq_matrix;
  Eigen::VectorXd ineq_rhs;
  double offset = 0.0;  // constant added to the objective

  Eigen::Index variables() const { return hessian.rows(); }
  Eigen::Index equalities() const { return eq_matrix.rows(); }
  Eigen::Index inequalities() const { return ineq_matrix.rows(); }

  double objective(const Eigen::VectorXd& x) const { return 0.5 * x.dot(hessian * x) + linear.dot(x) + offset; }

  void validate() const {
    const auto n = variables();
    require(hessian.cols() == n && linear.size() == n, ErrorKind::DimensionMismatch, "QP objective sizes differ");
    require(eq_matrix.cols() == n || eq_matrix.rows() == 0, ErrorKind::DimensionMismatch, "QP equality width differs");
    require(eq_rhs.size() == eq_matrix.rows(), ErrorKind::DimensionMismatch, "QP equality rhs size differs");
    require(ineq_matrix.cols() == n || ineq_matrix.rows() == 0, ErrorKind::DimensionMismatch,
            "QP inequality width differs");
    require(ineq_rhs.size() == ineq_matrix.rows(), ErrorKind::DimensionMismatch, "QP inequality rhs size differs");
  }
};

enum class QPStatus { Optimal, MaxIter, Infeasible };

inline std::string to_string(QPStatus s) {
  switch (s) {
    case QPStatus::Optimal: return "optimal";
    case QPStatus::MaxIter: return "max-iter";
    case QPStatus::Infeasible: return "infeasible";
  }
  return "unknown";
}

struct KKTResiduals {
  double stationarity = 0.0;     // ||P x + q + A^T y + G^T z||_inf
  double primal = 0.0;           // max(||A x - b||_inf, max(G x - h, 0))
  double dual = 0.0;             // max(-z, 0)
  double complementarity = 0.0;  // max |z_i (h - G x)_i|

  double max() const { return std::max({stationarity, primal, dual, complementarity}); }
};

struct QPSolution {
  Eigen::VectorXd x;
  Eigen::VectorXd eq_duals;
  Eigen::VectorXd ineq_duals;
  QPStatus status = QPStatus::MaxIter;
  int iterations = 0;
  double objective = 0.0;
  KKTResiduals kkt;
};

inline KKTResiduals kkt_residuals(const QPProblem& qp, const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                                  const Eigen::VectorXd& z) {
  KKTResiduals r;
  Eigen::VectorXd grad = qp.hessian * x + qp.linear;
  if (qp.equalities()) grad.noalias() += qp.eq_matrix.transpose() * y;
  if (qp.inequalities()) grad.noalias() += qp.ineq_matrix.transpose() * z;
  r.stationarity = grad.size() ? grad.cwiseAbs().maxCoeff() : 0.0;
  if (qp.equalities()) r.primal = (qp.eq_matrix * x - qp.eq_rhs).cwiseAbs().maxCoeff();
  if (qp.inequalities()) {
    const Eigen::VectorXd slack = qp.ineq_rhs - qp.ineq_matrix * x;
    r.primal = std::max(r.primal, std::max(0.0, -slack.minCoeff()));
    r.dual = std::max(0.0, -z.minCoeff());
    r.complementarity = z.cwiseProduct(slack).cwiseAbs().maxCoeff();
  }
  return r;
}

struct QPSettings {
  int max_iterations = 100;
  double tolerance = 1e-10;
  bool polish = true;
};

namespace detail {

inline double max_step(const Eigen::VectorXd& v, const Eigen::VectorXd& dv) {
  double alpha = 1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (dv(i) < 0.0) alpha = std::min(alpha, -v(i) / dv(i));
  return alpha;
}

// Solves the equality-constrained QP given by treating `active` inequalities
// as equalities. The KKT matrix is regularized by +-delta (so dependent
// active rows are harmless) and the regularization is removed again by
// iterative refinement against the exact matrix. The candidate replaces `sol`
// only if its KKT residual is smaller.
inline bool polish(const QPProblem& qp, const std::vector<Eigen::Index>& active, QPSolution& sol) {
  const auto n = qp.variables(), me = qp.equalities();
  const auto na = static_cast<Eigen::Index>(active.size());
  const auto dim = n + me + na;
  Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::VectorXd rhs(dim);
  kkt.topLeftCorner(n, n) = qp.hessian;
  rhs.head(n) = -qp.linear;
  if (me) {
    kkt.block(0, n, n, me) = qp.eq_matrix.transpose();
    kkt.block(n, 0, me, n) = qp.eq_matrix;
    rhs.segment(n, me) = qp.eq_rhs;
  }
  for (Eigen::Index k = 0; k < na; ++k) {
    kkt.block(0, n + me + k, n, 1) = qp.ineq_matrix.row(active[k]).transpose();
    kkt.block(n + me + k, 0, 1, n) = qp.ineq_matrix.row(active[k]);
    rhs(n + me + k) = qp.ineq_rhs(active[k]);
  }
  const double delta = 1e-9;
  Eigen::MatrixXd reg = kkt;
  reg.topLeftCorner(n, n).diagonal().array() += delta;
  reg.bottomRightCorner(me + na, me + na).diagonal().array() -= delta;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(reg);
  Eigen::VectorXd v = lu.solve(rhs);
  for (int it = 0; it < 10; ++it) v += lu.solve(rhs - kkt * v);
  if (!v.allFinite()) return false;
  QPSolution cand = sol;
  cand.x = v.head(n);
  cand.eq_duals = v.segment(n, me);
  cand.ineq_duals = Eigen::VectorXd::Zero(qp.inequalities());
  for (Eigen::Index k = 0; k < na; ++k) cand.ineq_duals(active[k]) = v(n + me + k);
  cand.kkt = kkt_residuals(qp, cand.x, cand.eq_duals, cand.ineq_duals);
  if (cand.kkt.max() >= sol.kkt.max()) return false;
  cand.objective = qp.objective(cand.x);
  sol = cand;
  return true;
}

}  // namespace detail

inline QPSolution solve_qp(const QPProblem& qp, const QPSettings& settings = {});

namespace detail {

// Elastic feasibility problem: minimize the total constraint violation. The
// original constraints are feasible iff its optimum is (numerically) zero.
inline bool constraints_feasible(const QPProblem& qp, double tol) {
  const auto n = qp.variables(), me = qp.equalities(), mi = qp.inequalities();
  const auto nv = n + 2 * me + mi;
  QPProblem f;
  f.hessian = Eigen::MatrixXd::Zero(nv, nv);
  f.hessian.topLeftCorner(n, n).diagonal().setConstant(1e-8);
  f.linear = Eigen::VectorXd::Zero(nv);
  f.linear.tail(2 * me + mi).setOnes();
  f.eq_matrix = Eigen::MatrixXd::Zero(me, nv);
  f.eq_rhs = qp.eq_rhs;
  if (me) {
    f.eq_matrix.leftCols(n) = qp.eq_matrix;
    f.eq_matrix.block(0, n, me, me).setIdentity();
    f.eq_matrix.block(0, n + me, me, me) = -Eigen::MatrixXd::Identity(me, me);
  }
  f.ineq_matrix = Eigen::MatrixXd::Zero(mi + 2 * me + mi, nv);
  f.ineq_rhs = Eigen::VectorXd::Zero(mi + 2 * me + mi);
  if (mi) {
    f.ineq_matrix.topLeftCorner(mi, n) = qp.ineq_matrix;
    f.ineq_matrix.block(0, n + 2 * me, mi, mi) = -Eigen::MatrixXd::Identity(mi, mi);
    f.ineq_rhs.head(mi) = qp.ineq_rhs;
  }
  f.ineq_matrix.bottomRightCorner(2 * me + mi, 2 * me + mi) = -Eigen::MatrixXd::Identity(2 * me + mi, 2 * me + mi);
  QPSettings s;
  s.polish = false;
  s.tolerance = 1e-9;
  s.max_iterations = 200;
  const QPSolution sol = solve_qp(f, s);
  const double violation = sol.x.tail(2 * me + mi).sum();
  return violation <= tol * (1.0 + qp.eq_rhs.lpNorm<Eigen::Infinity>() + qp.ineq_rhs.lpNorm<Eigen::Infinity>());
}

}  // namespace detail

inline QPSolution solve_qp(const QPProblem& qp, const QPSettings& settings) {
  qp.validate();
  const auto n = qp.variables(), me = qp.equalities(), mi = qp.inequalities();
  const Eigen::MatrixXd& P = qp.hessian;
  const Eigen::MatrixXd& A = qp.eq_matrix;
  const Eigen::MatrixXd& G = qp.ineq_matrix;

  QPSolution sol;
  sol.x = Eigen::VectorXd::Zero(n);
  sol.eq_duals = Eigen::VectorXd::Zero(me);
  sol.ineq_duals = Eigen::VectorXd::Zero(mi);

  const double primal_scale = 1.0 + std::max(me ? qp.eq_rhs.lpNorm<Eigen::Infinity>() : 0.0,
                                             mi ? qp.ineq_rhs.lpNorm<Eigen::Infinity>() : 0.0);
  const double dual_scale = 1.0 + (n ? qp.linear.lpNorm<Eigen::Infinity>() : 0.0);
  const double data_scale = std::max(primal_scale, dual_scale);
  const double reg = 1e-12 * (1.0 + (P.size() ? P.cwiseAbs().maxCoeff() : 0.0));

  auto factor_and_solve = [&](const Eigen::VectorXd& w, const Eigen::VectorXd& rhs_x, const Eigen::VectorXd& rhs_y,
                              Eigen::VectorXd& dx, Eigen::VectorXd& dy) {
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + me, n + me);
    kkt.topLeftCorner(n, n) = P;
    if (mi) kkt.topLeftCorner(n, n).noalias() += G.transpose() * w.asDiagonal() * G;
    kkt.topLeftCorner(n, n).diagonal().array() += reg;
    if (me) {
      kkt.topRightCorner(n, me) = A.transpose();
      kkt.bottomLeftCorner(me, n) = A;
      kkt.bottomRightCorner(me, me).diagonal().setConstant(-reg);
    }
    Eigen::VectorXd rhs(n + me);
    rhs << rhs_x, rhs_y;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(kkt);
    Eigen::VectorXd d = lu.solve(rhs);
    d += lu.solve(rhs - kkt * d);
    dx = d.head(n);
    dy = d.tail(me);
  };

  // Initial point: least-squares fit of the constraints, then push s, z > 0.
  Eigen::VectorXd x(n), y(me), s(mi), z(mi);
  {
    Eigen::VectorXd dx, dy;
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(mi);
    Eigen::VectorXd rx = -qp.linear;
    if (mi) rx.noalias() += G.transpose() * qp.ineq_rhs;
    factor_and_solve(ones, rx, qp.eq_rhs, dx, dy);
    x = dx;
    y = dy;
    if (mi) {
      // Both s = h - G x and z = G x - h solve the relaxed KKT system; shift
      // each into the positive orthant.
      s = qp.ineq_rhs - G * x;
      z = -s;
      const double ps = -s.minCoeff(), pz = -z.minCoeff();
      if (ps >= 0.0) s.array() += 1.0 + ps;
      if (pz >= 0.0) z.array() += 1.0 + pz;
    }
  }

  // Best iterate by scaled residual merit. On degenerate problems the
  // scaling W = Z S^-1 can wreck the Newton system once complementarity has
  // collapsed; the best iterate is then a far better start for polishing.
  struct Iterate {
    Eigen::VectorXd x, y, s, z;
    double merit = std::numeric_limits<double>::infinity();
  } best;
  bool converged = false;
  int iter = 0;
  for (; iter < settings.max_iterations; ++iter) {
    Eigen::VectorXd r_dual = P * x + qp.linear;
    if (me) r_dual.noalias() += A.transpose() * y;
    if (mi) r_dual.noalias() += G.transpose() * z;
    const Eigen::VectorXd r_eq = me ? Eigen::VectorXd(A * x - qp.eq_rhs) : Eigen::VectorXd();
    const Eigen::VectorXd r_in = mi ? Eigen::VectorXd(G * x + s - qp.ineq_rhs) : Eigen::VectorXd();
    const double mu = mi ? s.dot(z) / static_cast<double>(mi) : 0.0;
    const double res_d = r_dual.size() ? r_dual.lpNorm<Eigen::Infinity>() : 0.0;
    const double res_p = std::max(me ? r_eq.lpNorm<Eigen::Infinity>() : 0.0, mi ? r_in.lpNorm<Eigen::Infinity>() : 0.0);
    const double gap_scale = 1.0 + std::abs(qp.objective(x));
    if (res_d <= settings.tolerance * dual_scale && res_p <= settings.tolerance * primal_scale &&
        mu <= settings.tolerance * gap_scale) {
      converged = true;
      break;
    }
    if (!x.allFinite() || (mi && (!s.allFinite() || !z.allFinite()))) break;
    const double merit = std::max({res_d / dual_scale, res_p / primal_scale, mu / gap_scale});
    if (merit < best.merit) best = {x, y, s, z, merit};
    if (mi && mu <= 1e-4 * settings.tolerance * gap_scale) break;

    if (mi == 0) {
      // Equality-constrained QP: one Newton step is exact.
      Eigen::VectorXd dx, dy;
      factor_and_solve(Eigen::VectorXd(), -r_dual, -r_eq, dx, dy);
      x += dx;
      y += dy;
      continue;
    }

    const Eigen::VectorXd w = z.cwiseQuotient(s);
    auto direction = [&](const Eigen::VectorXd& r_c, Eigen::VectorXd& dx, Eigen::VectorXd& dy, Eigen::VectorXd& ds,
                         Eigen::VectorXd& dz) {
      // dz = S^-1 (-r_c + Z r_in) + W G dx ; ds = -r_in - G dx
      const Eigen::VectorXd t = (-r_c + z.cwiseProduct(r_in)).cwiseQuotient(s);
      const Eigen::VectorXd rx = -r_dual - G.transpose() * t;
      const Eigen::VectorXd ry = me ? Eigen::VectorXd(-r_eq) : Eigen::VectorXd();
      factor_and_solve(w, rx, ry, dx, dy);
      dz = t + w.cwiseProduct(G * dx);
      ds = -r_in - G * dx;
    };

    Eigen::VectorXd dx, dy, ds, dz;
    direction(s.cwiseProduct(z), dx, dy, ds, dz);
    const double alpha_aff = std::min(detail::max_step(s, ds), detail::max_step(z, dz));
    const double mu_aff = (s + alpha_aff * ds).dot(z + alpha_aff * dz) / static_cast<double>(mi);
    const double sigma = std::pow(mu_aff / mu, 3);
    const Eigen::VectorXd r_c =
        s.cwiseProduct(z) + ds.cwiseProduct(dz) - Eigen::VectorXd::Constant(mi, sigma * mu);
    direction(r_c, dx, dy, ds, dz);
    double alpha = std::min(1.0, 0.99 * std::min(detail::max_step(s, ds), detail::max_step(z, dz)));
    if (std::max(res_d / dual_scale, res_p / primal_scale) < mu / gap_scale) {
      // Near feasibility s'z is an exact quadratic in the step length and,
      // with P in the picture, ds'dz >= 0 can make full steps overshoot and
      // cycle. Use the centered direction when the corrected one does not
      // descend, and stop at the minimizer along the ray.
      auto gap_slope = [&] { return s.dot(dz) + z.dot(ds); };
      if (gap_slope() >= 0.0) {
        direction(s.cwiseProduct(z) - Eigen::VectorXd::Constant(mi, std::max(sigma, 0.3) * mu), dx, dy, ds, dz);
        alpha = std::min(1.0, 0.99 * std::min(detail::max_step(s, ds), detail::max_step(z, dz)));
      }
      const double a1 = gap_slope(), a2 = ds.dot(dz);
      if (a1 < 0.0 && a2 > 0.0) alpha = std::min(alpha, -a1 / (2.0 * a2));
    }
    x += alpha * dx;
    if (me) y += alpha * dy;
    s += alpha * ds;
    z += alpha * dz;
  }

  if (!converged && std::isfinite(best.merit)) {
    x = best.x;
    y = best.y;
    s = best.s;
    z = best.z;
  }
  sol.iterations = iter;
  sol.x = x;
  sol.eq_duals = y;
  sol.ineq_duals = mi ? z : Eigen::VectorXd();
  sol.kkt = kkt_residuals(qp, sol.x, sol.eq_duals, sol.ineq_duals);
  sol.objective = qp.objective(sol.x);

  if (!converged && sol.kkt.max() > 1e-6 * data_scale) {
    if (mi + me > 0 && !detail::constraints_feasible(qp, 1e-7)) {
      sol.status = QPStatus::Infeasible;
      return sol;
    }
    sol.status = QPStatus::MaxIter;
    return sol;
  }
  sol.status = QPStatus::Optimal;
  if (settings.polish && mi > 0) {
    std::vector<Eigen::Index> active;
    for (Eigen::Index i = 0; i < mi; ++i)
      if (z(i) > s(i)) active.push_back(i);
    detail::polish(qp, active, sol);
  }
  return sol;
}

}  // namespace ssmr
