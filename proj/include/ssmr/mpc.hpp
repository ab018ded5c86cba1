#pragma once

// Reduced-order optimal control: RK4 discretization, linearization along a
// nominal trajectory, the linearized OCP as a dense QP, and sequential convex
// programming with an infinity-norm trust region.

#include <algorithm>
#include <cassert>
#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "ssmr/controllearn.hpp"
#include "ssmr/error.hpp"
#include "ssmr/qp.hpp"

namespace ssmr {

/// { v : M v <= b }. No rows means unconstrained.
struct Polytope {
  Eigen::MatrixXd matrix;
  Eigen::VectorXd rhs;

  bool unconstrained() const { return matrix.rows() == 0; }

  static Polytope box(const Eigen::VectorXd& lower, const Eigen::VectorXd& upper) {
    const auto d = lower.size();
    Polytope p;
    p.matrix.resize(2 * d, d);
    p.matrix << Eigen::MatrixXd::Identity(d, d), -Eigen::MatrixXd::Identity(d, d);
    p.rhs.resize(2 * d);
    p.rhs << upper, -lower;
    return p;
  }

  /// Largest violation max(M v - b), clipped at zero.
  double violation(const Eigen::VectorXd& v) const {
    if (unconstrained()) return 0.0;
    return std::max(0.0, (matrix * v - rhs).maxCoeff());
  }
};

struct TrustRegionSettings {
  double initial_radius = 0.0;  // 0: 10% of the model's reduced amplitude
  double shrink = 0.5;
  double grow = 2.0;
  double accept_ratio = 0.1;
  double grow_ratio = 0.75;
  double max_radius_factor = 10.0;  // cap relative to the initial radius
};

struct OCPConfig {
  Eigen::MatrixXd stage_weight;     // Q, o x o
  Eigen::MatrixXd terminal_weight;  // Q_f, o x o
  Eigen::MatrixXd control_weight;   // R, m x m
  int horizon = 3;
  double dt = 0.01;
  int rollout_horizon = 1;
  Polytope control_polytope;
  Polytope performance_polytope;
  double soft_penalty = 0.0;  // 0: 1e4 * lambda_max(Q)
  TrustRegionSettings trust_region;
  double scp_tolerance = 1e-4;
  int scp_max_iters = 20;

  double penalty() const {
    if (soft_penalty > 0.0) return soft_penalty;
    const double lmax = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(stage_weight, Eigen::EigenvaluesOnly)
                            .eigenvalues()
                            .maxCoeff();
    return 1e4 * std::max(lmax, 1e-12);
  }

  void validate(int inputs, int outputs) const {
    auto check_weight = [](const Eigen::MatrixXd& w, int dim, double floor, const char* name) {
      require(w.rows() == dim && w.cols() == dim, ErrorKind::DimensionMismatch, std::string(name) + " has wrong size");
      require((w - w.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + w.cwiseAbs().maxCoeff()),
              ErrorKind::InvalidArgument, std::string(name) + " is not symmetric");
      const double lmin =
          Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(w, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
      require(lmin >= floor, ErrorKind::InvalidArgument,
              std::string(name) + " has eigenvalue " + format_number(lmin) + " below " + format_number(floor));
    };
    check_weight(stage_weight, outputs, -1e-10, "stage weight Q");
    check_weight(terminal_weight, outputs, -1e-10, "terminal weight Q_f");
    check_weight(control_weight, inputs, 1e-8, "control weight R");
    require(horizon >= 2, ErrorKind::InvalidArgument, "horizon must be >= 2");
    require(rollout_horizon >= 1 && rollout_horizon <= horizon - 1, ErrorKind::InvalidArgument,
            "rollout horizon must lie in [1, horizon - 1]");
    require(dt > 0.0, ErrorKind::InvalidArgument, "dt must be positive");
    require(soft_penalty >= 0.0, ErrorKind::InvalidArgument, "soft penalty must be positive");
    require(scp_tolerance > 0.0, ErrorKind::InvalidArgument, "scp tolerance must be positive");
    require(scp_max_iters >= 1, ErrorKind::InvalidArgument, "scp_max_iters must be >= 1");
    const auto& tr = trust_region;
    require(tr.initial_radius >= 0.0 && tr.shrink > 0.0 && tr.shrink < 1.0 && tr.grow >= 1.0 &&
                tr.accept_ratio > 0.0 && tr.accept_ratio < 1.0 && tr.max_radius_factor >= 1.0,
            ErrorKind::InvalidArgument, "invalid trust-region settings");
    auto check_poly = [](const Polytope& p, int dim, const char* name) {
      if (p.unconstrained()) return;
      require(p.matrix.cols() == dim && p.rhs.size() == p.matrix.rows(), ErrorKind::DimensionMismatch,
              std::string(name) + " polytope has wrong size");
    };
    check_poly(control_polytope, inputs, "control");
    check_poly(performance_polytope, outputs, "performance");
  }
};

struct DiscreteStep {
  Eigen::VectorXd next;
  Eigen::MatrixXd jac_x;
  Eigen::MatrixXd jac_u;
};

/// r_d(x, u): one RK4 step of the continuous model under zero-order hold, or
/// the model itself when it is already discrete.
class DiscreteDynamics {
 public:
  DiscreteDynamics(const SSMRModel& model, double dt) : model_(&model), dt_(dt) {
    require(dt > 0.0, ErrorKind::InvalidArgument, "dt must be positive");
    if (!model.continuous())
      require(std::abs(model.dynamics.dt - dt) <= 1e-12 * dt, ErrorKind::InconsistentSampling,
              "discrete model step " + format_number(model.dynamics.dt) + " differs from dt " + format_number(dt));
  }

  double dt() const { return dt_; }
  const SSMRModel& model() const { return *model_; }

  Eigen::VectorXd step(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const {
    const SSMRModel& m = *model_;
    if (!m.continuous()) return m.rhs(x, u);
    const double h = dt_;
    const Eigen::VectorXd k1 = m.rhs(x, u);
    const Eigen::VectorXd k2 = m.rhs(x + 0.5 * h * k1, u);
    const Eigen::VectorXd k3 = m.rhs(x + 0.5 * h * k2, u);
    const Eigen::VectorXd k4 = m.rhs(x + h * k3, u);
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }

  DiscreteStep step_with_jacobians(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const {
    const SSMRModel& m = *model_;
    const auto n = x.size();
    const Eigen::MatrixXd& b = m.rhs_jacobian_u();
    DiscreteStep out;
    if (!m.continuous()) {
      out.next = m.rhs(x, u);
      out.jac_x = m.rhs_jacobian_x(x);
      out.jac_u = b;
      return out;
    }
    const double h = dt_;
    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(n, n);
    const Eigen::VectorXd k1 = m.rhs(x, u);
    const Eigen::MatrixXd k1x = m.rhs_jacobian_x(x);
    const Eigen::MatrixXd k1u = b;
    const Eigen::VectorXd x2 = x + 0.5 * h * k1;
    const Eigen::VectorXd k2 = m.rhs(x2, u);
    const Eigen::MatrixXd f2 = m.rhs_jacobian_x(x2);
    const Eigen::MatrixXd k2x = f2 * (eye + 0.5 * h * k1x);
    const Eigen::MatrixXd k2u = f2 * (0.5 * h * k1u) + b;
    const Eigen::VectorXd x3 = x + 0.5 * h * k2;
    const Eigen::VectorXd k3 = m.rhs(x3, u);
    const Eigen::MatrixXd f3 = m.rhs_jacobian_x(x3);
    const Eigen::MatrixXd k3x = f3 * (eye + 0.5 * h * k2x);
    const Eigen::MatrixXd k3u = f3 * (0.5 * h * k2u) + b;
    const Eigen::VectorXd x4 = x + h * k3;
    const Eigen::VectorXd k4 = m.rhs(x4, u);
    const Eigen::MatrixXd f4 = m.rhs_jacobian_x(x4);
    const Eigen::MatrixXd k4x = f4 * (eye + h * k3x);
    const Eigen::MatrixXd k4u = f4 * (h * k3u) + b;
    out.next = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    out.jac_x = eye + (h / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
    out.jac_u = (h / 6.0) * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
    return out;
  }

  /// States x_1..x_N from x_1 = x0 under controls u_1..u_{N-1} (columns).
  Eigen::MatrixXd rollout(const Eigen::VectorXd& x0, const Eigen::MatrixXd& controls) const {
    Eigen::MatrixXd xs(x0.size(), controls.cols() + 1);
    xs.col(0) = x0;
    for (Eigen::Index k = 0; k < controls.cols(); ++k) {
      xs.col(k + 1) = step(xs.col(k), controls.col(k));
      require(xs.col(k + 1).allFinite(), ErrorKind::NonFiniteState, "reduced rollout diverged");
    }
    return xs;
  }

 private:
  const SSMRModel* model_;
  double dt_;
};

inline DiscreteDynamics discretize_dynamics(const SSMRModel& model, double dt) { return DiscreteDynamics(model, dt); }

/// x_{k+1} ~ A x_k + B u_k + d,  z_k ~ H x_k + c, exact at (point, control).
/// B is the control Jacobian of r_d, which equals B_r for discrete models and
/// B_r * dt + O(dt^2) under RK4.
struct LinearizedStep {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  Eigen::VectorXd d;
  Eigen::MatrixXd H;
  Eigen::VectorXd c;
  Eigen::VectorXd point;
  Eigen::VectorXd control;
};

inline LinearizedStep linearize(const SSMRModel& model, const DiscreteDynamics& rd, const Eigen::VectorXd& x,
                                const Eigen::VectorXd& u) {
  require(x.size() == model.reduced_dim() && u.size() == model.input_dim(), ErrorKind::DimensionMismatch,
          "linearization point has wrong size");
  const DiscreteStep s = rd.step_with_jacobians(x, u);
  LinearizedStep l;
  l.A = s.jac_x;
  l.B = s.jac_u;
  l.d = s.next - l.A * x - l.B * u;
  l.H = model.performance_jacobian(x);
  l.c = model.performance(x) - l.H * x;
  l.point = x;
  l.control = u;
#ifndef NDEBUG
  const double scale = 1.0 + s.next.cwiseAbs().maxCoeff();
  assert((l.A * x + l.B * u + l.d - s.next).cwiseAbs().maxCoeff() <= 1e-10 * scale);
#endif
  return l;
}

/// Variable layout of the linearized OCP: x_1..x_N, u_1..u_{N-1}, then one
/// slack per performance-polytope row for k = 2..N.
struct LocpLayout {
  int n = 0, m = 0, rows_z = 0, horizon = 0;

  Eigen::Index x(int k) const { return static_cast<Eigen::Index>(k) * n; }
  Eigen::Index u(int k) const { return static_cast<Eigen::Index>(horizon) * n + static_cast<Eigen::Index>(k) * m; }
  Eigen::Index slack(int k) const {
    return static_cast<Eigen::Index>(horizon) * n + static_cast<Eigen::Index>(horizon - 1) * m +
           static_cast<Eigen::Index>(k - 1) * rows_z;
  }
  Eigen::Index size() const { return slack(horizon); }
};

inline LocpLayout locp_layout(const SSMRModel& model, const OCPConfig& config) {
  return {model.reduced_dim(), model.input_dim(), static_cast<int>(config.performance_polytope.matrix.rows()),
          config.horizon};
}

inline bool control_polytope_feasible(const Polytope& p) {
  if (p.unconstrained()) return true;
  QPProblem probe;
  const auto m = p.matrix.cols();
  probe.hessian = Eigen::MatrixXd::Zero(m, m);
  probe.linear = Eigen::VectorXd::Zero(m);
  probe.eq_matrix.resize(0, m);
  probe.eq_rhs.resize(0);
  probe.ineq_matrix = p.matrix;
  probe.ineq_rhs = p.rhs;
  return detail::constraints_feasible(probe, 1e-9);
}

/// Quadratic stage cost on delta z, control cost, l1 penalty on performance
/// slack, hard linearized dynamics and control polytope, and an inf-norm box
/// of `trust_radius` around each step's linearization point (k >= 2).
/// `reference` holds z-bar_1..z-bar_N as columns.
inline QPProblem build_locp(const SSMRModel& model, const std::vector<LinearizedStep>& steps,
                            const Eigen::VectorXd& x_init, const Eigen::MatrixXd& reference, const OCPConfig& config,
                            double trust_radius) {
  const int N = config.horizon;
  const int n = model.reduced_dim(), m = model.input_dim(), o = model.output_dim();
  require(static_cast<int>(steps.size()) == N, ErrorKind::DimensionMismatch, "need one linearized step per knot");
  require(reference.rows() == o && reference.cols() == N, ErrorKind::DimensionMismatch, "reference must be o x N");
  require(x_init.size() == n, ErrorKind::DimensionMismatch, "initial reduced state has wrong size");
  require(control_polytope_feasible(config.control_polytope), ErrorKind::InfeasibleHardConstraints,
          "control polytope is empty");
  const LocpLayout L = locp_layout(model, config);
  const auto nv = L.size();
  const double rho = config.penalty();

  QPProblem qp;
  qp.hessian = Eigen::MatrixXd::Zero(nv, nv);
  qp.linear = Eigen::VectorXd::Zero(nv);
  for (int k = 0; k < N; ++k) {
    const Eigen::MatrixXd& W = (k == N - 1) ? config.terminal_weight : config.stage_weight;
    const LinearizedStep& s = steps[k];
    const Eigen::VectorXd r = s.c - reference.col(k);
    qp.hessian.block(L.x(k), L.x(k), n, n) += 2.0 * s.H.transpose() * W * s.H;
    qp.linear.segment(L.x(k), n) += 2.0 * s.H.transpose() * W * r;
    qp.offset += r.dot(W * r);
  }
  for (int k = 0; k < N - 1; ++k) qp.hessian.block(L.u(k), L.u(k), m, m) = 2.0 * config.control_weight;
  if (L.rows_z) qp.linear.tail(nv - L.slack(1)).setConstant(rho);
  qp.hessian = 0.5 * (qp.hessian + qp.hessian.transpose()).eval();

  qp.eq_matrix = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(N) * n, nv);
  qp.eq_rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(N) * n);
  qp.eq_matrix.block(0, L.x(0), n, n).setIdentity();
  qp.eq_rhs.head(n) = x_init;
  for (int k = 0; k < N - 1; ++k) {
    const Eigen::Index row = static_cast<Eigen::Index>(k + 1) * n;
    qp.eq_matrix.block(row, L.x(k + 1), n, n).setIdentity();
    qp.eq_matrix.block(row, L.x(k), n, n) = -steps[k].A;
    qp.eq_matrix.block(row, L.u(k), n, m) = -steps[k].B;
    qp.eq_rhs.segment(row, n) = steps[k].d;
  }

  const Polytope& U = config.control_polytope;
  const Polytope& Z = config.performance_polytope;
  const Eigen::Index ru = U.matrix.rows(), rz = Z.matrix.rows();
  const bool trust = std::isfinite(trust_radius);
  const Eigen::Index rows =
      (N - 1) * ru + (N - 1) * 2 * rz + (trust ? static_cast<Eigen::Index>(N - 1) * 2 * n : 0);
  qp.ineq_matrix = Eigen::MatrixXd::Zero(rows, nv);
  qp.ineq_rhs = Eigen::VectorXd::Zero(rows);
  Eigen::Index row = 0;
  for (int k = 0; k < N - 1; ++k, row += ru) {
    if (!ru) break;
    qp.ineq_matrix.block(row, L.u(k), ru, m) = U.matrix;
    qp.ineq_rhs.segment(row, ru) = U.rhs;
  }
  for (int k = 1; k < N; ++k) {
    if (!rz) break;
    // M_z (H x + c) - s <= b_z,  -s <= 0
    qp.ineq_matrix.block(row, L.x(k), rz, n) = Z.matrix * steps[k].H;
    qp.ineq_matrix.block(row, L.slack(k), rz, rz) = -Eigen::MatrixXd::Identity(rz, rz);
    qp.ineq_rhs.segment(row, rz) = Z.rhs - Z.matrix * steps[k].c;
    row += rz;
    qp.ineq_matrix.block(row, L.slack(k), rz, rz) = -Eigen::MatrixXd::Identity(rz, rz);
    row += rz;
  }
  if (trust) {
    for (int k = 1; k < N; ++k) {
      qp.ineq_matrix.block(row, L.x(k), n, n).setIdentity();
      qp.ineq_rhs.segment(row, n) = steps[k].point + Eigen::VectorXd::Constant(n, trust_radius);
      row += n;
      qp.ineq_matrix.block(row, L.x(k), n, n) = -Eigen::MatrixXd::Identity(n, n);
      qp.ineq_rhs.segment(row, n) = -steps[k].point + Eigen::VectorXd::Constant(n, trust_radius);
      row += n;
    }
  }
  return qp;
}

/// Nonlinear OCP cost of a trajectory (states n x N, controls m x (N-1)),
/// including the l1 penalty on performance-polytope violations for k >= 2.
inline double ocp_cost(const SSMRModel& model, const Eigen::MatrixXd& states, const Eigen::MatrixXd& controls,
                       const Eigen::MatrixXd& reference, const OCPConfig& config) {
  const int N = config.horizon;
  const double rho = config.penalty();
  const Polytope& Z = config.performance_polytope;
  double cost = 0.0;
  for (int k = 0; k < N; ++k) {
    const Eigen::VectorXd z = model.performance(states.col(k));
    const Eigen::VectorXd r = z - reference.col(k);
    cost += r.dot(((k == N - 1) ? config.terminal_weight : config.stage_weight) * r);
    if (k >= 1 && !Z.unconstrained()) cost += rho * (Z.matrix * z - Z.rhs).cwiseMax(0.0).sum();
  }
  for (int k = 0; k < N - 1; ++k) cost += controls.col(k).dot(config.control_weight * controls.col(k));
  return cost;
}

struct ScpResult {
  Eigen::MatrixXd states;    // n x N
  Eigen::MatrixXd controls;  // m x (N-1)
  int iterations = 0;        // QP solves, including rejected trust-region trials
  bool converged = false;
  std::vector<double> cost_trace;  // true cost of the initial and every accepted iterate
  double qp_ms = 0.0;
  double slack_max = 0.0;  // largest performance-polytope violation along the plan, k >= 2
};

/// Sequential convex programming on the reduced model. `reference` holds
/// z-bar_1..z-bar_N; `warm_controls` (m x (N-1)) seeds the nominal rollout,
/// otherwise zero control is used.
inline ScpResult scp_solve(const SSMRModel& model, const Eigen::VectorXd& x_init, const Eigen::MatrixXd& reference,
                           const OCPConfig& config, const std::optional<Eigen::MatrixXd>& warm_controls = std::nullopt) {
  config.validate(model.input_dim(), model.output_dim());
  const int N = config.horizon;
  const int n = model.reduced_dim(), m = model.input_dim();
  const DiscreteDynamics rd(model, config.dt);
  const LocpLayout L = locp_layout(model, config);

  Eigen::MatrixXd u = Eigen::MatrixXd::Zero(m, N - 1);
  if (warm_controls) {
    require(warm_controls->rows() == m && warm_controls->cols() == N - 1, ErrorKind::DimensionMismatch,
            "warm start controls must be m x (N-1)");
    u = *warm_controls;
  }
  Eigen::MatrixXd x = rd.rollout(x_init, u);
  double cost = ocp_cost(model, x, u, reference, config);

  ScpResult res;
  res.cost_trace.push_back(cost);
  const bool linear = model.is_linear();
  double radius = config.trust_region.initial_radius;
  if (radius <= 0.0) radius = 0.1 * (model.reduced_amplitude > 0.0 ? model.reduced_amplitude : 1.0);
  const double max_radius = radius * config.trust_region.max_radius_factor;

  auto extract = [&](const Eigen::VectorXd& v, Eigen::MatrixXd& xs, Eigen::MatrixXd& us) {
    xs.resize(n, N);
    us.resize(m, N - 1);
    for (int k = 0; k < N; ++k) xs.col(k) = v.segment(L.x(k), n);
    for (int k = 0; k < N - 1; ++k) us.col(k) = v.segment(L.u(k), m);
  };

  while (res.iterations < config.scp_max_iters) {
    std::vector<LinearizedStep> steps;
    steps.reserve(N);
    for (int k = 0; k < N; ++k)
      steps.push_back(linearize(model, rd, x.col(k), k < N - 1 ? Eigen::VectorXd(u.col(k)) : Eigen::VectorXd::Zero(m)));
    const QPProblem qp =
        build_locp(model, steps, x_init, reference, config, linear ? std::numeric_limits<double>::infinity() : radius);
    const auto t0 = std::chrono::steady_clock::now();
    const QPSolution sol = solve_qp(qp);
    res.qp_ms += std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    ++res.iterations;
    require(sol.status != QPStatus::Infeasible, ErrorKind::Infeasible, "linearized OCP is infeasible");
    require(sol.status == QPStatus::Optimal, ErrorKind::NoProgress, "QP solver hit its iteration limit");

    Eigen::MatrixXd xq, uq;
    extract(sol.x, xq, uq);
    if (linear) {
      // The linearization is exact: the QP optimum is the OCP optimum.
      x = xq;
      u = uq;
      cost = ocp_cost(model, x, u, reference, config);
      res.cost_trace.push_back(cost);
      res.converged = true;
      break;
    }
    const double predicted = cost - sol.objective;
    if (predicted <= 1e-12 * (1.0 + std::abs(cost))) {
      res.converged = true;
      break;
    }
    const Eigen::MatrixXd x_new = rd.rollout(x_init, uq);
    const double new_cost = ocp_cost(model, x_new, uq, reference, config);
    const double ratio = (cost - new_cost) / predicted;
    if (ratio >= config.trust_region.accept_ratio) {
      const double change = (x_new - x).norm();
      x = x_new;
      u = uq;
      cost = new_cost;
      res.cost_trace.push_back(cost);
      if (ratio >= config.trust_region.grow_ratio) radius = std::min(radius * config.trust_region.grow, max_radius);
      if (change < config.scp_tolerance) {
        res.converged = true;
        break;
      }
    } else {
      radius *= config.trust_region.shrink;
      require(radius >= 1e-10, ErrorKind::NoProgress, "trust radius underflow without an accepted step");
    }
  }

  res.states = x;
  res.controls = u;
  const Polytope& Z = config.performance_polytope;
  for (int k = 1; k < N; ++k) res.slack_max = std::max(res.slack_max, Z.violation(model.performance(x.col(k))));
  return res;
}

}  // namespace ssmr
