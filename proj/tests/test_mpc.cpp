#include <gtest/gtest.h>

#include "oracles.hpp"
#include "ssmr/mpc.hpp"

namespace ssmr {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

SSMRModel make_model(bool nonlinear, std::uint64_t seed = 71) {
  Rng rng(seed);
  const MatrixXd q = rng.orthogonal_matrix(4);
  SSMGeometry g;
  g.tangent_basis = q.leftCols(2);
  g.linear_lift = g.tangent_basis;
  g.lift_basis = nonlinear_basis(2, nonlinear ? 2 : 1);
  g.nonlinear_lift = q.rightCols(2) * (0.5 * rng.normal_matrix(2, g.lift_basis.size()));
  g.equilibrium = VectorXd::Zero(4);
  g.order = nonlinear ? 2 : 1;
  ReducedDynamics d;
  d.linear_coeffs.resize(2, 2);
  d.linear_coeffs << -0.5, 8.0, -8.0, -0.5;
  d.basis = nonlinear_basis(2, nonlinear ? 3 : 1);
  d.nonlinear_coeffs = MatrixXd::Zero(2, d.basis.size());
  if (nonlinear) d.nonlinear_coeffs = rng.normal_matrix(2, d.basis.size());
  d.order = nonlinear ? 3 : 1;
  // Performance output: the first two observed coordinates.
  SSMRModel m = assemble_model(g, d, rng.normal_matrix(2, 2), MatrixXd::Identity(2, 4), VectorXd::Zero(2));
  m.reduced_amplitude = 0.5;
  return m;
}

OCPConfig make_config(int horizon) {
  OCPConfig c;
  c.stage_weight = MatrixXd::Identity(2, 2);
  c.terminal_weight = MatrixXd::Identity(2, 2);
  c.control_weight = 1e-3 * MatrixXd::Identity(2, 2);
  c.horizon = horizon;
  c.dt = 0.01;
  return c;
}

MatrixXd circle_reference(int horizon) {
  MatrixXd ref(2, horizon);
  for (int k = 0; k < horizon; ++k) ref.col(k) << 0.2 * std::cos(0.3 * k), 0.2 * std::sin(0.3 * k);
  return ref;
}

TEST(Polytope, BoxAndViolation) {
  const Polytope p = Polytope::box(Eigen::Vector2d(-1.0, 0.0), Eigen::Vector2d(1.0, 2.0));
  EXPECT_EQ(p.matrix.rows(), 4);
  EXPECT_DOUBLE_EQ(p.violation(Eigen::Vector2d(0.5, 1.0)), 0.0);
  EXPECT_DOUBLE_EQ(p.violation(Eigen::Vector2d(1.5, 1.0)), 0.5);
  EXPECT_DOUBLE_EQ(p.violation(Eigen::Vector2d(0.0, -0.25)), 0.25);
  EXPECT_DOUBLE_EQ(Polytope{}.violation(Eigen::Vector2d(9.0, 9.0)), 0.0);
}

TEST(OcpConfig, Validation) {
  const OCPConfig ok = make_config(5);
  EXPECT_NO_THROW(ok.validate(2, 2));
  OCPConfig c = ok;
  c.horizon = 1;
  EXPECT_THROW(c.validate(2, 2), Error);
  c = ok;
  c.rollout_horizon = 5;
  EXPECT_THROW(c.validate(2, 2), Error);
  c = ok;
  c.control_weight = MatrixXd::Zero(2, 2);
  EXPECT_THROW(c.validate(2, 2), Error);
  c = ok;
  c.stage_weight(0, 1) = 0.5;
  EXPECT_THROW(c.validate(2, 2), Error);
  c = ok;
  c.performance_polytope = Polytope::box(VectorXd::Zero(3), VectorXd::Ones(3));
  EXPECT_THROW(c.validate(2, 2), Error);
  EXPECT_THROW(ok.validate(3, 2), Error);
  EXPECT_GT(ok.penalty(), 9999.0);
}

TEST(DiscreteDynamics, Rk4JacobiansMatchFiniteDifferences) {
  const SSMRModel m = make_model(true);
  const DiscreteDynamics rd(m, 0.02);
  Rng rng(72);
  for (int trial = 0; trial < 10; ++trial) {
    const VectorXd x = 0.4 * rng.normal_vector(2), u = rng.normal_vector(2);
    const DiscreteStep s = rd.step_with_jacobians(x, u);
    EXPECT_TRUE(s.next.isApprox(rd.step(x, u), 1e-14));
    const MatrixXd fx = oracle::numeric_jacobian([&](const VectorXd& v) { return rd.step(v, u); }, x);
    const MatrixXd fu = oracle::numeric_jacobian([&](const VectorXd& v) { return rd.step(x, v); }, u);
    EXPECT_LT(oracle::relative_error(s.jac_x, fx), 1e-8);
    EXPECT_LT(oracle::relative_error(s.jac_u, fu), 1e-8);
  }
}

TEST(DiscreteDynamics, LinearModelMatchesRk4Matrices) {
  const SSMRModel m = make_model(false);
  const double h = 0.05;
  const auto [ad, bd] = oracle::rk4_linear(m.dynamics.linear_coeffs, m.control_matrix, h);
  const DiscreteStep s = DiscreteDynamics(m, h).step_with_jacobians(Eigen::Vector2d(0.3, -0.1), Eigen::Vector2d(1, 2));
  EXPECT_LT(oracle::relative_error(s.jac_x, ad), 1e-14);
  EXPECT_LT(oracle::relative_error(s.jac_u, bd), 1e-14);
  EXPECT_TRUE(s.next.isApprox(ad * Eigen::Vector2d(0.3, -0.1) + bd * Eigen::Vector2d(1, 2), 1e-14));
}

TEST(DiscreteDynamics, DiscreteModelStepMustMatch) {
  SSMRModel m = make_model(false);
  m.dynamics.time = TimeSemantics::Discrete;
  m.dynamics.dt = 0.01;
  EXPECT_NO_THROW(DiscreteDynamics(m, 0.01));
  try {
    DiscreteDynamics(m, 0.02);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InconsistentSampling);
  }
  const DiscreteStep s = DiscreteDynamics(m, 0.01).step_with_jacobians(Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 0));
  EXPECT_EQ(s.jac_u, m.control_matrix);
}

TEST(Linearize, ExactAtThePoint) {
  const SSMRModel m = make_model(true);
  const DiscreteDynamics rd(m, 0.01);
  const VectorXd x = Eigen::Vector2d(0.2, 0.1), u = Eigen::Vector2d(-1.0, 0.5);
  const LinearizedStep l = linearize(m, rd, x, u);
  EXPECT_TRUE((l.A * x + l.B * u + l.d).isApprox(rd.step(x, u), 1e-13));
  EXPECT_TRUE((l.H * x + l.c).isApprox(m.performance(x), 1e-13));
  // First order away from the point.
  const VectorXd dx = Eigen::Vector2d(1e-4, -2e-4);
  EXPECT_LT((l.A * (x + dx) + l.B * u + l.d - rd.step(x + dx, u)).norm(), 1e-6);
  EXPECT_THROW(linearize(m, rd, VectorXd::Zero(3), u), Error);
}

TEST(BuildLocp, LayoutAndSizes) {
  const SSMRModel m = make_model(true);
  OCPConfig c = make_config(5);
  c.control_polytope = Polytope::box(VectorXd::Constant(2, -1.0), VectorXd::Constant(2, 1.0));
  c.performance_polytope = Polytope::box(VectorXd::Constant(2, -0.1), VectorXd::Constant(2, 0.1));
  const LocpLayout L = locp_layout(m, c);
  EXPECT_EQ(L.x(4), 8);
  EXPECT_EQ(L.u(0), 10);
  EXPECT_EQ(L.slack(1), 18);
  EXPECT_EQ(L.size(), 10 + 8 + 16);

  const DiscreteDynamics rd(m, c.dt);
  std::vector<LinearizedStep> steps;
  for (int k = 0; k < 5; ++k) steps.push_back(linearize(m, rd, VectorXd::Zero(2), VectorXd::Zero(2)));
  const QPProblem qp = build_locp(m, steps, Eigen::Vector2d(0.1, 0.0), circle_reference(5), c, 0.3);
  EXPECT_EQ(qp.variables(), L.size());
  EXPECT_EQ(qp.equalities(), 10);
  EXPECT_EQ(qp.inequalities(), 4 * 4 + 4 * 2 * 4 + 4 * 2 * 2);
  EXPECT_TRUE(qp.hessian.isApprox(qp.hessian.transpose()));
  const QPProblem no_trust =
      build_locp(m, steps, Eigen::Vector2d(0.1, 0.0), circle_reference(5), c, std::numeric_limits<double>::infinity());
  EXPECT_EQ(no_trust.inequalities(), 4 * 4 + 4 * 2 * 4);
  EXPECT_THROW(build_locp(m, steps, Eigen::Vector2d(0.1, 0.0), circle_reference(4), c, 0.3), Error);
}

TEST(BuildLocp, EmptyControlPolytopeIsInfeasible) {
  const SSMRModel m = make_model(false);
  OCPConfig c = make_config(3);
  c.control_polytope = Polytope::box(VectorXd::Constant(2, 1.0), VectorXd::Constant(2, -1.0));
  try {
    scp_solve(m, Eigen::Vector2d(0.1, 0.0), circle_reference(3), c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InfeasibleHardConstraints);
  }
}

TEST(ScpSolve, LinearModelTakesOneQp) {
  const SSMRModel m = make_model(false);
  const OCPConfig c = make_config(6);
  const ScpResult r = scp_solve(m, Eigen::Vector2d(0.1, 0.0), circle_reference(6), c);
  EXPECT_EQ(r.iterations, 1);
  EXPECT_TRUE(r.converged);
  ASSERT_EQ(r.cost_trace.size(), 2u);
  EXPECT_LE(r.cost_trace[1], r.cost_trace[0]);
  // The plan is consistent with the model rollout.
  const MatrixXd roll = DiscreteDynamics(m, c.dt).rollout(Eigen::Vector2d(0.1, 0.0), r.controls);
  EXPECT_LT((roll - r.states).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(ScpSolve, NonlinearCostTraceIsMonotone) {
  for (std::uint64_t seed = 80; seed < 85; ++seed) {
    const SSMRModel m = make_model(true, seed);
    OCPConfig c = make_config(5);
    c.control_polytope = Polytope::box(VectorXd::Constant(2, -5.0), VectorXd::Constant(2, 5.0));
    const ScpResult r = scp_solve(m, Eigen::Vector2d(0.2, -0.1), circle_reference(5), c);
    ASSERT_GE(r.cost_trace.size(), 1u);
    for (std::size_t i = 1; i < r.cost_trace.size(); ++i) EXPECT_LE(r.cost_trace[i], r.cost_trace[i - 1] + 1e-12);
    EXPECT_LE(r.controls.cwiseAbs().maxCoeff(), 5.0 + 1e-9);
    EXPECT_LE(r.iterations, c.scp_max_iters);
  }
}

TEST(ScpSolve, WarmStartShapeIsChecked) {
  const SSMRModel m = make_model(false);
  EXPECT_THROW(scp_solve(m, Eigen::Vector2d(0.1, 0.0), circle_reference(4), make_config(4), MatrixXd::Zero(2, 4)),
               Error);
}

}  // namespace
}  // namespace ssmr
