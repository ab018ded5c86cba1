#include <cmath>
#include <complex>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "ssmr/plant.hpp"

namespace ssmr {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

MechanicalPlant single_dof(double m, double c, double k) {
  MechanicalPlant p;
  p.mass = MatrixXd::Constant(1, 1, m);
  p.damping = MatrixXd::Constant(1, 1, c);
  p.stiffness = MatrixXd::Constant(1, 1, k);
  p.input_map = MatrixXd::Constant(1, 1, 1.0);
  return p;
}

FirstOrderSystem scalar_decay() {
  FirstOrderSystem s;
  s.linear_part = MatrixXd::Constant(1, 1, -1.0);
  s.control_matrix = MatrixXd::Zero(1, 1);
  return s;
}

TEST(AssembleFirstOrder, SingleDofBlocks) {
  const FirstOrderSystem s = assemble_first_order(single_dof(1.0, 0.2, 1.0));
  MatrixXd a(2, 2);
  a << 0, 1, -1, -0.2;
  EXPECT_TRUE(s.linear_part.isApprox(a, 1e-15));
  EXPECT_TRUE(s.control_matrix.isApprox(Eigen::Vector2d(0, 1), 1e-15));
}

TEST(AssembleFirstOrder, NoCubicSpringsMeansZeroNonlinearity) {
  ChainPlantParams params;
  params.dof = 3;
  const FirstOrderSystem s = assemble_first_order(build_chain_plant(params));
  Rng rng(1);
  for (int i = 0; i < 5; ++i) EXPECT_TRUE(s.nonlinear(rng.normal_vector(6)).isZero(0.0));
}

TEST(AssembleFirstOrder, RayleighChainSpectrumMatchesModalFormula) {
  // Rayleigh damping decouples in the modes of M^-1 K: each mode with
  // stiffness eigenvalue w^2 has lambda^2 + (alpha + beta w^2) lambda + w^2 = 0.
  ChainPlantParams params;
  params.dof = 10;
  params.rayleigh_alpha = 2.5;
  params.rayleigh_beta = 0.01;
  const MechanicalPlant plant = build_chain_plant(params);
  const FirstOrderSystem s = assemble_first_order(plant);
  const VectorXd w2 = Eigen::SelfAdjointEigenSolver<MatrixXd>(plant.stiffness).eigenvalues();
  std::vector<std::complex<double>> expected;
  for (Eigen::Index i = 0; i < w2.size(); ++i) {
    const double b = params.rayleigh_alpha + params.rayleigh_beta * w2(i);
    const std::complex<double> disc = std::sqrt(std::complex<double>(b * b - 4.0 * w2(i), 0.0));
    expected.push_back((-b + disc) / 2.0);
    expected.push_back((-b - disc) / 2.0);
  }
  const Eigen::VectorXcd eig = s.spectrum();
  ASSERT_EQ(eig.size(), 20);
  for (Eigen::Index i = 0; i < eig.size(); ++i) {
    EXPECT_LT(eig(i).real(), 0.0);
    double best = 1e300;
    for (const auto& e : expected) best = std::min(best, std::abs(e - eig(i)));
    EXPECT_LT(best, 1e-9) << eig(i);
  }
}

TEST(AssembleFirstOrder, CubicForceHasZeroValueAndJacobianAtOrigin) {
  ChainPlantParams params;
  params.dof = 4;
  params.cubic = 3.0;
  const FirstOrderSystem s = assemble_first_order(build_chain_plant(params));
  const VectorXd zero = VectorXd::Zero(8);
  EXPECT_TRUE(s.nonlinear(zero).isZero(0.0));
  const MatrixXd jac = oracle::numeric_jacobian([&](const VectorXd& x) { return s.nonlinear(x); }, zero);
  EXPECT_LT(jac.norm(), 1e-8);
}

TEST(AssembleFirstOrder, Errors) {
  try {
    assemble_first_order(single_dof(0.0, 0.2, 1.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::SingularMassMatrix);
  }
  try {
    assemble_first_order(single_dof(1.0, 0.0, 1.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::UnstableLinearization);
  }
}

TEST(StepRk4, ScalarExponential) {
  const FirstOrderSystem s = scalar_decay();
  const VectorXd next = step_rk4(s, VectorXd::Constant(1, 1.0), VectorXd::Zero(1), 0.01);
  EXPECT_NEAR(next(0), 0.99004983, 1e-8);
  EXPECT_NEAR(next(0), std::exp(-0.01), 1e-11);
}

TEST(StepRk4, EquilibriumIsFixed) {
  const FirstOrderSystem s = assemble_first_order(single_dof(1.0, 0.2, 1.0));
  EXPECT_TRUE(step_rk4(s, VectorXd::Zero(2), VectorXd::Zero(1), 0.01).isZero(0.0));
}

TEST(StepRk4, FourthOrderConvergence) {
  ChainPlantParams params;
  params.dof = 2;
  params.stiffness = 50.0;
  params.cubic = 200.0;
  params.rayleigh_alpha = 0.5;
  params.rayleigh_beta = 0.002;
  const FirstOrderSystem s = assemble_first_order(build_chain_plant(params));
  VectorXd x0(4);
  x0 << 0.3, -0.2, 0.0, 1.0;
  const VectorXd u = VectorXd::Zero(1);
  auto integrate = [&](double dt, double horizon) {
    VectorXd x = x0;
    const int steps = static_cast<int>(std::lround(horizon / dt));
    for (int i = 0; i < steps; ++i) x = step_rk4(s, x, u, dt);
    return x;
  };
  const double dt = 0.002, horizon = 0.5;
  const VectorXd ref = integrate(dt / 100.0, horizon);
  const double e1 = (integrate(dt, horizon) - ref).norm();
  const double e2 = (integrate(dt / 2.0, horizon) - ref).norm();
  EXPECT_GT(e1 / e2, 13.0);
  EXPECT_LT(e1 / e2, 19.0);
}

TEST(StepRk4, NonFiniteStateIsReported) {
  FirstOrderSystem s = scalar_decay();
  s.nonlinear_part = [](const VectorXd& x) { return VectorXd(x.array().exp().exp()); };
  try {
    step_rk4(s, VectorXd::Constant(1, 50.0), VectorXd::Zero(1), 0.1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NonFiniteState);
  }
}

TEST(SimulateDecay, ZeroStateStaysZero) {
  const FirstOrderSystem s = assemble_first_order(single_dof(1.0, 0.2, 1.0));
  const Trajectory t = simulate_decay(s, VectorXd::Zero(2), 1.0, 0.001);
  EXPECT_EQ(t.samples(), 1001);
  EXPECT_TRUE(t.observations.isZero(0.0));
  EXPECT_DOUBLE_EQ(t.timestamps(0), 0.0);
  EXPECT_NO_THROW(t.validate());
}

TEST(SimulateDecay, SamplePeriodMustBeIntegerMultiple) {
  const FirstOrderSystem s = scalar_decay();
  EXPECT_THROW(simulate_decay(s, VectorXd::Ones(1), 1.0, 0.00015, 1e-4), Error);
  EXPECT_THROW(simulate_decay(s, VectorXd::Ones(1), 1.0, 0.00005, 1e-4), Error);
}

TEST(SimulateDecay, BenchmarkDecayRateMatchesEigenvalue) {
  const GroundTruthPlant g = build_benchmark_plant(2, 6, 7);
  const VectorXd x0 = Eigen::Vector2d(1e-3, 0.0);
  const Trajectory t = simulate_decay(g.system, g.on_manifold(x0), 2.0, 0.001, 5e-4);
  // Least-squares slope of log ||x(t)||.
  double st = 0, sl = 0, stt = 0, stl = 0;
  const double n = static_cast<double>(t.samples());
  for (Eigen::Index k = 0; k < t.samples(); ++k) {
    const double l = std::log(g.intrinsic(t.observations.col(k)).first.norm());
    st += t.timestamps(k);
    sl += l;
    stt += t.timestamps(k) * t.timestamps(k);
    stl += t.timestamps(k) * l;
  }
  const double slope = (n * stl - st * sl) / (n * stt - st * st);
  const double sigma = g.true_r0(0, 0);
  EXPECT_NEAR(slope, sigma, 0.02 * std::abs(sigma));
}

TEST(BenchmarkPlant, ManifoldIsInvariant) {
  const GroundTruthPlant g = build_benchmark_plant(2, 6, 7);
  VectorXd y = g.on_manifold(Eigen::Vector2d(0.4, -0.3));
  const VectorXd u = VectorXd::Zero(g.system.input_dim());
  double worst = 0.0;
  for (int k = 0; k < 2000; ++k) {
    y = step_rk4(g.system, y, u, 1e-3);
    worst = std::max(worst, g.manifold_residual(y));
  }
  EXPECT_LT(worst, 1e-8);
}

TEST(BenchmarkPlant, OffManifoldErrorContractsMonotonically) {
  const GroundTruthPlant g = build_benchmark_plant(2, 6, 7);
  Rng rng(11);
  const VectorXd x = Eigen::Vector2d(0.3, 0.2);
  VectorXd y = g.observe(x, g.lift(x) + 0.1 * rng.unit_vector(g.transverse_dim()));
  const VectorXd u = VectorXd::Zero(g.system.input_dim());
  double prev = g.manifold_residual(y);
  for (int k = 0; k < 500; ++k) {
    y = step_rk4(g.system, y, u, 1e-3);
    const double r = g.manifold_residual(y);
    EXPECT_LE(r, prev);
    prev = r;
  }
  EXPECT_LT(prev, 1e-4);
}

TEST(BenchmarkPlant, DegenerateLiftIsBlockLinear) {
  BenchmarkOptions opt;
  opt.lift_scale = 0.0;
  opt.performance_curvature = 0.0;
  opt.cubic_damping = 0.0;
  opt.frequency_shift = 0.0;
  const GroundTruthPlant g = build_benchmark_plant(2, 8, 3, opt);
  Rng rng(5);
  for (int i = 0; i < 5; ++i) EXPECT_LT(g.system.nonlinear(rng.normal_vector(8)).norm(), 1e-14);
}

TEST(BenchmarkPlant, SpectralGapAndErrors) {
  const GroundTruthPlant g = build_benchmark_plant(4, 20, 9);
  double slowest = 1e300;
  for (int i = 0; i < 4; ++i) slowest = std::min(slowest, std::abs(g.true_r0(i, i)));
  EXPECT_GE(g.fast_decay.minCoeff(), 5.0 * slowest);
  EXPECT_TRUE(g.rotation.transpose().isApprox(g.rotation.inverse(), 1e-12));

  BenchmarkOptions slow;
  slow.transverse_min = 1.0;
  slow.transverse_max = 2.0;
  try {
    build_benchmark_plant(2, 6, 7, slow);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::SpectralGapViolation);
  }
  EXPECT_THROW(build_benchmark_plant(3, 12, 7), Error);
  EXPECT_THROW(build_benchmark_plant(2, 5, 7), Error);
}

TEST(InitialConditions, CountAmplitudeAndDeterminism) {
  ChainPlantParams params;
  params.dof = 4;
  params.cubic = 1.0;
  params.actuated = {1, 3};
  const FirstOrderSystem s = assemble_first_order(build_chain_plant(params));
  const auto a = sample_decay_initial_conditions(s, 44, 0.5, 42);
  const auto b = sample_decay_initial_conditions(s, 44, 0.5, 42);
  ASSERT_EQ(a.size(), 44u);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i], b[i]);
  for (const auto& x : a) EXPECT_LT(s.rhs(x, VectorXd::Zero(2)).norm(), 2.0);
  for (const auto& x : sample_decay_initial_conditions(s, 5, 0.0, 42)) EXPECT_TRUE(x.isZero(0.0));
  EXPECT_THROW(sample_decay_initial_conditions(s, 0, 0.5, 42), Error);
}

TEST(SimulateControlled, ZeroControlsMatchDecay) {
  const GroundTruthPlant g = build_benchmark_plant(2, 6, 7);
  const VectorXd y0 = g.on_manifold(Eigen::Vector2d(0.2, 0.1));
  ControlSchedule sched;
  sched.hold_period = 0.01;
  sched.values = MatrixXd::Zero(2, 50);
  const Trajectory c = simulate_controlled(g.system, y0, sched, 0.001, 5e-4);
  const Trajectory d = simulate_decay(g.system, y0, 0.5, 0.001, 5e-4);
  ASSERT_EQ(c.samples(), d.samples());
  EXPECT_EQ(c.observations, d.observations);
  EXPECT_EQ(c.controls.rows(), 2);
}

TEST(SimulateControlled, ConstantInputReachesLinearSteadyState) {
  const FirstOrderSystem s = assemble_first_order(single_dof(1.0, 1.0, 4.0));
  // Slowest time constant 1 / 0.5 = 2 s; run for ten of them.
  ControlSchedule sched;
  sched.hold_period = 0.01;
  sched.values = MatrixXd::Constant(1, 2000, 0.8);
  const Trajectory t = simulate_controlled(s, VectorXd::Zero(2), sched, 0.01, 1e-3);
  const VectorXd expected = -s.linear_part.partialPivLu().solve(s.control_matrix * VectorXd::Constant(1, 0.8));
  const VectorXd last = t.observations.col(t.samples() - 1);
  EXPECT_LT((last - expected).norm(), 0.005 * expected.norm());
  EXPECT_EQ(t.controls(0, 5), 0.8);
}

TEST(MechanicalPlant, EnergyIsNonIncreasing) {
  ChainPlantParams params;
  params.dof = 3;
  params.cubic = 2.0;
  const MechanicalPlant plant = build_chain_plant(params);
  const FirstOrderSystem s = assemble_first_order(plant);
  VectorXd x(6);
  x << 0.5, -0.3, 0.2, 0.0, 0.4, -0.1;
  const VectorXd u = VectorXd::Zero(1);
  double prev = plant.energy(x.head(3), x.tail(3));
  for (int k = 0; k < 2000; ++k) {
    x = step_rk4(s, x, u, 1e-3);
    const double e = plant.energy(x.head(3), x.tail(3));
    EXPECT_LE(e, prev + 1e-6);
    prev = e;
  }
}

}  // namespace
}  // namespace ssmr
