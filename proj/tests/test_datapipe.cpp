#include <cmath>
#include <filesystem>
#include <numbers>

#include <gtest/gtest.h>

#include "ssmr/datapipe.hpp"

namespace ssmr {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

Trajectory ramp(Eigen::Index count, double h, int rows = 1) {
  Trajectory t;
  t.timestamps = VectorXd::LinSpaced(count, 0.0, h * static_cast<double>(count - 1));
  t.observations.resize(rows, count);
  for (int r = 0; r < rows; ++r) t.observations.row(r) = (r + 1.0) * t.timestamps.transpose();
  return t;
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorKind::InvalidArgument;
}

TEST(EmbeddingDimension, TakensBound) {
  const EmbeddingVerdict scalar = check_embedding_dimension(1, 2);
  EXPECT_FALSE(scalar.admissible);
  EXPECT_EQ(scalar.min_delays, 4);
  const EmbeddingVerdict wide = check_embedding_dimension(5, 2);
  EXPECT_TRUE(wide.admissible);
  EXPECT_EQ(wide.min_delays, 0);
  EXPECT_EQ(check_embedding_dimension(2, 3, 2).min_delays, 3);
  EXPECT_EQ(kind_of([] { check_embedding_dimension(0, 2); }), ErrorKind::InvalidArgument);

  EmbeddingSpec spec{.delays = 4, .raw_dim = 1, .stride = 2};
  EXPECT_EQ(spec.embedded_dim(), 5);
  EXPECT_EQ(spec.lost_samples(), 8);
  EXPECT_TRUE(spec.admissible_for(2));
  EXPECT_FALSE(spec.admissible_for(3));
}

TEST(TruncateTransient, DropsLeadingSamples) {
  Trajectory t = ramp(10, 0.1);
  t.controls = MatrixXd::Ones(1, 10);
  const Trajectory out = truncate_transient(t, 3);
  ASSERT_EQ(out.samples(), 7);
  EXPECT_DOUBLE_EQ(out.timestamps(0), t.timestamps(3));
  EXPECT_EQ(out.observations, t.observations.rightCols(7));
  EXPECT_EQ(out.controls.cols(), 7);
  EXPECT_EQ(truncate_transient(t, 0).samples(), 10);
  EXPECT_EQ(kind_of([&] { truncate_transient(t, 10); }), ErrorKind::EmptyResult);
  EXPECT_EQ(kind_of([&] { truncate_transient(t, -1); }), ErrorKind::InvalidArgument);
}

TEST(Embed, StacksDelayedSamplesCurrentFirst) {
  Trajectory t;
  t.timestamps = VectorXd::LinSpaced(6, 0.0, 0.5);
  t.observations.resize(1, 6);
  t.observations << 0, 1, 2, 3, 4, 5;
  const Trajectory e = embed(t, {.delays = 2, .raw_dim = 1, .stride = 1});
  ASSERT_EQ(e.samples(), 4);
  MatrixXd expected(3, 4);
  expected << 2, 3, 4, 5,
              1, 2, 3, 4,
              0, 1, 2, 3;
  EXPECT_EQ(e.observations, expected);
  EXPECT_DOUBLE_EQ(e.timestamps(0), 0.2);

  const Trajectory strided = embed(t, {.delays = 1, .raw_dim = 1, .stride = 2});
  ASSERT_EQ(strided.samples(), 4);
  EXPECT_EQ(strided.observations.col(0), Eigen::Vector2d(2, 0));
}

TEST(Embed, ZeroDelaysIsIdentityAndErrors) {
  const Trajectory t = ramp(5, 0.1, 2);
  EXPECT_EQ(embed(t, {.delays = 0, .raw_dim = 2}).observations, t.observations);
  EXPECT_EQ(kind_of([&] { embed(t, {.delays = 1, .raw_dim = 3}); }), ErrorKind::DimensionMismatch);
  EXPECT_EQ(kind_of([&] { embed(t, {.delays = 5, .raw_dim = 2}); }), ErrorKind::TooShortTrajectory);
}

TEST(FiniteDifference, ExactForQuadratics) {
  const double h = 0.05;
  const VectorXd t = VectorXd::LinSpaced(9, 0.0, 8 * h);
  MatrixXd y(2, 9), dy(2, 9);
  for (Eigen::Index k = 0; k < 9; ++k) {
    y.col(k) << 3.0 * t(k) * t(k) - t(k) + 1.0, -2.0 * t(k);
    dy.col(k) << 6.0 * t(k) - 1.0, -2.0;
  }
  EXPECT_LT((finite_difference(y, h) - dy).cwiseAbs().maxCoeff(), 1e-11);
  EXPECT_EQ(kind_of([&] { finite_difference(y.leftCols(2), h); }), ErrorKind::TooShortTrajectory);
}

TEST(FiniteDifference, SecondOrderOnSmoothSignal) {
  auto err = [](double h) {
    const Eigen::Index n = static_cast<Eigen::Index>(std::lround(1.0 / h)) + 1;
    MatrixXd y(1, n);
    for (Eigen::Index k = 0; k < n; ++k) y(0, k) = std::sin(static_cast<double>(k) * h);
    double worst = 0.0;
    const MatrixXd d = finite_difference(y, h);
    for (Eigen::Index k = 0; k < n; ++k) worst = std::max(worst, std::abs(d(0, k) - std::cos(static_cast<double>(k) * h)));
    return worst;
  };
  const double ratio = err(0.02) / err(0.01);
  EXPECT_GT(ratio, 3.5);
  EXPECT_LT(ratio, 4.5);
}

TEST(AssembleRegressionData, ShiftsEquilibriumAndStacksSegments) {
  std::vector<Trajectory> trajs = {ramp(6, 0.1, 2), ramp(4, 0.1, 2)};
  const VectorXd eq = Eigen::Vector2d(1.0, -1.0);
  const RegressionData d = assemble_regression_data(trajs, {.delays = 0, .raw_dim = 2}, eq);
  ASSERT_EQ(d.columns(), 10);
  EXPECT_EQ(d.segments, (std::vector<Eigen::Index>{6, 4}));
  EXPECT_DOUBLE_EQ(d.sample_period, 0.1);
  EXPECT_TRUE(d.observations.col(6).isApprox(Eigen::Vector2d(-1.0, 1.0)));
  for (Eigen::Index k = 0; k < d.columns(); ++k) EXPECT_TRUE(d.target.col(k).isApprox(Eigen::Vector2d(1.0, 2.0), 1e-12));
  EXPECT_EQ(d.controls.rows(), 0);
}

TEST(AssembleRegressionData, ShiftPairsStayInsideTrajectories) {
  std::vector<Trajectory> trajs = {ramp(6, 0.1), ramp(4, 0.1)};
  const RegressionData d =
      assemble_regression_data(trajs, {.delays = 0, .raw_dim = 1}, VectorXd::Zero(1), {.target = TargetMode::Shift});
  EXPECT_EQ(d.segments, (std::vector<Eigen::Index>{5, 3}));
  for (Eigen::Index k = 0; k < d.columns(); ++k) EXPECT_NEAR(d.target(0, k) - d.observations(0, k), 0.1, 1e-12);
}

TEST(AssembleRegressionData, DropsStencilsAcrossInputSwitches) {
  Trajectory t = ramp(12, 0.01);
  t.controls.resize(1, 12);
  for (Eigen::Index k = 0; k < 12; ++k) t.controls(0, k) = static_cast<double>(k / 4);
  t.kind = TrajectoryKind::Controlled;
  const EmbeddingSpec spec{.delays = 0, .raw_dim = 1};
  const RegressionData all = assemble_regression_data({t}, spec, VectorXd::Zero(1));
  EXPECT_EQ(all.columns(), 12);
  const RegressionData clean = assemble_regression_data({t}, spec, VectorXd::Zero(1), {.drop_control_switches = true});
  // Samples 4 and 8 start a new hold; their central stencil reaches back into the previous one.
  EXPECT_EQ(clean.columns(), 10);
  for (Eigen::Index k = 0; k < clean.columns(); ++k) {
    const auto sample = static_cast<Eigen::Index>(std::lround(clean.observations(0, k) / 0.01));
    EXPECT_NE(sample, 4);
    EXPECT_NE(sample, 8);
    EXPECT_DOUBLE_EQ(clean.controls(0, k), static_cast<double>(sample / 4));
  }
}

TEST(AssembleRegressionData, RejectsInconsistentInputs) {
  const EmbeddingSpec spec{.delays = 0, .raw_dim = 1};
  EXPECT_EQ(kind_of([&] { assemble_regression_data({}, spec, VectorXd::Zero(1)); }), ErrorKind::InvalidArgument);
  EXPECT_EQ(kind_of([&] { assemble_regression_data({ramp(5, 0.1)}, spec, VectorXd::Zero(2)); }),
            ErrorKind::InconsistentDims);
  EXPECT_EQ(kind_of([&] { assemble_regression_data({ramp(5, 0.1), ramp(5, 0.2)}, spec, VectorXd::Zero(1)); }),
            ErrorKind::InconsistentSampling);
  Trajectory bad = ramp(5, 0.1);
  bad.timestamps(3) += 0.01;
  EXPECT_EQ(kind_of([&] { assemble_regression_data({bad}, spec, VectorXd::Zero(1)); }),
            ErrorKind::InconsistentSampling);
}

TEST(EstimateEquilibrium, MeansTailOfLongestDecay) {
  Trajectory a = ramp(5, 0.1);
  Trajectory b;
  b.timestamps = VectorXd::LinSpaced(100, 0.0, 9.9);
  b.observations = MatrixXd::Constant(1, 100, 2.0);
  b.observations.leftCols(50).setConstant(7.0);
  EXPECT_DOUBLE_EQ(estimate_equilibrium({a, b})(0), 2.0);
  EXPECT_DOUBLE_EQ(estimate_equilibrium({a}, 2)(0), (0.3 + 0.4) / 2.0);
}

TEST(DefaultTruncation, ThreePeriodsOfFastestOscillation) {
  MatrixXd r0 = MatrixXd::Zero(4, 4);
  r0.topLeftCorner(2, 2) << -0.5, 2.0 * std::numbers::pi, -2.0 * std::numbers::pi, -0.5;
  r0.bottomRightCorner(2, 2) << -0.5, 4.0 * std::numbers::pi, -4.0 * std::numbers::pi, -0.5;
  // Fastest frequency is 2 Hz: three periods last 1.5 s.
  EXPECT_EQ(default_truncation_samples(r0, 0.01), 150);
  const MatrixXd real = Eigen::Vector2d(-2.0, -0.5).asDiagonal();
  EXPECT_EQ(default_truncation_samples(real, 0.01), 150);
}

TEST(SplitHoldout, SuffixIsHeldOut) {
  const auto [train, test] = split_holdout(10, 0.2);
  EXPECT_EQ(train, (std::vector<int>{0, 1, 2, 3, 4, 5, 6, 7}));
  EXPECT_EQ(test, (std::vector<int>{8, 9}));
  EXPECT_EQ(split_holdout(1, 0.5).first.size(), 1u);
  EXPECT_TRUE(split_holdout(4, 0.0).second.empty());
  EXPECT_EQ(split_holdout(4, 1.0).first.size(), 1u);
}

TEST(TrajectoryCsv, RoundTrip) {
  Trajectory t = ramp(7, 0.25, 3);
  t.controls = MatrixXd::Random(2, 7);
  t.kind = TrajectoryKind::Controlled;
  const auto path = std::filesystem::temp_directory_path() / "ssmr_test_traj.csv";
  write_trajectory_csv(t, path.string());
  const Trajectory back = read_trajectory_csv(path.string(), TrajectoryKind::Controlled);
  std::filesystem::remove(path);
  EXPECT_TRUE(back.observations.isApprox(t.observations, 1e-14));
  EXPECT_TRUE(back.controls.isApprox(t.controls, 1e-14));
  EXPECT_TRUE(back.timestamps.isApprox(t.timestamps, 1e-14));
  EXPECT_EQ(back.kind, TrajectoryKind::Controlled);
  EXPECT_EQ(kind_of([] { read_trajectory_csv("/nonexistent/traj.csv", TrajectoryKind::Decay); }), ErrorKind::IoError);
}

}  // namespace
}  // namespace ssmr
