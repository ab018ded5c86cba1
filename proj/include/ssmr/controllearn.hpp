#pragma once

// Control matrix regression and the assembled controlled reduced model
// x' = R0 x + R x^{2:n_r} + B_r u with performance output z = C w(x) + z_eq.

#include <cmath>
#include <cstdint>
#include <string>

#include <Eigen/Dense>

#include "ssmr/datapipe.hpp"
#include "ssmr/error.hpp"
#include "ssmr/plant.hpp"
#include "ssmr/random.hpp"
#include "ssmr/regression.hpp"
#include "ssmr/ssmlearn.hpp"

namespace ssmr {

/// Piecewise-constant excitation, each hold drawn uniformly in [lower, upper]
/// per input channel.
inline ControlSchedule random_control_sequence(int inputs, double duration, double hold_period,
                                               const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                                               std::uint64_t seed) {
  require(inputs >= 1, ErrorKind::InvalidArgument, "need at least one input");
  require(hold_period > 0.0 && duration >= hold_period, ErrorKind::InvalidArgument,
          "duration must cover at least one hold period");
  require(lower.size() == inputs && upper.size() == inputs, ErrorKind::DimensionMismatch, "bounds size differs");
  require(lower.allFinite() && upper.allFinite() && (lower.array() <= upper.array()).all(),
          ErrorKind::InvalidArgument, "bounds must be finite with lower <= upper");
  Rng rng(seed);
  ControlSchedule s;
  s.hold_period = hold_period;
  const auto holds = static_cast<Eigen::Index>(std::floor(duration / hold_period + 1e-9));
  s.values.resize(inputs, holds);
  for (Eigen::Index k = 0; k < holds; ++k)
    for (int i = 0; i < inputs; ++i) s.values(i, k) = rng.uniform(lower(i), upper(i));
  return s;
}

inline ControlSchedule random_control_sequence(int inputs, double duration, double hold_period, double lower,
                                               double upper, std::uint64_t seed) {
  return random_control_sequence(inputs, duration, hold_period, Eigen::VectorXd::Constant(inputs, lower),
                                 Eigen::VectorXd::Constant(inputs, upper), seed);
}

struct ControlFit {
  Eigen::MatrixXd control_matrix;
  double residual_before = 0.0;  // ||Xdot - r_aut(X)||_F
  double residual_after = 0.0;   // ||Xdot - r_aut(X) - B_r U||_F
  double excitation_condition = 0.0;
};

/// B_r = argmin ||Xdot_u - r_aut(X_u) - B_r U||_F. For discrete dynamics the
/// target is the next reduced state instead of the derivative.
inline ControlFit fit_control_matrix(const Eigen::Ref<const Eigen::MatrixXd>& x, const Eigen::Ref<const Eigen::MatrixXd>& target,
                                     const Eigen::Ref<const Eigen::MatrixXd>& controls, const ReducedDynamics& dynamics,
                                     double max_condition = 1e10) {
  require(x.rows() == dynamics.dim() && target.rows() == x.rows(), ErrorKind::DimensionMismatch,
          "reduced data dimension differs from dynamics");
  require(x.cols() == target.cols() && x.cols() == controls.cols(), ErrorKind::DimensionMismatch,
          "controlled data columns not aligned");
  ControlFit fit;
  const Eigen::MatrixXd uut = controls * controls.transpose();
  const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(uut).eigenvalues();
  fit.excitation_condition = ev(0) > 0.0 ? ev(ev.size() - 1) / ev(0) : std::numeric_limits<double>::infinity();
  require(fit.excitation_condition <= max_condition, ErrorKind::RankDeficientExcitation,
          "U U^T condition number " + format_number(fit.excitation_condition));
  const Eigen::MatrixXd residual = target - dynamics.evaluate_columns(x);
  fit.control_matrix = uut.ldlt().solve(controls * residual.transpose()).transpose();
  fit.residual_before = residual.norm();
  fit.residual_after = (residual - fit.control_matrix * controls).norm();
  return fit;
}

struct SSMRModel {
  SSMGeometry geometry;
  ReducedDynamics dynamics;
  Eigen::MatrixXd control_matrix;         // B_r, n x m
  Eigen::MatrixXd performance_selector;   // C, o x p
  Eigen::VectorXd performance_equilibrium;  // z_eq
  EmbeddingSpec embedding;
  double reduced_amplitude = 1.0;  // max |x_i| over the training data

  int reduced_dim() const { return dynamics.dim(); }
  int obs_dim() const { return geometry.obs_dim(); }
  int input_dim() const { return static_cast<int>(control_matrix.cols()); }
  int output_dim() const { return static_cast<int>(performance_selector.rows()); }
  bool continuous() const { return dynamics.time == TimeSemantics::Continuous; }
  /// Affine dynamics and lift: the optimal control problem is then a QP.
  bool is_linear() const { return dynamics.basis.empty() && geometry.lift_basis.empty(); }

  /// r(x, u) = r_aut(x) + B_r u (the next state for discrete models).
  Eigen::VectorXd rhs(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const {
    require(u.size() == input_dim(), ErrorKind::DimensionMismatch, "control size differs from model");
    Eigen::VectorXd out = dynamics.evaluate(x);
    out.noalias() += control_matrix * u;
    return out;
  }

  Eigen::MatrixXd rhs_jacobian_x(const Eigen::VectorXd& x) const { return dynamics.jacobian(x); }
  const Eigen::MatrixXd& rhs_jacobian_u() const { return control_matrix; }

  /// z = C w(x) + z_eq, where w(x) is the equilibrium-free lift.
  Eigen::VectorXd performance(const Eigen::VectorXd& x) const {
    return performance_selector * (geometry.reconstruct(x) - geometry.equilibrium) + performance_equilibrium;
  }

  Eigen::MatrixXd performance_jacobian(const Eigen::VectorXd& x) const {
    return performance_selector * geometry.lift_jacobian(x);
  }

  Eigen::VectorXd reduce(const Eigen::VectorXd& y) const { return geometry.reduce(y); }
};

inline SSMRModel assemble_model(const SSMGeometry& geometry, const ReducedDynamics& dynamics,
                                const Eigen::MatrixXd& control_matrix, const Eigen::MatrixXd& performance_selector,
                                const Eigen::VectorXd& performance_equilibrium) {
  const int n = dynamics.dim();
  require(geometry.reduced_dim() == n, ErrorKind::DimensionMismatch, "geometry and dynamics reduced dims differ");
  require(control_matrix.rows() == n, ErrorKind::DimensionMismatch, "B_r must have n rows");
  require(performance_selector.cols() == geometry.obs_dim(), ErrorKind::DimensionMismatch, "C must have p columns");
  require(performance_equilibrium.size() == performance_selector.rows(), ErrorKind::DimensionMismatch,
          "z_eq size differs from C rows");
  SSMRModel m;
  m.geometry = geometry;
  m.dynamics = dynamics;
  m.control_matrix = control_matrix;
  m.performance_selector = performance_selector;
  m.performance_equilibrium = performance_equilibrium;
  m.embedding = {0, geometry.obs_dim(), 1};
  return m;
}

}  // namespace ssmr
