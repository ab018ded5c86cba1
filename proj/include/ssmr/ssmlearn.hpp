#pragma once

// Learning the manifold geometry (projection v(y) = V^T (y - y_eq) and
// polynomial lift w(x) = W0 x + W x^{2:n_w} + y_eq) and the autonomous
// reduced dynamics r_aut(x) = R0 x + R x^{2:n_r}, plus invariance
// diagnostics on held-out data.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "ssmr/datapipe.hpp"
#include "ssmr/error.hpp"
#include "ssmr/polyfeatures.hpp"
#include "ssmr/regression.hpp"
#include "ssmr/trajectory.hpp"

namespace ssmr {

struct PcaResult {
  Eigen::MatrixXd basis;             // p x n, orthonormal columns
  Eigen::VectorXd variance_ratios;   // squared singular values normalized to sum 1
  Eigen::VectorXd singular_values;

  double captured(int n) const { return variance_ratios.head(n).sum(); }
};

/// Leading left singular vectors of the (already equilibrium-shifted, not
/// mean-centred) data matrix. Each column's largest-magnitude entry is made
/// positive.
inline PcaResult fit_pca(const Eigen::Ref<const Eigen::MatrixXd>& data, int n) {
  require(n >= 1 && n <= data.rows(), ErrorKind::InvalidArgument, "target dimension must lie in [1, p]");
  require(data.cols() >= data.rows(), ErrorKind::InvalidArgument, "PCA needs at least p samples");
  // Left singular vectors of Y are the right singular vectors of R in Y^T = QR.
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(data.transpose());
  const Eigen::Index p = data.rows();
  const Eigen::MatrixXd r = qr.matrixQR().topRows(p).triangularView<Eigen::Upper>();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(r, Eigen::ComputeFullV);
  PcaResult out;
  out.singular_values = svd.singularValues();
  require(out.singular_values(0) > 0.0 && out.singular_values(n - 1) / out.singular_values(0) >= 1e-12,
          ErrorKind::RankDeficientData, "sigma_n / sigma_1 below 1e-12");
  const Eigen::VectorXd sq = out.singular_values.array().square();
  out.variance_ratios = sq / sq.sum();
  out.basis = svd.matrixV().leftCols(n);
  for (int j = 0; j < n; ++j) {
    Eigen::Index imax = 0;
    out.basis.col(j).cwiseAbs().maxCoeff(&imax);
    if (out.basis(imax, j) < 0.0) out.basis.col(j) *= -1.0;
  }
  return out;
}

/// Largest principal angle (radians) between the column spans of two
/// orthonormal bases.
inline double principal_angle(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const Eigen::VectorXd s = Eigen::JacobiSVD<Eigen::MatrixXd>(a.transpose() * b).singularValues();
  return std::acos(std::clamp(s.minCoeff(), -1.0, 1.0));
}

struct SSMGeometry {
  Eigen::MatrixXd tangent_basis;  // V, p x n
  Eigen::MatrixXd linear_lift;    // W0, p x n
  Eigen::MatrixXd nonlinear_lift; // W, p x |lift_basis|
  MultiIndexBasis lift_basis;
  Eigen::VectorXd equilibrium;    // y_eq
  int order = 1;                  // n_w

  int reduced_dim() const { return static_cast<int>(tangent_basis.cols()); }
  int obs_dim() const { return static_cast<int>(tangent_basis.rows()); }

  Eigen::VectorXd reduce(const Eigen::VectorXd& y) const {
    require(y.size() == obs_dim(), ErrorKind::DimensionMismatch, "observation size differs from geometry");
    return tangent_basis.transpose() * (y - equilibrium);
  }

  Eigen::MatrixXd reduce_columns(const Eigen::MatrixXd& ys) const {
    require(ys.rows() == obs_dim(), ErrorKind::DimensionMismatch, "observation size differs from geometry");
    return tangent_basis.transpose() * (ys.colwise() - equilibrium);
  }

  Eigen::VectorXd reconstruct(const Eigen::VectorXd& x) const {
    require(x.size() == reduced_dim(), ErrorKind::DimensionMismatch, "reduced state size differs from geometry");
    Eigen::VectorXd y = equilibrium + linear_lift * x;
    if (!lift_basis.empty()) y.noalias() += nonlinear_lift * lift_basis.evaluate(x);
    return y;
  }

  /// dw/dx, p x n.
  Eigen::MatrixXd lift_jacobian(const Eigen::VectorXd& x) const {
    require(x.size() == reduced_dim(), ErrorKind::DimensionMismatch, "reduced state size differs from geometry");
    Eigen::MatrixXd jac = linear_lift;
    if (!lift_basis.empty()) jac.noalias() += nonlinear_lift * lift_basis.jacobian(x);
    return jac;
  }

  double orthonormality_error() const {
    const auto n = tangent_basis.cols();
    return (tangent_basis.transpose() * tangent_basis - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff();
  }

  /// ||V^T W0 - I|| and ||V^T W|| (Frobenius).
  std::pair<double, double> invertibility_residuals() const {
    const auto n = tangent_basis.cols();
    const double r0 = (tangent_basis.transpose() * linear_lift - Eigen::MatrixXd::Identity(n, n)).norm();
    const double r1 = nonlinear_lift.size() ? (tangent_basis.transpose() * nonlinear_lift).norm() : 0.0;
    return {r0, r1};
  }

  bool invertibility_flagged(double tol = 1e-6) const {
    const auto [a, b] = invertibility_residuals();
    return a > tol || b > tol;
  }
};

struct GeometryOptions {
  RegressionOptions regression;
  /// Post-hoc projection enforcing V^T W0 = I and V^T W = 0.
  bool enforce_invertibility = false;
};

/// Fits (W0, W) minimizing ||Y - W0 X - W X^{2:n_w}|| with X = V^T Y. Y is
/// the equilibrium-shifted data.
inline SSMGeometry fit_geometry(const Eigen::Ref<const Eigen::MatrixXd>& shifted_data,
                                const Eigen::MatrixXd& tangent_basis, int order,
                                const Eigen::VectorXd& equilibrium, const GeometryOptions& opt = {}) {
  require(order >= 1, ErrorKind::InvalidDegreeRange, "lift order must be >= 1");
  require(tangent_basis.rows() == shifted_data.rows() && equilibrium.size() == shifted_data.rows(),
          ErrorKind::DimensionMismatch, "geometry inputs disagree in observation size");
  const int n = static_cast<int>(tangent_basis.cols());
  SSMGeometry g;
  g.tangent_basis = tangent_basis;
  g.equilibrium = equilibrium;
  g.order = order;
  g.lift_basis = nonlinear_basis(n, order);
  const Eigen::MatrixXd x = tangent_basis.transpose() * shifted_data;
  const LeastSquaresFit fit = least_squares(linear_and_nonlinear_features(x, g.lift_basis), shifted_data, opt.regression);
  g.linear_lift = fit.coefficients.leftCols(n);
  g.nonlinear_lift = fit.coefficients.rightCols(g.lift_basis.size());
  if (opt.enforce_invertibility) {
    const Eigen::MatrixXd& v = tangent_basis;
    g.linear_lift += v * (Eigen::MatrixXd::Identity(n, n) - v.transpose() * g.linear_lift);
    if (g.nonlinear_lift.size()) g.nonlinear_lift -= v * (v.transpose() * g.nonlinear_lift);
  }
  return g;
}

enum class TimeSemantics { Continuous, Discrete };

struct ReducedDynamics {
  Eigen::MatrixXd linear_coeffs;     // R0
  Eigen::MatrixXd nonlinear_coeffs;  // R
  MultiIndexBasis basis;
  TimeSemantics time = TimeSemantics::Continuous;
  double dt = 0.0;  // discrete models only
  int order = 1;    // n_r

  int dim() const { return static_cast<int>(linear_coeffs.rows()); }

  Eigen::VectorXd evaluate(const Eigen::VectorXd& x) const {
    require(x.size() == dim(), ErrorKind::DimensionMismatch, "reduced state size differs from dynamics");
    Eigen::VectorXd out = linear_coeffs * x;
    if (!basis.empty()) out.noalias() += nonlinear_coeffs * basis.evaluate(x);
    return out;
  }

  Eigen::MatrixXd evaluate_columns(const Eigen::MatrixXd& xs) const {
    Eigen::MatrixXd out = linear_coeffs * xs;
    if (!basis.empty()) out.noalias() += nonlinear_coeffs * basis.evaluate_columns(xs);
    return out;
  }

  Eigen::MatrixXd jacobian(const Eigen::VectorXd& x) const {
    require(x.size() == dim(), ErrorKind::DimensionMismatch, "reduced state size differs from dynamics");
    Eigen::MatrixXd jac = linear_coeffs;
    if (!basis.empty()) jac.noalias() += nonlinear_coeffs * basis.jacobian(x);
    return jac;
  }

  /// Continuous-time models only: all eigenvalues of R0 in the open left
  /// half-plane. Learned from decaying data this should hold; it is reported,
  /// not enforced.
  bool linear_part_stable() const {
    const Eigen::VectorXcd eig = Eigen::EigenSolver<Eigen::MatrixXd>(linear_coeffs, false).eigenvalues();
    for (Eigen::Index i = 0; i < eig.size(); ++i) {
      if (time == TimeSemantics::Continuous && eig(i).real() >= 0.0) return false;
      if (time == TimeSemantics::Discrete && std::abs(eig(i)) >= 1.0) return false;
    }
    return true;
  }

  /// Continuous-time spectrum of R0 (discrete models are mapped by log(z)/dt).
  Eigen::VectorXcd spectrum() const {
    Eigen::VectorXcd eig = Eigen::EigenSolver<Eigen::MatrixXd>(linear_coeffs, false).eigenvalues();
    if (time == TimeSemantics::Discrete)
      for (Eigen::Index i = 0; i < eig.size(); ++i) eig(i) = std::log(eig(i)) / dt;
    return eig;
  }

  /// Longest oscillation period among complex eigenvalues of the linear part
  /// (0 when the spectrum is real).
  double slowest_period() const {
    const Eigen::VectorXcd eig = spectrum();
    double wmin = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < eig.size(); ++i)
      if (std::abs(eig(i).imag()) > 1e-9) wmin = std::min(wmin, std::abs(eig(i).imag()));
    return std::isfinite(wmin) ? 2.0 * std::numbers::pi / wmin : 0.0;
  }
};

/// (R0, R) minimizing ||Xdot - R0 X - R X^{2:n_r}||.
inline ReducedDynamics fit_reduced_dynamics(const Eigen::Ref<const Eigen::MatrixXd>& x,
                                            const Eigen::Ref<const Eigen::MatrixXd>& x_dot, int order,
                                            const RegressionOptions& opt = {}) {
  require(order >= 1, ErrorKind::InvalidDegreeRange, "dynamics order must be >= 1");
  require(x.rows() == x_dot.rows() && x.cols() == x_dot.cols(), ErrorKind::DimensionMismatch,
          "states and derivatives not aligned");
  const int n = static_cast<int>(x.rows());
  ReducedDynamics d;
  d.order = order;
  d.basis = nonlinear_basis(n, order);
  const LeastSquaresFit fit = least_squares(linear_and_nonlinear_features(x, d.basis), x_dot, opt);
  d.linear_coeffs = fit.coefficients.leftCols(n);
  d.nonlinear_coeffs = fit.coefficients.rightCols(d.basis.size());
  return d;
}

/// Discrete map x+ = R0 x + R x^{2:n_r} regressed from aligned (x_k, x_{k+1})
/// pairs; pairs must not straddle trajectory boundaries (see
/// assemble_regression_data in Shift mode).
inline ReducedDynamics fit_discrete_dynamics(const Eigen::Ref<const Eigen::MatrixXd>& x,
                                             const Eigen::Ref<const Eigen::MatrixXd>& x_next, int order, double dt,
                                             const RegressionOptions& opt = {}) {
  require(dt > 0.0, ErrorKind::InvalidArgument, "dt must be positive");
  ReducedDynamics d = fit_reduced_dynamics(x, x_next, order, opt);
  d.time = TimeSemantics::Discrete;
  d.dt = dt;
  return d;
}

/// Same, from time-ordered columns split into consecutive segments (one per
/// trajectory); shift pairs are formed within each segment only.
inline ReducedDynamics fit_discrete_dynamics(const Eigen::Ref<const Eigen::MatrixXd>& x,
                                             const std::vector<Eigen::Index>& segments, int order, double dt,
                                             const RegressionOptions& opt = {}) {
  Eigen::Index pairs = 0, total = 0;
  for (auto s : segments) {
    pairs += std::max<Eigen::Index>(s - 1, 0);
    total += s;
  }
  require(total == x.cols(), ErrorKind::DimensionMismatch, "segments do not cover the data");
  Eigen::MatrixXd now(x.rows(), pairs), next(x.rows(), pairs);
  Eigen::Index col = 0, start = 0;
  for (auto s : segments) {
    if (s >= 2) {
      now.middleCols(col, s - 1) = x.middleCols(start, s - 1);
      next.middleCols(col, s - 1) = x.middleCols(start + 1, s - 1);
      col += s - 1;
    }
    start += s;
  }
  return fit_discrete_dynamics(now, next, order, dt, opt);
}

/// Integrates (continuous) or iterates (discrete) the autonomous dynamics,
/// returning `count` samples spaced `sample_period` apart starting at x0.
inline Eigen::MatrixXd rollout_autonomous(const ReducedDynamics& dyn, const Eigen::VectorXd& x0, Eigen::Index count,
                                          double sample_period) {
  Eigen::MatrixXd out(dyn.dim(), count);
  Eigen::VectorXd x = x0;
  int steps = 1;
  if (dyn.time == TimeSemantics::Discrete) {
    const double ratio = sample_period / dyn.dt;
    steps = static_cast<int>(std::lround(ratio));
    require(steps >= 1 && std::abs(ratio - steps) < 1e-6 * steps, ErrorKind::InvalidArgument,
            "sample period must be a multiple of the discrete model step");
  }
  for (Eigen::Index k = 0; k < count; ++k) {
    out.col(k) = x;
    if (k + 1 == count) break;
    for (int s = 0; s < steps; ++s) {
      if (dyn.time == TimeSemantics::Discrete) {
        x = dyn.evaluate(x);
      } else {
        const double h = sample_period;
        const Eigen::VectorXd k1 = dyn.evaluate(x);
        const Eigen::VectorXd k2 = dyn.evaluate(x + 0.5 * h * k1);
        const Eigen::VectorXd k3 = dyn.evaluate(x + 0.5 * h * k2);
        const Eigen::VectorXd k4 = dyn.evaluate(x + h * k3);
        x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      }
    }
    if (!x.allFinite()) {
      out.rightCols(count - k - 1).setConstant(std::numeric_limits<double>::infinity());
      break;
    }
  }
  return out;
}

/// Linear-interpolated percentile (q in [0, 100]).
inline double percentile(std::vector<double> values, double q) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const double pos = q / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

struct ResidualSummary {
  double median = 0.0;
  double p95 = 0.0;
};

inline ResidualSummary summarize(const std::vector<double>& v) { return {percentile(v, 50.0), percentile(v, 95.0)}; }

struct InvarianceReport {
  std::vector<double> geometry_residuals;  // per sample, ||y - w(v(y))|| / ||y - y_eq||
  std::vector<double> dynamics_residuals;  // per trajectory, normalized rollout error
  ResidualSummary geometry;
  ResidualSummary dynamics;
};

/// Held-out invariance diagnostics. Trajectories are in the observation space
/// of the geometry (embedded, not equilibrium-shifted).
inline InvarianceReport invariance_error(const SSMGeometry& geometry, const ReducedDynamics& dynamics,
                                         const std::vector<Trajectory>& trajs) {
  InvarianceReport rep;
  for (const auto& traj : trajs) {
    require(traj.obs_dim() == geometry.obs_dim(), ErrorKind::DimensionMismatch,
            "held-out trajectory dimension differs from geometry");
    const Eigen::MatrixXd xs = geometry.reduce_columns(traj.observations);
    for (Eigen::Index k = 0; k < traj.samples(); ++k) {
      const Eigen::VectorXd y = traj.observations.col(k) - geometry.equilibrium;
      const double scale = y.norm();
      if (scale == 0.0) continue;
      rep.geometry_residuals.push_back((geometry.reconstruct(xs.col(k)) - traj.observations.col(k)).norm() / scale);
    }
    if (traj.samples() >= 2) {
      const Eigen::MatrixXd pred = rollout_autonomous(dynamics, xs.col(0), traj.samples(), traj.sample_period());
      const double denom = xs.norm();
      if (denom > 0.0) rep.dynamics_residuals.push_back((pred - xs).norm() / denom);
    }
  }
  rep.geometry = summarize(rep.geometry_residuals);
  rep.dynamics = summarize(rep.dynamics_residuals);
  return rep;
}

}  // namespace ssmr
