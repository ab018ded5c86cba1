#pragma once

// Synthetic plants: a second-order mechanical chain with cubic springs and
// Rayleigh damping, its first-order realization, and a constructed benchmark
// whose slow invariant manifold and reduced dynamics are known exactly.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "ssmr/error.hpp"
#include "ssmr/polyfeatures.hpp"
#include "ssmr/random.hpp"
#include "ssmr/trajectory.hpp"

namespace ssmr {

/// Quartic-potential spring between two coordinates (second == -1 means the
/// spring is attached to ground). Force on `first` is -k (q_first - q_second)^3.
struct CubicSpring {
  int first = 0;
  int second = -1;
  double coefficient = 0.0;
};

struct MechanicalPlant {
  Eigen::MatrixXd mass;
  Eigen::MatrixXd damping;
  Eigen::MatrixXd stiffness;
  Eigen::MatrixXd input_map;
  std::vector<CubicSpring> cubic_springs;
  double rayleigh_alpha = 0.0;
  double rayleigh_beta = 0.0;

  int dof() const { return static_cast<int>(mass.rows()); }
  int inputs() const { return static_cast<int>(input_map.cols()); }

  /// F_int(q, qdot); depends on q only for cubic springs.
  Eigen::VectorXd internal_force(const Eigen::VectorXd& q) const {
    Eigen::VectorXd f = Eigen::VectorXd::Zero(dof());
    for (const auto& s : cubic_springs) {
      const double stretch = q(s.first) - (s.second >= 0 ? q(s.second) : 0.0);
      const double force = s.coefficient * stretch * stretch * stretch;
      f(s.first) += force;
      if (s.second >= 0) f(s.second) -= force;
    }
    return f;
  }

  double nonlinear_potential(const Eigen::VectorXd& q) const {
    double v = 0.0;
    for (const auto& s : cubic_springs) {
      const double stretch = q(s.first) - (s.second >= 0 ? q(s.second) : 0.0);
      v += 0.25 * s.coefficient * std::pow(stretch, 4);
    }
    return v;
  }

  double energy(const Eigen::VectorXd& q, const Eigen::VectorXd& qdot) const {
    return 0.5 * qdot.dot(mass * qdot) + 0.5 * q.dot(stiffness * q) + nonlinear_potential(q);
  }

  void validate() const {
    const auto n = mass.rows();
    require(mass.cols() == n && damping.rows() == n && damping.cols() == n && stiffness.rows() == n &&
                stiffness.cols() == n && input_map.rows() == n,
            ErrorKind::DimensionMismatch, "mechanical plant matrices disagree in size");
    require((mass - mass.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + mass.cwiseAbs().maxCoeff()),
            ErrorKind::InvalidArgument, "mass matrix not symmetric");
    require((stiffness - stiffness.transpose()).cwiseAbs().maxCoeff() <=
                1e-12 * (1.0 + stiffness.cwiseAbs().maxCoeff()),
            ErrorKind::InvalidArgument, "stiffness matrix not symmetric");
    for (const auto& s : cubic_springs)
      require(s.first >= 0 && s.first < n && s.second >= -1 && s.second < n && s.first != s.second,
              ErrorKind::InvalidArgument, "cubic spring references an invalid coordinate");
  }
};

struct ChainPlantParams {
  int dof = 10;
  double mass = 1.0;
  double stiffness = 1.0;
  double cubic = 0.0;
  double rayleigh_alpha = 2.5;
  double rayleigh_beta = 0.01;
  std::vector<int> actuated = {};  // empty: last mass only
};

/// Fixed-free chain of equal masses with linear and cubic springs between
/// neighbours (and to ground at the first mass), damping C = alpha M + beta K,
/// and unit force inputs on the actuated masses.
inline MechanicalPlant build_chain_plant(const ChainPlantParams& params) {
  const int n = params.dof;
  require(n >= 1, ErrorKind::InvalidArgument, "chain needs at least one mass");
  MechanicalPlant plant;
  plant.mass = params.mass * Eigen::MatrixXd::Identity(n, n);
  plant.stiffness = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    plant.stiffness(i, i) += params.stiffness;
    if (i > 0) {
      plant.stiffness(i - 1, i - 1) += params.stiffness;
      plant.stiffness(i - 1, i) -= params.stiffness;
      plant.stiffness(i, i - 1) -= params.stiffness;
    }
    if (params.cubic != 0.0) plant.cubic_springs.push_back({i, i - 1, params.cubic});
  }
  plant.rayleigh_alpha = params.rayleigh_alpha;
  plant.rayleigh_beta = params.rayleigh_beta;
  plant.damping = params.rayleigh_alpha * plant.mass + params.rayleigh_beta * plant.stiffness;
  std::vector<int> actuated = params.actuated.empty() ? std::vector<int>{n - 1} : params.actuated;
  plant.input_map = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(actuated.size()));
  for (std::size_t j = 0; j < actuated.size(); ++j) {
    require(actuated[j] >= 0 && actuated[j] < n, ErrorKind::InvalidArgument, "actuated index out of range");
    plant.input_map(actuated[j], static_cast<Eigen::Index>(j)) = 1.0;
  }
  plant.validate();
  return plant;
}

/// x' = A x + f_nl(x) + eps B u
struct FirstOrderSystem {
  Eigen::MatrixXd linear_part;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> nonlinear_part;
  Eigen::MatrixXd control_matrix;
  double epsilon = 1.0;

  int state_dim() const { return static_cast<int>(linear_part.rows()); }
  int input_dim() const { return static_cast<int>(control_matrix.cols()); }

  Eigen::VectorXd nonlinear(const Eigen::VectorXd& x) const {
    if (!nonlinear_part) return Eigen::VectorXd::Zero(x.size());
    return nonlinear_part(x);
  }

  Eigen::VectorXd rhs(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const {
    Eigen::VectorXd dx = linear_part * x + nonlinear(x);
    if (u.size() > 0) dx.noalias() += epsilon * (control_matrix * u);
    return dx;
  }

  Eigen::VectorXcd spectrum() const { return Eigen::EigenSolver<Eigen::MatrixXd>(linear_part, false).eigenvalues(); }
};

inline void check_stable_linearization(const FirstOrderSystem& sys) {
  const Eigen::VectorXcd eig = sys.spectrum();
  for (Eigen::Index i = 0; i < eig.size(); ++i)
    require(eig(i).real() < 0.0, ErrorKind::UnstableLinearization,
            "eigenvalue with real part " + format_number(eig(i).real()));
}

/// A = [[0, I], [-M^-1 K, -M^-1 C]], f_nl = [0; -M^-1 F_int], B = [0; M^-1 H].
inline FirstOrderSystem assemble_first_order(const MechanicalPlant& plant, double epsilon = 1.0) {
  plant.validate();
  require(epsilon >= 0.0 && epsilon <= 1.0, ErrorKind::InvalidArgument, "epsilon must lie in [0, 1]");
  const int n = plant.dof();
  Eigen::LLT<Eigen::MatrixXd> llt(plant.mass);
  require(llt.info() == Eigen::Success, ErrorKind::SingularMassMatrix, "mass matrix not positive definite");
  {
    const Eigen::VectorXd d = llt.matrixL().toDenseMatrix().diagonal();
    require(d.minCoeff() > 1e-12 * d.maxCoeff(), ErrorKind::SingularMassMatrix, "mass matrix numerically singular");
  }
  const Eigen::MatrixXd minv_k = llt.solve(plant.stiffness);
  const Eigen::MatrixXd minv_c = llt.solve(plant.damping);
  const Eigen::MatrixXd minv_h = llt.solve(plant.input_map);

  FirstOrderSystem sys;
  sys.linear_part = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  sys.linear_part.topRightCorner(n, n).setIdentity();
  sys.linear_part.bottomLeftCorner(n, n) = -minv_k;
  sys.linear_part.bottomRightCorner(n, n) = -minv_c;
  sys.control_matrix = Eigen::MatrixXd::Zero(2 * n, plant.inputs());
  sys.control_matrix.bottomRows(n) = minv_h;
  sys.epsilon = epsilon;
  if (!plant.cubic_springs.empty()) {
    sys.nonlinear_part = [plant, llt, n](const Eigen::VectorXd& x) {
      Eigen::VectorXd out = Eigen::VectorXd::Zero(2 * n);
      out.tail(n) = -llt.solve(plant.internal_force(x.head(n)));
      return out;
    };
  }
  check_stable_linearization(sys);
  return sys;
}

/// Classical RK4 step with the input held constant over the step.
inline Eigen::VectorXd step_rk4(const FirstOrderSystem& sys, const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                                double dt) {
  require(dt > 0.0, ErrorKind::InvalidArgument, "dt must be positive");
  require(x.size() == sys.state_dim(), ErrorKind::DimensionMismatch, "state size differs from system");
  const Eigen::VectorXd k1 = sys.rhs(x, u);
  const Eigen::VectorXd k2 = sys.rhs(x + 0.5 * dt * k1, u);
  const Eigen::VectorXd k3 = sys.rhs(x + 0.5 * dt * k2, u);
  const Eigen::VectorXd k4 = sys.rhs(x + dt * k3, u);
  Eigen::VectorXd next = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  require(next.allFinite(), ErrorKind::NonFiniteState, "RK4 step produced a non-finite state");
  return next;
}

/// Number of integer steps `fine` making up `coarse`; rejects non-multiples.
inline int substeps(double coarse, double fine, const std::string& what) {
  require(fine > 0.0 && coarse >= fine * (1.0 - 1e-9), ErrorKind::InvalidArgument,
          what + " must be >= the integrator step");
  const double ratio = coarse / fine;
  const double rounded = std::round(ratio);
  require(std::abs(ratio - rounded) <= 1e-6 * rounded, ErrorKind::InvalidArgument,
          what + " must be an integer multiple of the integrator step");
  return static_cast<int>(rounded);
}

inline constexpr double kDefaultIntegratorStep = 1e-4;

/// Piecewise-constant input: column k is held on [k*hold, (k+1)*hold).
struct ControlSchedule {
  double hold_period = 0.01;
  Eigen::MatrixXd values;

  Eigen::Index inputs() const { return values.rows(); }
  Eigen::Index holds() const { return values.cols(); }
  double duration() const { return hold_period * static_cast<double>(holds()); }

  Eigen::VectorXd at(double t) const {
    auto k = static_cast<Eigen::Index>(std::floor(t / hold_period + 1e-9));
    k = std::clamp<Eigen::Index>(k, 0, holds() - 1);
    return values.col(k);
  }
};

/// Unforced rollout sampled every sample_period; first sample is x0.
inline Trajectory simulate_decay(const FirstOrderSystem& sys, const Eigen::VectorXd& x0, double duration,
                                 double sample_period, double dt = kDefaultIntegratorStep) {
  const int steps = substeps(sample_period, dt, "sample period");
  const auto count = static_cast<Eigen::Index>(std::floor(duration / sample_period + 1e-9)) + 1;
  const double h = sample_period / steps;
  Trajectory traj;
  traj.kind = TrajectoryKind::Decay;
  traj.timestamps.resize(count);
  traj.observations.resize(sys.state_dim(), count);
  const Eigen::VectorXd u = Eigen::VectorXd::Zero(sys.input_dim());
  Eigen::VectorXd x = x0;
  for (Eigen::Index k = 0; k < count; ++k) {
    traj.timestamps(k) = static_cast<double>(k) * sample_period;
    traj.observations.col(k) = x;
    if (k + 1 < count)
      for (int s = 0; s < steps; ++s) x = step_rk4(sys, x, u, h);
  }
  return traj;
}

/// Zero-order-hold rollout over the whole schedule, sampled every
/// sample_period (which must divide the hold period). The control column of
/// each sample is the input applied from that instant on.
inline Trajectory simulate_controlled(const FirstOrderSystem& sys, const Eigen::VectorXd& x0,
                                      const ControlSchedule& schedule, double sample_period,
                                      double dt = kDefaultIntegratorStep) {
  require(schedule.inputs() == sys.input_dim(), ErrorKind::DimensionMismatch, "schedule input count differs");
  require(schedule.holds() >= 1, ErrorKind::InvalidArgument, "empty control schedule");
  const int per_hold = substeps(schedule.hold_period, sample_period, "hold period");
  const int steps = substeps(sample_period, dt, "sample period");
  const double h = sample_period / steps;
  const Eigen::Index count = schedule.holds() * per_hold + 1;
  Trajectory traj;
  traj.kind = TrajectoryKind::Controlled;
  traj.timestamps.resize(count);
  traj.observations.resize(sys.state_dim(), count);
  traj.controls.resize(sys.input_dim(), count);
  Eigen::VectorXd x = x0;
  for (Eigen::Index k = 0; k < count; ++k) {
    const Eigen::Index hold = std::min<Eigen::Index>(k / per_hold, schedule.holds() - 1);
    const Eigen::VectorXd u = schedule.values.col(hold);
    traj.timestamps(k) = static_cast<double>(k) * sample_period;
    traj.observations.col(k) = x;
    traj.controls.col(k) = u;
    if (k + 1 < count)
      for (int s = 0; s < steps; ++s) x = step_rk4(sys, x, u, h);
  }
  return traj;
}

/// Equilibrium under a constant load: solves A x + f_nl(x) + eps B u = 0 by
/// damped Newton from the linear answer. Falls back to the linear answer if
/// Newton does not converge.
inline Eigen::VectorXd loaded_equilibrium(const FirstOrderSystem& sys, const Eigen::VectorXd& u) {
  const auto n = sys.state_dim();
  Eigen::PartialPivLU<Eigen::MatrixXd> lin(sys.linear_part);
  const Eigen::VectorXd load = sys.epsilon * (sys.control_matrix * u);
  const Eigen::VectorXd linear_guess = lin.solve(-load);
  if (!sys.nonlinear_part) return linear_guess;
  Eigen::VectorXd x = linear_guess;
  auto residual = [&](const Eigen::VectorXd& z) { return sys.rhs(z, u); };
  Eigen::VectorXd r = residual(x);
  for (int iter = 0; iter < 50 && r.norm() > 1e-13 * (1.0 + load.norm()); ++iter) {
    Eigen::MatrixXd jac(n, n);
    for (int j = 0; j < n; ++j) {
      const double step = 1e-7 * (1.0 + std::abs(x(j)));
      Eigen::VectorXd xp = x, xm = x;
      xp(j) += step;
      xm(j) -= step;
      jac.col(j) = (residual(xp) - residual(xm)) / (2.0 * step);
    }
    const Eigen::VectorXd dx = jac.partialPivLu().solve(-r);
    double alpha = 1.0;
    Eigen::VectorXd trial = x + dx;
    Eigen::VectorXd rt = residual(trial);
    while (rt.norm() > r.norm() && alpha > 1e-4) {
      alpha *= 0.5;
      trial = x + alpha * dx;
      rt = residual(trial);
    }
    if (!(rt.norm() < r.norm())) return linear_guess;
    x = trial;
    r = rt;
  }
  return r.allFinite() ? x : linear_guess;
}

/// Decay initial conditions from random constant pre-loads through B, each
/// load of norm `amplitude`. Deterministic in seed.
inline std::vector<Eigen::VectorXd> sample_decay_initial_conditions(const FirstOrderSystem& sys, int count,
                                                                    double amplitude, std::uint64_t seed) {
  require(count >= 1, ErrorKind::InvalidArgument, "count must be >= 1");
  Rng rng(seed);
  std::vector<Eigen::VectorXd> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    if (amplitude == 0.0 || sys.input_dim() == 0) {
      out.push_back(Eigen::VectorXd::Zero(sys.state_dim()));
      continue;
    }
    const Eigen::VectorXd u = amplitude * rng.unit_vector(sys.input_dim());
    out.push_back(loaded_equilibrium(sys, u));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Benchmark plant with a known slow manifold.

struct BenchmarkOptions {
  int inputs = 2;
  double decay_min = 0.5;  // reduced-mode decay rates |Re|, s^-1
  double decay_max = 1.5;
  double freq_min_hz = 1.5;
  double freq_max_hz = 3.5;
  double transverse_min = 15.0;  // transverse decay rates, s^-1
  double transverse_max = 45.0;
  double gap_factor = 5.0;
  double cubic_damping = 1.0;     // coefficient of -|x|^2 x
  double frequency_shift = 0.25;  // hardening: omega_j (1 + shift |x_j|^2)
  double cubic_random = 0.2;      // random cubic couplings, relative to cubic_damping
  double lift_scale = 0.3;
  double performance_curvature = 0.5;  // quadratic lift rows read by the performance outputs
  int performance_outputs = 2;
  double input_scale = 5.0;
};

/// Composed dynamics in intrinsic coordinates (x, s):
///   x' = R0 x + R x^{2:3} + Bx u
///   s' = L (s - phi(x)) + Dphi(x) (R0 x + R x^{2:3})
/// with phi quadratic and L = diag(-mu). The graph s = phi(x) is invariant
/// for u = 0 and the off-manifold error e = s - phi(x) obeys e' = L e.
/// Observations are the intrinsic state rotated by a random orthogonal Q.
struct GroundTruthPlant {
  int reduced_dim = 0;
  int full_dim = 0;
  Eigen::MatrixXd rotation;
  Eigen::MatrixXd true_r0;
  Eigen::MatrixXd true_r;
  MultiIndexBasis dynamics_basis;
  Eigen::MatrixXd lift_coeffs;  // (full_dim - reduced_dim) x |lift_basis|
  MultiIndexBasis lift_basis;
  Eigen::VectorXd fast_decay;  // mu, positive
  Eigen::MatrixXd input_reduced;
  FirstOrderSystem system;
  double performance_curvature = 0.0;

  int transverse_dim() const { return full_dim - reduced_dim; }
  Eigen::MatrixXd tangent_basis() const { return rotation.leftCols(reduced_dim); }
  Eigen::MatrixXd normal_basis() const { return rotation.rightCols(transverse_dim()); }
  /// W0* and W* of the lift in observed coordinates (lift basis x^{2:2}).
  Eigen::MatrixXd true_w0() const { return tangent_basis(); }
  Eigen::MatrixXd true_w() const { return normal_basis() * lift_coeffs; }
  /// Planted control matrix in the intrinsic reduced chart.
  const Eigen::MatrixXd& true_b() const { return input_reduced; }

  Eigen::VectorXd reduced_rhs(const Eigen::VectorXd& x) const {
    Eigen::VectorXd out = true_r0 * x;
    if (!dynamics_basis.empty()) out.noalias() += true_r * dynamics_basis.evaluate(x);
    return out;
  }

  Eigen::VectorXd lift(const Eigen::VectorXd& x) const { return lift_coeffs * lift_basis.evaluate(x); }

  Eigen::VectorXd observe(const Eigen::VectorXd& x, const Eigen::VectorXd& s) const {
    Eigen::VectorXd intrinsic(full_dim);
    intrinsic << x, s;
    return rotation * intrinsic;
  }

  Eigen::VectorXd on_manifold(const Eigen::VectorXd& x) const { return observe(x, lift(x)); }

  std::pair<Eigen::VectorXd, Eigen::VectorXd> intrinsic(const Eigen::VectorXd& y) const {
    const Eigen::VectorXd z = rotation.transpose() * y;
    return {z.head(reduced_dim), z.tail(transverse_dim())};
  }

  double manifold_residual(const Eigen::VectorXd& y) const {
    const auto [x, s] = intrinsic(y);
    return (s - lift(x)).norm();
  }

  /// z_i = x_i + s_i in intrinsic coordinates, as a matrix acting on y.
  Eigen::MatrixXd performance_matrix(int outputs) const {
    require(outputs >= 1 && outputs <= reduced_dim && outputs <= transverse_dim(), ErrorKind::InvalidArgument,
            "performance outputs must not exceed the reduced or transverse dimension");
    Eigen::MatrixXd c(outputs, full_dim);
    for (int i = 0; i < outputs; ++i) c.row(i) = (rotation.col(i) + rotation.col(reduced_dim + i)).transpose();
    return c;
  }

  /// Slowest (longest period) oscillatory pair of R0, in seconds.
  double slowest_period() const {
    const Eigen::VectorXcd eig = Eigen::EigenSolver<Eigen::MatrixXd>(true_r0, false).eigenvalues();
    double wmin = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < eig.size(); ++i)
      if (std::abs(eig(i).imag()) > 0.0) wmin = std::min(wmin, std::abs(eig(i).imag()));
    return 2.0 * std::numbers::pi / wmin;
  }
};

inline GroundTruthPlant build_benchmark_plant(int n, int n_full, std::uint64_t seed,
                                              const BenchmarkOptions& opt = {}) {
  require(n >= 2 && n % 2 == 0, ErrorKind::InvalidArgument, "reduced dimension must be even and >= 2");
  require(n_full >= 2 * n + 2, ErrorKind::InvalidArgument, "full dimension must be >= 2n + 2");
  require(opt.inputs >= 1, ErrorKind::InvalidArgument, "benchmark needs at least one input");
  Rng rng(seed);
  GroundTruthPlant g;
  g.reduced_dim = n;
  g.full_dim = n_full;
  const int nt = n_full - n;
  const int pairs = n / 2;

  std::vector<double> sigma(pairs), omega(pairs);
  for (int j = 0; j < pairs; ++j) {
    sigma[j] = -rng.uniform(opt.decay_min, opt.decay_max);
    omega[j] = 2.0 * std::numbers::pi * rng.uniform(opt.freq_min_hz, opt.freq_max_hz);
  }
  std::sort(omega.begin(), omega.end());
  g.true_r0 = Eigen::MatrixXd::Zero(n, n);
  for (int j = 0; j < pairs; ++j) {
    g.true_r0(2 * j, 2 * j) = sigma[j];
    g.true_r0(2 * j + 1, 2 * j + 1) = sigma[j];
    g.true_r0(2 * j, 2 * j + 1) = omega[j];
    g.true_r0(2 * j + 1, 2 * j) = -omega[j];
  }

  // Odd cubic reduced dynamics: damping -gamma |x|^2 x, a per-pair hardening
  // rotation, and small random couplings bounded by half the damping.
  g.dynamics_basis = build_basis(n, 2, 3);
  std::map<Exponents, Eigen::Index> index;
  for (Eigen::Index j = 0; j < g.dynamics_basis.size(); ++j) index[g.dynamics_basis.exponents()[j]] = j;
  auto term = [&](std::initializer_list<std::pair<int, int>> powers) {
    Exponents e(n, 0);
    for (auto [var, pw] : powers) e[var] += pw;
    return index.at(e);
  };
  g.true_r = Eigen::MatrixXd::Zero(n, g.dynamics_basis.size());
  for (int i = 0; i < n; ++i)
    for (int l = 0; l < n; ++l) g.true_r(i, term({{l, 2}, {i, 1}})) -= opt.cubic_damping;
  for (int j = 0; j < pairs; ++j) {
    const int a = 2 * j, b = 2 * j + 1;
    const double k = opt.frequency_shift * omega[j];
    // (x_a, x_b)' += k (x_a^2 + x_b^2) (x_b, -x_a)
    g.true_r(a, term({{a, 2}, {b, 1}})) += k;
    g.true_r(a, term({{b, 3}})) += k;
    g.true_r(b, term({{a, 3}})) -= k;
    g.true_r(b, term({{b, 2}, {a, 1}})) -= k;
  }
  {
    Eigen::MatrixXd couplings = Eigen::MatrixXd::Zero(n, g.dynamics_basis.size());
    for (Eigen::Index j = 0; j < g.dynamics_basis.size(); ++j) {
      int degree = 0;
      for (int e : g.dynamics_basis.exponents()[j]) degree += e;
      if (degree == 3)
        for (int i = 0; i < n; ++i) couplings(i, j) = rng.normal();
    }
    for (int i = 0; i < n; ++i) {
      const double l1 = couplings.row(i).cwiseAbs().sum();
      if (l1 > 0.0) couplings.row(i) *= 0.5 * opt.cubic_random * opt.cubic_damping / l1;
    }
    g.true_r += couplings;
  }

  g.fast_decay.resize(nt);
  for (int i = 0; i < nt; ++i) g.fast_decay(i) = rng.uniform(opt.transverse_min, opt.transverse_max);
  double slowest = std::numeric_limits<double>::infinity();
  for (double s : sigma) slowest = std::min(slowest, std::abs(s));
  require(g.fast_decay.minCoeff() >= opt.gap_factor * slowest, ErrorKind::SpectralGapViolation,
          "transverse decay " + format_number(g.fast_decay.minCoeff()) + " is not " + format_number(opt.gap_factor) +
              "x the slowest reduced decay " + format_number(slowest));

  g.lift_basis = build_basis(n, 2, 2);
  g.lift_coeffs = rng.normal_matrix(nt, g.lift_basis.size()) * (opt.lift_scale / std::sqrt(static_cast<double>(nt)));
  const int perf = std::min({opt.performance_outputs, n, nt});
  for (int i = 0; i < perf; ++i)
    g.lift_coeffs.row(i) = rng.normal_vector(g.lift_basis.size()).transpose() * opt.performance_curvature;
  g.performance_curvature = opt.performance_curvature;

  g.rotation = rng.orthogonal_matrix(n_full);
  g.input_reduced = rng.normal_matrix(n, opt.inputs) * opt.input_scale;

  Eigen::MatrixXd a_int = Eigen::MatrixXd::Zero(n_full, n_full);
  a_int.topLeftCorner(n, n) = g.true_r0;
  a_int.bottomRightCorner(nt, nt) = (-g.fast_decay).asDiagonal();
  g.system.linear_part = g.rotation * a_int * g.rotation.transpose();
  Eigen::MatrixXd b_int = Eigen::MatrixXd::Zero(n_full, opt.inputs);
  b_int.topRows(n) = g.input_reduced;
  g.system.control_matrix = g.rotation * b_int;
  g.system.epsilon = 1.0;

  const Eigen::MatrixXd rotation = g.rotation;
  const Eigen::MatrixXd r = g.true_r;
  const Eigen::MatrixXd lift = g.lift_coeffs;
  const Eigen::VectorXd mu = g.fast_decay;
  const MultiIndexBasis dyn_basis = g.dynamics_basis;
  const MultiIndexBasis lift_basis = g.lift_basis;
  const Eigen::MatrixXd r0 = g.true_r0;
  g.system.nonlinear_part = [=](const Eigen::VectorXd& y) {
    const Eigen::VectorXd z = rotation.transpose() * y;
    const Eigen::VectorXd x = z.head(n);
    Eigen::VectorXd nl(n_full);
    nl.head(n) = r * dyn_basis.evaluate(x);
    const Eigen::VectorXd xdot = r0 * x + nl.head(n);
    // s' - L s = -L phi(x) + Dphi(x) x'  with L = diag(-mu)
    nl.tail(nt) = mu.cwiseProduct(lift * lift_basis.evaluate(x)) + lift * (lift_basis.jacobian(x) * xdot);
    return Eigen::VectorXd(rotation * nl);
  };
  check_stable_linearization(g.system);
  return g;
}

/// Benchmark initial conditions: random reduced displacements of norm
/// `amplitude`, lifted onto the manifold and optionally pushed off it by
/// `off_manifold` * amplitude in a random transverse direction. With
/// symmetric_pairs, every second state mirrors its predecessor through
/// x -> -x (which maps trajectories to trajectories, since the reduced
/// dynamics are odd and the lift is even).
inline std::vector<Eigen::VectorXd> sample_manifold_initial_conditions(const GroundTruthPlant& plant, int count,
                                                                       double amplitude, std::uint64_t seed,
                                                                       double off_manifold = 0.0,
                                                                       bool symmetric_pairs = true) {
  require(count >= 1, ErrorKind::InvalidArgument, "count must be >= 1");
  Rng rng(seed);
  std::vector<Eigen::VectorXd> out;
  Eigen::VectorXd x, e;
  for (int i = 0; i < count; ++i) {
    if (!symmetric_pairs || i % 2 == 0) {
      x = amplitude * rng.unit_vector(plant.reduced_dim);
      e = off_manifold * amplitude * rng.unit_vector(plant.transverse_dim());
    } else {
      x = -x;
    }
    out.push_back(plant.observe(x, plant.lift(x) + e));
  }
  return out;
}

}  // namespace ssmr
