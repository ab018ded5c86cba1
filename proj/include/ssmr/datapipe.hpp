#pragma once

// Dataset preparation for the regressions: transient truncation, time-delay
// embedding, equilibrium shifting, finite differencing and assembly of the
// column-stacked data matrices.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ssmr/error.hpp"
#include "ssmr/trajectory.hpp"

namespace ssmr {

/// Delay embedding y_k -> (y_k, y_{k-stride}, ..., y_{k-d*stride}), current
/// sample first.
struct EmbeddingSpec {
  int delays = 0;
  int raw_dim = 0;
  int stride = 1;

  int embedded_dim() const { return raw_dim * (delays + 1); }
  int lost_samples() const { return delays * stride; }
  bool admissible_for(int reduced_dim) const { return embedded_dim() >= 2 * reduced_dim + 1; }
};

struct EmbeddingVerdict {
  bool admissible = false;
  int min_delays = 0;  // smallest d with raw_dim * (d + 1) >= 2n + 1
};

/// Whitney/Takens condition p >= 2n + 1. raw_dim defaults to p (no delays yet).
inline EmbeddingVerdict check_embedding_dimension(int p, int n, int raw_dim = 0) {
  require(p >= 1 && n >= 1, ErrorKind::InvalidArgument, "dimensions must be >= 1");
  if (raw_dim <= 0) raw_dim = p;
  EmbeddingVerdict v;
  v.admissible = p >= 2 * n + 1;
  const int needed = 2 * n + 1;
  v.min_delays = std::max(0, (needed + raw_dim - 1) / raw_dim - 1);
  return v;
}

inline Trajectory truncate_transient(const Trajectory& traj, Eigen::Index drop) {
  require(drop >= 0, ErrorKind::InvalidArgument, "negative truncation");
  require(drop < traj.samples(), ErrorKind::EmptyResult,
          "dropping " + std::to_string(drop) + " of " + std::to_string(traj.samples()) + " samples");
  Trajectory out;
  out.kind = traj.kind;
  const Eigen::Index keep = traj.samples() - drop;
  out.timestamps = traj.timestamps.tail(keep);
  out.observations = traj.observations.rightCols(keep);
  out.controls = traj.has_controls() ? Eigen::MatrixXd(traj.controls.rightCols(keep)) : Eigen::MatrixXd();
  return out;
}

inline Trajectory embed(const Trajectory& traj, const EmbeddingSpec& spec) {
  require(spec.delays >= 0 && spec.stride >= 1, ErrorKind::InvalidArgument, "invalid embedding spec");
  require(traj.obs_dim() == spec.raw_dim, ErrorKind::DimensionMismatch, "raw dimension differs from embedding spec");
  const Eigen::Index lost = spec.lost_samples();
  require(traj.samples() > lost, ErrorKind::TooShortTrajectory,
          std::to_string(traj.samples()) + " samples cannot hold " + std::to_string(spec.delays) + " delays");
  if (spec.delays == 0) return traj;
  const Eigen::Index count = traj.samples() - lost;
  const Eigen::Index p = spec.raw_dim;
  Trajectory out;
  out.kind = traj.kind;
  out.timestamps = traj.timestamps.tail(count);
  out.observations.resize(spec.embedded_dim(), count);
  for (Eigen::Index k = 0; k < count; ++k)
    for (int d = 0; d <= spec.delays; ++d)
      out.observations.block(d * p, k, p, 1) = traj.observations.col(k + lost - d * spec.stride);
  out.controls = traj.has_controls() ? Eigen::MatrixXd(traj.controls.rightCols(count)) : Eigen::MatrixXd();
  return out;
}

/// Central differences in the interior and second-order one-sided stencils
/// at both ends; exact for polynomials up to degree two.
inline Eigen::MatrixXd finite_difference(const Eigen::Ref<const Eigen::MatrixXd>& samples, double h) {
  const Eigen::Index n = samples.cols();
  require(n >= 3, ErrorKind::TooShortTrajectory, "finite differences need >= 3 samples");
  Eigen::MatrixXd d(samples.rows(), n);
  for (Eigen::Index k = 1; k + 1 < n; ++k) d.col(k) = (samples.col(k + 1) - samples.col(k - 1)) / (2.0 * h);
  d.col(0) = (-3.0 * samples.col(0) + 4.0 * samples.col(1) - samples.col(2)) / (2.0 * h);
  d.col(n - 1) = (3.0 * samples.col(n - 1) - 4.0 * samples.col(n - 2) + samples.col(n - 3)) / (2.0 * h);
  return d;
}

inline Eigen::MatrixXd finite_difference(const Trajectory& traj) {
  require(traj.samples() >= 3, ErrorKind::TooShortTrajectory, "finite differences need >= 3 samples");
  return finite_difference(traj.observations, traj.sample_period());
}

/// Whether the differencing stencil at sample k sees a single held input.
/// The input of sample k acts on [t_k, t_{k+1}).
inline bool stencil_has_constant_control(const Eigen::MatrixXd& controls, Eigen::Index k) {
  const Eigen::Index n = controls.cols();
  auto same = [&](Eigen::Index a, Eigen::Index b) { return controls.col(a) == controls.col(b); };
  if (k == 0) return same(0, 1);
  if (k == n - 1) return same(n - 3, n - 2) && same(n - 2, n - 1);
  return same(k - 1, k);
}

enum class TargetMode { Derivative, Shift };

struct AssemblyOptions {
  TargetMode target = TargetMode::Derivative;
  /// Drop samples whose differencing stencil spans an input switch; their
  /// central difference mixes two held inputs.
  bool drop_control_switches = false;
};

/// Column-stacked regression data. `target` holds derivatives (Derivative
/// mode) or the next sample (Shift mode); `segments` lists the column count
/// contributed by each trajectory.
struct RegressionData {
  Eigen::MatrixXd observations;
  Eigen::MatrixXd target;
  Eigen::MatrixXd controls;
  std::vector<Eigen::Index> segments;
  double sample_period = 0.0;

  Eigen::Index columns() const { return observations.cols(); }
};

inline RegressionData assemble_regression_data(const std::vector<Trajectory>& trajs, const EmbeddingSpec& spec,
                                               const Eigen::VectorXd& equilibrium, const AssemblyOptions& opt = {}) {
  require(!trajs.empty(), ErrorKind::InvalidArgument, "no trajectories to assemble");
  require(equilibrium.size() == spec.raw_dim, ErrorKind::InconsistentDims, "equilibrium size differs from raw_dim");
  const double h = trajs.front().sample_period();
  const bool with_controls = trajs.front().has_controls();
  std::vector<Eigen::MatrixXd> ys, ts, us;
  RegressionData out;
  out.sample_period = h;
  Eigen::Index total = 0;
  for (const auto& raw : trajs) {
    raw.validate();
    require(raw.obs_dim() == spec.raw_dim, ErrorKind::InconsistentDims, "trajectory raw dimension differs");
    require(std::abs(raw.sample_period() - h) <= 1e-9, ErrorKind::InconsistentSampling,
            "trajectories use different sampling periods");
    require(raw.has_controls() == with_controls, ErrorKind::InconsistentDims, "mixed controlled and decay data");
    Trajectory shifted = raw;
    shifted.observations.colwise() -= equilibrium;
    const Trajectory e = embed(shifted, spec);
    std::vector<Eigen::Index> keep;
    Eigen::MatrixXd target;
    Eigen::Index n_cols = 0;
    if (opt.target == TargetMode::Derivative) {
      target = finite_difference(e);
      n_cols = e.samples();
    } else {
      require(e.samples() >= 2, ErrorKind::TooShortTrajectory, "shift pairs need >= 2 samples");
      n_cols = e.samples() - 1;
      target = e.observations.rightCols(n_cols);
    }
    for (Eigen::Index k = 0; k < n_cols; ++k) {
      if (opt.drop_control_switches && e.has_controls()) {
        const bool clean = opt.target == TargetMode::Derivative ? stencil_has_constant_control(e.controls, k) : true;
        if (!clean) continue;
      }
      keep.push_back(k);
    }
    const auto m = static_cast<Eigen::Index>(keep.size());
    Eigen::MatrixXd y(e.obs_dim(), m), t(e.obs_dim(), m), u(e.input_dim(), m);
    for (Eigen::Index c = 0; c < m; ++c) {
      y.col(c) = e.observations.col(keep[c]);
      t.col(c) = target.col(keep[c]);
      if (e.has_controls()) u.col(c) = e.controls.col(keep[c]);
    }
    ys.push_back(std::move(y));
    ts.push_back(std::move(t));
    us.push_back(std::move(u));
    out.segments.push_back(m);
    total += m;
  }
  const Eigen::Index p = spec.embedded_dim();
  const Eigen::Index mu = with_controls ? trajs.front().input_dim() : 0;
  out.observations.resize(p, total);
  out.target.resize(p, total);
  out.controls.resize(mu, total);
  Eigen::Index col = 0;
  for (std::size_t i = 0; i < ys.size(); ++i) {
    const Eigen::Index m = ys[i].cols();
    out.observations.middleCols(col, m) = ys[i];
    out.target.middleCols(col, m) = ts[i];
    if (mu > 0) out.controls.middleCols(col, m) = us[i];
    col += m;
  }
  return out;
}

/// Experimental equilibrium: mean of the last `tail` samples of the longest
/// decay trajectory.
inline Eigen::VectorXd estimate_equilibrium(const std::vector<Trajectory>& decays, Eigen::Index tail = 50) {
  require(!decays.empty(), ErrorKind::InvalidArgument, "no decay trajectories");
  const Trajectory* longest = &decays.front();
  for (const auto& t : decays)
    if (t.samples() > longest->samples()) longest = &t;
  const Eigen::Index k = std::min(tail, longest->samples());
  return longest->observations.rightCols(k).rowwise().mean();
}

/// Truncation length covering three periods of the fastest oscillation in a
/// linear reduced model (or three time constants for real eigenvalues).
inline Eigen::Index default_truncation_samples(const Eigen::MatrixXd& r0, double sample_period) {
  const Eigen::VectorXcd eig = Eigen::EigenSolver<Eigen::MatrixXd>(r0, false).eigenvalues();
  double longest_window = 0.0;
  double fastest = 0.0;
  for (Eigen::Index i = 0; i < eig.size(); ++i) fastest = std::max(fastest, std::abs(eig(i).imag()));
  if (fastest > 0.0) {
    longest_window = 3.0 * 2.0 * std::numbers::pi / fastest;
  } else {
    double rate = 0.0;
    for (Eigen::Index i = 0; i < eig.size(); ++i) rate = std::max(rate, std::abs(eig(i).real()));
    longest_window = rate > 0.0 ? 3.0 / rate : 0.0;
  }
  return static_cast<Eigen::Index>(std::ceil(longest_window / sample_period - 1e-9));
}

/// Splits `count` items into a training prefix and a held-out suffix holding
/// round(fraction * count) items (at least one item stays in training).
inline std::pair<std::vector<int>, std::vector<int>> split_holdout(int count, double fraction) {
  int held = static_cast<int>(std::lround(fraction * count));
  held = std::clamp(held, 0, std::max(0, count - 1));
  std::vector<int> train, test;
  for (int i = 0; i < count; ++i) (i < count - held ? train : test).push_back(i);
  return {train, test};
}

}  // namespace ssmr
