#pragma once

// Receding-horizon loop around a full-order plant, reference generators and
// the tracking metric.

#include <cmath>
#include <fstream>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ssmr/error.hpp"
#include "ssmr/mpc.hpp"
#include "ssmr/plant.hpp"
#include "ssmr/trajectory.hpp"

namespace ssmr {

using ReferenceFn = std::function<Eigen::VectorXd(double)>;

/// center + (A1 sin(2 pi t / T), A2 sin(4 pi t / T)) on the two given axes.
inline ReferenceFn reference_figure_eight(const Eigen::VectorXd& center, const Eigen::Vector2d& amplitudes,
                                          double period, int axis1, int axis2) {
  require(period > 0.0, ErrorKind::InvalidArgument, "reference period must be positive");
  require(axis1 >= 0 && axis2 >= 0 && axis1 < center.size() && axis2 < center.size() && axis1 != axis2,
          ErrorKind::InvalidArgument, "reference axes out of range");
  return [=](double t) {
    Eigen::VectorXd z = center;
    const double phase = 2.0 * std::numbers::pi * t / period;
    z(axis1) += amplitudes(0) * std::sin(phase);
    z(axis2) += amplitudes(1) * std::sin(2.0 * phase);
    return z;
  };
}

inline ReferenceFn reference_circle(const Eigen::VectorXd& center, double radius, double period, int axis1,
                                    int axis2) {
  require(period > 0.0, ErrorKind::InvalidArgument, "reference period must be positive");
  require(axis1 >= 0 && axis2 >= 0 && axis1 < center.size() && axis2 < center.size() && axis1 != axis2,
          ErrorKind::InvalidArgument, "reference axes out of range");
  return [=](double t) {
    Eigen::VectorXd z = center;
    const double phase = 2.0 * std::numbers::pi * t / period;
    z(axis1) += radius * std::cos(phase);
    z(axis2) += radius * std::sin(phase);
    return z;
  };
}

/// The plant as seen by the controller: y = observation * state.
struct ClosedLoopPlant {
  FirstOrderSystem system;
  Eigen::MatrixXd observation;  // empty: identity
  Eigen::VectorXd initial_state;
  double integrator_step = kDefaultIntegratorStep;

  Eigen::VectorXd observe(const Eigen::VectorXd& state) const {
    return observation.size() ? Eigen::VectorXd(observation * state) : state;
  }
};

struct ClosedLoopRecord {
  double t = 0.0;
  Eigen::VectorXd observed;   // plant observation y
  Eigen::VectorXd output;     // z = C y
  Eigen::VectorXd reference;  // z-bar(t)
  Eigen::MatrixXd applied;    // m x N_r
  Eigen::MatrixXd predicted;  // n x N reduced plan
  int scp_iters = 0;
  double qp_ms = 0.0;
  double slack_max = 0.0;
  bool fault = false;
  std::string error;  // solver failure message, if any
};

struct ClosedLoopLog {
  double control_period = 0.0;
  std::vector<ClosedLoopRecord> records;
  int controller_faults = 0;
  int solver_failures = 0;

  bool consistent() const {
    for (std::size_t i = 0; i < records.size(); ++i)
      if (std::abs(records[i].t - static_cast<double>(i) * control_period) > 1e-9 * (1.0 + records[i].t)) return false;
    return true;
  }
};


namespace detail {

inline ClosedLoopLog run_loop(const ClosedLoopPlant& plant, const SSMRModel& model, const ReferenceFn& reference,
                              const OCPConfig& config, double duration,
                              const std::function<void(ClosedLoopRecord&, const Eigen::VectorXd&)>& decide) {
  config.validate(model.input_dim(), model.output_dim());
  require(model.embedding.delays == 0, ErrorKind::InvalidArgument,
          "closed loop needs an undelayed observation model");
  require(duration > 0.0, ErrorKind::InvalidArgument, "duration must be positive");
  const int m = model.input_dim();
  const int fine = substeps(config.dt, plant.integrator_step, "mpc dt");
  const double h = config.dt / fine;
  const double period = config.dt * config.rollout_horizon;
  const auto steps = static_cast<long>(std::floor(duration / period + 1e-9));
  require(plant.system.input_dim() == m, ErrorKind::DimensionMismatch, "plant and model input counts differ");

  ClosedLoopLog log;
  log.control_period = period;
  Eigen::VectorXd state = plant.initial_state;
  for (long i = 0; i < steps; ++i) {
    ClosedLoopRecord rec;
    rec.t = static_cast<double>(i) * period;
    rec.observed = plant.observe(state);
    require(rec.observed.size() == model.obs_dim(), ErrorKind::DimensionMismatch,
            "plant observation size differs from the model");
    rec.output = model.performance_selector * rec.observed;
    rec.reference = reference(rec.t);
    decide(rec, state);
    for (int k = 0; k < config.rollout_horizon; ++k) {
      const Eigen::VectorXd u = rec.applied.col(k);
      for (int s = 0; s < fine; ++s) state = step_rk4(plant.system, state, u, h);
    }
    log.controller_faults += rec.fault ? 1 : 0;
    log.records.push_back(std::move(rec));
  }
  return log;
}

}  // namespace detail

/// Every T_c = N_r dt: observe, reduce, solve the OCP on the reduced model,
/// apply the first N_r controls with zero-order hold. Two consecutive solver
/// failures are a controller fault and the loop applies zero control.
inline ClosedLoopLog run_receding_horizon(const ClosedLoopPlant& plant, const SSMRModel& model,
                                          const ReferenceFn& reference, const OCPConfig& config, double duration) {
  const int N = config.horizon, m = model.input_dim(), nr = config.rollout_horizon;
  std::optional<Eigen::MatrixXd> warm;
  Eigen::MatrixXd last_plan;
  int consecutive_failures = 0;
  int failures = 0;
  auto decide = [&](ClosedLoopRecord& rec, const Eigen::VectorXd&) {
    Eigen::MatrixXd zbar(model.output_dim(), N);
    for (int k = 0; k < N; ++k) zbar.col(k) = reference(rec.t + k * config.dt);
    const Eigen::VectorXd x0 = model.reduce(rec.observed);
    try {
      const ScpResult r = scp_solve(model, x0, zbar, config, warm);
      consecutive_failures = 0;
      rec.applied = r.controls.leftCols(nr);
      rec.predicted = r.states;
      rec.scp_iters = r.iterations;
      rec.qp_ms = r.qp_ms;
      rec.slack_max = r.slack_max;
      last_plan = r.controls;
    } catch (const Error& e) {
      rec.error = e.what();
      ++failures;
      ++consecutive_failures;
      if (consecutive_failures >= 2 || last_plan.size() == 0) {
        rec.fault = consecutive_failures >= 2;
        rec.applied = Eigen::MatrixXd::Zero(m, nr);
        last_plan.resize(0, 0);
      } else {
        // Fall back on the remainder of the previous plan.
        Eigen::MatrixXd shifted(m, N - 1);
        for (int k = 0; k < N - 1; ++k) shifted.col(k) = last_plan.col(std::min(k + nr, N - 2));
        last_plan = shifted;
        rec.applied = shifted.leftCols(nr);
      }
    }
    if (last_plan.size()) {
      Eigen::MatrixXd next(m, N - 1);
      for (int k = 0; k < N - 1; ++k) next.col(k) = last_plan.col(std::min(k + nr, N - 2));
      warm = next;
    } else {
      warm.reset();
    }
  };
  ClosedLoopLog log = detail::run_loop(plant, model, reference, config, duration, decide);
  log.solver_failures = failures;
  return log;
}

/// Same sampling as run_receding_horizon, with zero control throughout.
inline ClosedLoopLog run_zero_control(const ClosedLoopPlant& plant, const SSMRModel& model,
                                      const ReferenceFn& reference, const OCPConfig& config, double duration) {
  auto decide = [&](ClosedLoopRecord& rec, const Eigen::VectorXd&) {
    rec.applied = Eigen::MatrixXd::Zero(model.input_dim(), config.rollout_horizon);
  };
  return detail::run_loop(plant, model, reference, config, duration, decide);
}

struct TrackingError {
  Eigen::VectorXd per_axis;
  double total = 0.0;
  long samples = 0;
};

/// Mean of ||z - z-bar||^2 (and its per-axis components) over records with
/// t >= transient.
inline TrackingError tracking_mse(const ClosedLoopLog& log, double transient = 0.0) {
  require(!log.records.empty(), ErrorKind::EmptyResult, "empty closed-loop log");
  TrackingError e;
  e.per_axis = Eigen::VectorXd::Zero(log.records.front().output.size());
  for (const auto& r : log.records) {
    if (r.t < transient - 1e-12) continue;
    e.per_axis += (r.output - r.reference).cwiseAbs2();
    ++e.samples;
  }
  require(e.samples > 0, ErrorKind::EmptyResult, "transient window covers the whole log");
  e.per_axis /= static_cast<double>(e.samples);
  e.total = e.per_axis.sum();
  return e;
}

inline void write_closed_loop_csv(const ClosedLoopLog& log, const std::string& path) {
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorKind::IoError, "cannot write " + path);
  if (log.records.empty()) return;
  const auto o = log.records.front().output.size();
  const auto m = log.records.front().applied.rows();
  out << "t";
  for (Eigen::Index i = 0; i < o; ++i) out << ",z_" << i + 1;
  for (Eigen::Index i = 0; i < o; ++i) out << ",zbar_" << i + 1;
  for (Eigen::Index i = 0; i < m; ++i) out << ",u_" << i + 1;
  out << ",scp_iters,qp_ms,slack_max\n";
  for (const auto& r : log.records) {
    out << format_number(r.t);
    for (Eigen::Index i = 0; i < o; ++i) out << ',' << format_number(r.output(i));
    for (Eigen::Index i = 0; i < o; ++i) out << ',' << format_number(r.reference(i));
    for (Eigen::Index i = 0; i < m; ++i) out << ',' << format_number(r.applied(i, 0));
    out << ',' << r.scp_iters << ',' << format_number(r.qp_ms) << ',' << format_number(r.slack_max) << '\n';
  }
}

}  // namespace ssmr
