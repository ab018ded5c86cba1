#pragma once

// Batch pipeline behind the CLI. Every stage reads the config plus the
// artifacts earlier stages left under the output directory:
//
//   generate-data  manifest.json, data/*.csv
//   fit            model.json [model_linear.json], fit_summary.json
//   validate       validation.json
//   control        logs/*.csv, control_summary.json
//   report         report/report.md, report/*.svg

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ssmr/closed_loop.hpp"
#include "ssmr/config.hpp"
#include "ssmr/controllearn.hpp"
#include "ssmr/datapipe.hpp"
#include "ssmr/hash.hpp"
#include "ssmr/model_io.hpp"
#include "ssmr/mpc.hpp"
#include "ssmr/plant.hpp"
#include "ssmr/ssmlearn.hpp"

namespace ssmr {

namespace fs = std::filesystem;

struct BuiltPlant {
  FirstOrderSystem system;
  Eigen::MatrixXd performance;  // C acting on the observation y = state
  std::optional<GroundTruthPlant> truth;
  Eigen::VectorXd rest_state;
};

inline BuiltPlant build_plant(const PlantSection& p) {
  BuiltPlant out;
  if (p.type == "benchmark") {
    GroundTruthPlant g = build_benchmark_plant(p.reduced_dim, p.full_dim, p.seed, p.benchmark);
    out.system = g.system;
    out.performance = g.performance_matrix(p.outputs);
    out.truth = std::move(g);
  } else {
    const MechanicalPlant mech = build_chain_plant(p.chain);
    out.system = assemble_first_order(mech);
    std::vector<int> rows = p.chain_outputs.empty() ? std::vector<int>{p.chain.dof - 1} : p.chain_outputs;
    out.performance = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows.size()), 2 * p.chain.dof);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      require(rows[i] >= 0 && rows[i] < p.chain.dof, ErrorKind::InvalidArgument, "chain output index out of range");
      out.performance(static_cast<Eigen::Index>(i), rows[i]) = 1.0;
    }
  }
  out.rest_state = Eigen::VectorXd::Zero(out.system.state_dim());
  return out;
}

inline std::string indexed_name(const std::string& stem, int i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "_%03d.csv", i);
  return stem + buf;
}

inline void write_effective_config(const PipelineConfig& cfg, const fs::path& out, const std::string& stage) {
  fs::create_directories(out);
  write_json_file(config_to_json(cfg), (out / ("effective_config." + stage + ".json")).string());
}

inline std::string config_hash(const PipelineConfig& cfg) { return sha256_hex(config_to_json(cfg).dump()); }

// ---------------------------------------------------------------------------
// generate-data

inline Json cmd_generate_data(const PipelineConfig& cfg, const fs::path& out, std::ostream& log = std::cout) {
  validate_config(cfg);
  write_effective_config(cfg, out, "generate-data");
  fs::create_directories(out / "data");
  const BuiltPlant plant = build_plant(cfg.plant);
  const auto& d = cfg.data;
  const double h = cfg.plant.integrator_step;

  std::vector<Eigen::VectorXd> ics;
  if (d.ic_mode == "manifold")
    ics = sample_manifold_initial_conditions(*plant.truth, d.decay_count, d.amplitude, cfg.plant.seed + 1,
                                             d.off_manifold, d.symmetric_pairs);
  else
    ics = sample_decay_initial_conditions(plant.system, d.decay_count, d.amplitude, cfg.plant.seed + 1);

  Json manifest;
  manifest["format"] = "ssmr-dataset";
  manifest["seed"] = cfg.plant.seed;
  manifest["sample_period"] = d.sample_period;
  manifest["observation_dim"] = plant.system.state_dim();
  manifest["inputs"] = plant.system.input_dim();
  manifest["embedding"] = {{"delays", d.delays}, {"stride", d.stride}};

  const Trajectory rest = simulate_decay(plant.system, plant.rest_state, d.rest_duration, d.sample_period, h);
  write_trajectory_csv(rest, (out / "data" / "rest.csv").string());
  manifest["rest"] = {{"file", "data/rest.csv"}, {"sha256", sha256_file((out / "data" / "rest.csv").string())}};

  const auto [train, held] = split_holdout(d.decay_count, d.holdout_fraction);
  Json decays = Json::array();
  for (int i = 0; i < d.decay_count; ++i) {
    const Trajectory t = simulate_decay(plant.system, ics[static_cast<std::size_t>(i)], d.decay_duration,
                                        d.sample_period, h);
    const std::string file = "data/" + indexed_name("decay", i);
    write_trajectory_csv(t, (out / file).string());
    const bool is_train = i < static_cast<int>(train.size());
    decays.push_back({{"file", file}, {"role", is_train ? "train" : "holdout"}, {"sha256", sha256_file((out / file).string())}});
  }
  manifest["decay"] = decays;

  Json controlled = Json::array();
  const int m = plant.system.input_dim();
  for (int i = 0; i < d.controlled_count; ++i) {
    const ControlSchedule s = random_control_sequence(m, d.controlled_duration, cfg.control_fit.hold_period,
                                                      cfg.control_fit.lower, cfg.control_fit.upper,
                                                      cfg.plant.seed + 1000 + static_cast<std::uint64_t>(i));
    const Trajectory t = simulate_controlled(plant.system, plant.rest_state, s, d.sample_period, h);
    const std::string file = "data/" + indexed_name("controlled", i);
    write_trajectory_csv(t, (out / file).string());
    controlled.push_back({{"file", file}, {"sha256", sha256_file((out / file).string())}});
  }
  manifest["controlled"] = controlled;
  manifest["config_hash"] = config_hash(cfg);
  write_json_file(manifest, (out / "manifest.json").string());
  log << "generate-data: " << d.decay_count << " decay (" << held.size() << " held out), " << d.controlled_count
      << " controlled trajectories\n";
  return manifest;
}

// ---------------------------------------------------------------------------
// fit

struct Dataset {
  Trajectory rest;
  std::vector<Trajectory> train;
  std::vector<Trajectory> holdout;
  std::vector<Trajectory> controlled;
  double sample_period = 0.0;
  std::string manifest_hash;
};

inline Dataset load_dataset(const fs::path& out) {
  const std::string mpath = (out / "manifest.json").string();
  const Json manifest = read_json_file(mpath);
  require(manifest.value("format", "") == "ssmr-dataset", ErrorKind::ParseError, "not a dataset manifest");
  Dataset ds;
  ds.manifest_hash = sha256_file(mpath);
  ds.sample_period = manifest.at("sample_period").get<double>();
  ds.rest = read_trajectory_csv((out / manifest.at("rest").at("file").get<std::string>()).string(), TrajectoryKind::Decay);
  for (const Json& e : manifest.at("decay")) {
    Trajectory t = read_trajectory_csv((out / e.at("file").get<std::string>()).string(), TrajectoryKind::Decay);
    (e.at("role").get<std::string>() == "train" ? ds.train : ds.holdout).push_back(std::move(t));
  }
  for (const Json& e : manifest.at("controlled"))
    ds.controlled.push_back(
        read_trajectory_csv((out / e.at("file").get<std::string>()).string(), TrajectoryKind::Controlled));
  require(!ds.train.empty(), ErrorKind::EmptyResult, "manifest lists no training decays");
  return ds;
}

struct FitReport {
  Eigen::Index truncation = 0;
  Eigen::VectorXd variance_ratios;
  double captured = 0.0;
  std::pair<double, double> invertibility = {0.0, 0.0};
  double control_residual_before = 0.0;
  double control_residual_after = 0.0;
  double excitation_condition = 0.0;
};

inline EmbeddingSpec embedding_of(const PipelineConfig& cfg, int raw_dim) {
  return {cfg.data.delays, raw_dim, cfg.data.stride};
}

/// Samples to drop from each decay: the configured count or, for "auto",
/// three periods of the fastest mode of a preliminary linear reduced model.
inline Eigen::Index resolve_truncation(const PipelineConfig& cfg, const Dataset& ds, const Eigen::VectorXd& y_eq) {
  if (cfg.data.truncation >= 0) return cfg.data.truncation;
  const EmbeddingSpec spec = embedding_of(cfg, static_cast<int>(ds.rest.obs_dim()));
  const RegressionData data = assemble_regression_data(ds.train, spec, y_eq);
  const PcaResult pca = fit_pca(data.observations, cfg.fit.n);
  const ReducedDynamics lin = fit_reduced_dynamics(pca.basis.transpose() * data.observations,
                                                   pca.basis.transpose() * data.target, 1);
  return default_truncation_samples(lin.linear_coeffs, ds.sample_period);
}

inline SSMRModel fit_model(const PipelineConfig& cfg, const Dataset& ds, const Eigen::MatrixXd& performance,
                           int n_w, int n_r, Eigen::Index truncation, FitReport& report) {
  const int raw = static_cast<int>(ds.rest.obs_dim());
  const EmbeddingSpec spec = embedding_of(cfg, raw);
  const Eigen::VectorXd y_eq_raw = estimate_equilibrium({ds.rest});
  std::vector<Trajectory> decays;
  for (const auto& t : ds.train) decays.push_back(truncate_transient(t, truncation));
  const bool discrete = cfg.fit.time == "discrete";
  AssemblyOptions opt;
  opt.target = discrete ? TargetMode::Shift : TargetMode::Derivative;
  const RegressionData data = assemble_regression_data(decays, spec, y_eq_raw, opt);

  Eigen::VectorXd y_eq(spec.embedded_dim());
  for (int k = 0; k <= spec.delays; ++k) y_eq.segment(static_cast<Eigen::Index>(k) * raw, raw) = y_eq_raw;

  const PcaResult pca = fit_pca(data.observations, cfg.fit.n);
  report.variance_ratios = pca.variance_ratios;
  report.captured = pca.captured(cfg.fit.n);
  report.truncation = truncation;
  GeometryOptions gopt;
  gopt.regression = {cfg.fit.ridge, cfg.fit.max_condition};
  gopt.enforce_invertibility = cfg.fit.enforce_invertibility;
  const SSMGeometry geometry = fit_geometry(data.observations, pca.basis, n_w, y_eq, gopt);
  report.invertibility = geometry.invertibility_residuals();

  const Eigen::MatrixXd x = pca.basis.transpose() * data.observations;
  const RegressionOptions ropt{cfg.fit.ridge, cfg.fit.max_condition};
  ReducedDynamics dyn;
  if (discrete) {
    // data.target holds the next sample; x_next pairs stay within trajectories.
    dyn = fit_discrete_dynamics(x, pca.basis.transpose() * data.target, n_r, ds.sample_period, ropt);
  } else {
    dyn = fit_reduced_dynamics(x, pca.basis.transpose() * data.target, n_r, ropt);
  }

  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(cfg.fit.n, ds.controlled.empty() ? 0 : ds.controlled.front().input_dim());
  if (!ds.controlled.empty()) {
    AssemblyOptions copt = opt;
    copt.drop_control_switches = true;
    const RegressionData cdata = assemble_regression_data(ds.controlled, spec, y_eq_raw, copt);
    const ControlFit cf = fit_control_matrix(pca.basis.transpose() * cdata.observations,
                                             pca.basis.transpose() * cdata.target, cdata.controls, dyn,
                                             cfg.control_fit.max_condition);
    b = cf.control_matrix;
    report.control_residual_before = cf.residual_before;
    report.control_residual_after = cf.residual_after;
    report.excitation_condition = cf.excitation_condition;
  }

  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(performance.rows(), spec.embedded_dim());
  c.leftCols(raw) = performance;
  SSMRModel model = assemble_model(geometry, dyn, b, c, performance * y_eq_raw);
  model.embedding = spec;
  model.reduced_amplitude = x.cwiseAbs().maxCoeff();
  return model;
}

inline Json fit_report_json(const FitReport& r, int n) {
  const Eigen::Index shown = std::min<Eigen::Index>(r.variance_ratios.size(), n + 2);
  return {{"truncation_samples", r.truncation},
          {"variance_ratios", vector_to_json(r.variance_ratios.head(shown))},
          {"captured_variance", round_significant(r.captured)},
          {"invertibility", {{"VtW0_minus_I", round_significant(r.invertibility.first)},
                             {"VtW", round_significant(r.invertibility.second)}}},
          {"control_fit", {{"residual_before", round_significant(r.control_residual_before)},
                           {"residual_after", round_significant(r.control_residual_after)},
                           {"excitation_condition", round_significant(r.excitation_condition)}}}};
}

inline void cmd_fit(const PipelineConfig& cfg, const fs::path& out, std::ostream& log = std::cout) {
  validate_config(cfg);
  write_effective_config(cfg, out, "fit");
  const Dataset ds = load_dataset(out);
  const BuiltPlant plant = build_plant(cfg.plant);
  const Eigen::VectorXd y_eq = estimate_equilibrium({ds.rest});
  const Eigen::Index truncation = resolve_truncation(cfg, ds, y_eq);
  const ModelProvenance prov{ds.manifest_hash, config_hash(cfg)};

  FitReport rep;
  const SSMRModel model = fit_model(cfg, ds, plant.performance, cfg.fit.n_w, cfg.fit.n_r, truncation, rep);
  write_json_file(model_to_json(model, prov), (out / "model.json").string());
  Json summary;
  summary["model"] = fit_report_json(rep, cfg.fit.n);
  log << "fit: truncation " << truncation << " samples, leading-" << cfg.fit.n << " variance "
      << format_number(rep.captured) << "\n";
  log << "fit: variance ratios";
  for (Eigen::Index i = 0; i < std::min<Eigen::Index>(rep.variance_ratios.size(), cfg.fit.n + 2); ++i)
    log << ' ' << format_number(rep.variance_ratios(i));
  log << "\nfit: invertibility ||V^T W0 - I|| = " << format_number(rep.invertibility.first)
      << ", ||V^T W|| = " << format_number(rep.invertibility.second) << "\n";

  if (cfg.fit.linear_baseline) {
    FitReport lrep;
    const SSMRModel linear = fit_model(cfg, ds, plant.performance, 1, 1, truncation, lrep);
    write_json_file(model_to_json(linear, prov), (out / "model_linear.json").string());
    summary["linear_baseline"] = fit_report_json(lrep, cfg.fit.n);
  }
  write_json_file(summary, (out / "fit_summary.json").string());
}

// ---------------------------------------------------------------------------
// validate

inline Json invariance_json(const InvarianceReport& r) {
  return {{"geometry", {{"median", round_significant(r.geometry.median)}, {"p95", round_significant(r.geometry.p95)}}},
          {"dynamics", {{"median", round_significant(r.dynamics.median)}, {"p95", round_significant(r.dynamics.p95)}}}};
}

inline std::vector<Trajectory> prepare_holdout(const Dataset& ds, const EmbeddingSpec& spec, Eigen::Index truncation) {
  std::vector<Trajectory> out;
  for (const auto& t : ds.holdout) out.push_back(embed(truncate_transient(t, truncation), spec));
  return out;
}

inline Json cmd_validate(const PipelineConfig& cfg, const fs::path& out, std::ostream& log = std::cout) {
  validate_config(cfg);
  write_effective_config(cfg, out, "validate");
  const Dataset ds = load_dataset(out);
  const SSMRModel model = model_from_json(read_json_file((out / "model.json").string()));
  const Json fit_summary = read_json_file((out / "fit_summary.json").string());
  const auto truncation = fit_summary.at("model").at("truncation_samples").get<Eigen::Index>();
  std::vector<Trajectory> held = prepare_holdout(ds, model.embedding, truncation);
  if (held.empty()) {
    log << "validate: no held-out decays, using training decays\n";
    Dataset tmp = ds;
    tmp.holdout = ds.train;
    held = prepare_holdout(tmp, model.embedding, truncation);
  }

  Json j;
  j["holdout_trajectories"] = held.size();
  j["ssmr"] = invariance_json(invariance_error(model.geometry, model.dynamics, held));
  const fs::path lin_path = out / "model_linear.json";
  if (fs::exists(lin_path)) {
    const SSMRModel lin = model_from_json(read_json_file(lin_path.string()));
    j["linear_baseline"] = invariance_json(invariance_error(lin.geometry, lin.dynamics, held));
  }
  Json spectrum = Json::array();
  const Eigen::VectorXcd eig = model.dynamics.spectrum();
  for (Eigen::Index i = 0; i < eig.size(); ++i)
    spectrum.push_back({round_significant(eig(i).real()), round_significant(eig(i).imag())});
  j["r0_spectrum"] = spectrum;
  j["r0_stable"] = model.dynamics.linear_part_stable();
  j["slowest_period"] = round_significant(model.dynamics.slowest_period());
  const EmbeddingVerdict verdict =
      check_embedding_dimension(model.obs_dim(), model.reduced_dim(), model.embedding.raw_dim);
  j["embedding"] = {{"p", model.obs_dim()},
                    {"n", model.reduced_dim()},
                    {"admissible", verdict.admissible},
                    {"min_delays", verdict.min_delays}};
  write_json_file(j, (out / "validation.json").string());
  log << "validate: geometry median " << format_number(j["ssmr"]["geometry"]["median"].get<double>())
      << ", dynamics median " << format_number(j["ssmr"]["dynamics"]["median"].get<double>())
      << ", slowest period " << format_number(j["slowest_period"].get<double>()) << " s\n";
  return j;
}

// ---------------------------------------------------------------------------
// control

inline OCPConfig ocp_config(const PipelineConfig& cfg, const TaskSection& task, int horizon, int m, int o) {
  const auto& mp = cfg.mpc;
  OCPConfig c;
  c.stage_weight = mp.stage_weight * Eigen::MatrixXd::Identity(o, o);
  c.terminal_weight = mp.terminal_weight * Eigen::MatrixXd::Identity(o, o);
  c.control_weight = mp.control_weight * Eigen::MatrixXd::Identity(m, m);
  c.horizon = horizon;
  c.dt = mp.dt;
  c.rollout_horizon = mp.rollout_horizon;
  c.control_polytope =
      Polytope::box(Eigen::VectorXd::Constant(m, mp.control_lower), Eigen::VectorXd::Constant(m, mp.control_upper));
  if (!task.performance_lower.empty()) {
    require(static_cast<int>(task.performance_lower.size()) == o, ErrorKind::DimensionMismatch,
            "task performance bounds must have one entry per output");
    const Eigen::VectorXd lo = Eigen::Map<const Eigen::VectorXd>(task.performance_lower.data(), o);
    const Eigen::VectorXd hi = Eigen::Map<const Eigen::VectorXd>(task.performance_upper.data(), o);
    c.performance_polytope = Polytope::box(lo, hi);
  }
  c.soft_penalty = mp.soft_penalty;
  c.trust_region.initial_radius = mp.trust_region.initial_radius;
  c.trust_region.shrink = mp.trust_region.shrink;
  c.trust_region.grow = mp.trust_region.grow;
  c.trust_region.accept_ratio = mp.trust_region.accept_ratio;
  c.scp_tolerance = mp.scp_tolerance;
  c.scp_max_iters = mp.scp_max_iters;
  c.validate(m, o);
  return c;
}

inline ReferenceFn task_reference(const TaskSection& task, const SSMRModel& model) {
  const int o = model.output_dim();
  Eigen::VectorXd center = model.performance_equilibrium;
  if (!task.center_offset.empty()) {
    require(static_cast<int>(task.center_offset.size()) == o, ErrorKind::DimensionMismatch,
            "task center offset must have one entry per output");
    center += Eigen::Map<const Eigen::VectorXd>(task.center_offset.data(), o);
  }
  if (task.type == "equilibrium") return [center](double) { return center; };
  double period = task.period;
  if (task.resonance) {
    period = model.dynamics.slowest_period();
    require(period > 0.0, ErrorKind::InvalidArgument, "learned R0 has no oscillatory mode for a resonance task");
  }
  if (task.type == "circle") return reference_circle(center, task.radius, period, task.axes[0], task.axes[1]);
  return reference_figure_eight(center, Eigen::Vector2d(task.amplitudes[0], task.amplitudes[1]), period, task.axes[0],
                                task.axes[1]);
}

struct RunStats {
  TrackingError mse;
  double control_violation = 0.0;     // max over applied controls, exact
  double performance_violation = 0.0; // max plant-side violation after the transient
  double slack_max = 0.0;             // max planned slack after the transient
  double max_observation_norm = 0.0;
  int controller_faults = 0;
  int solver_failures = 0;
  double mean_scp_iters = 0.0;
  std::vector<double> solve_ms;
};

inline RunStats run_stats(const ClosedLoopLog& log, const OCPConfig& ocp, double transient) {
  RunStats s;
  s.mse = tracking_mse(log, transient);
  s.controller_faults = log.controller_faults;
  s.solver_failures = log.solver_failures;
  for (const auto& r : log.records) {
    for (Eigen::Index k = 0; k < r.applied.cols(); ++k)
      s.control_violation = std::max(s.control_violation, ocp.control_polytope.violation(r.applied.col(k)));
    s.max_observation_norm = std::max(s.max_observation_norm, r.observed.norm());
    s.mean_scp_iters += r.scp_iters;
    s.solve_ms.push_back(r.qp_ms);
    if (r.t >= transient - 1e-12) {
      s.slack_max = std::max(s.slack_max, r.slack_max);
      s.performance_violation = std::max(s.performance_violation, ocp.performance_polytope.violation(r.output));
    }
  }
  s.mean_scp_iters /= static_cast<double>(log.records.size());
  return s;
}

inline Json run_stats_json(const RunStats& s) {
  double mean = 0.0;
  for (double v : s.solve_ms) mean += v;
  mean /= std::max<std::size_t>(1, s.solve_ms.size());
  return {{"mse", round_significant(s.mse.total)},
          {"mse_per_axis", vector_to_json(s.mse.per_axis)},
          {"samples", s.mse.samples},
          {"control_violation", round_significant(s.control_violation)},
          {"performance_violation", round_significant(s.performance_violation)},
          {"slack_max", round_significant(s.slack_max)},
          {"max_observation_norm", round_significant(s.max_observation_norm)},
          {"controller_faults", s.controller_faults},
          {"solver_failures", s.solver_failures},
          {"mean_scp_iters", round_significant(s.mean_scp_iters)},
          {"timing", {{"solve_ms_mean", round_significant(mean)},
                      {"solve_ms_p50", round_significant(percentile(s.solve_ms, 50.0))},
                      {"solve_ms_p95", round_significant(percentile(s.solve_ms, 95.0))},
                      {"solve_ms_max", round_significant(percentile(s.solve_ms, 100.0))}}}};
}

inline Json cmd_control(const PipelineConfig& cfg, const fs::path& out, std::ostream& log = std::cout) {
  validate_config(cfg);
  write_effective_config(cfg, out, "control");
  fs::create_directories(out / "logs");
  const BuiltPlant built = build_plant(cfg.plant);
  const SSMRModel model = model_from_json(read_json_file((out / "model.json").string()));
  std::optional<SSMRModel> linear;
  if (cfg.mpc.compare_linear && fs::exists(out / "model_linear.json"))
    linear = model_from_json(read_json_file((out / "model_linear.json").string()));
  require(built.system.state_dim() == model.embedding.raw_dim, ErrorKind::DimensionMismatch,
          "plant state size differs from the model observation size");

  ClosedLoopPlant plant;
  plant.system = built.system;
  plant.initial_state = built.rest_state;
  plant.integrator_step = cfg.plant.integrator_step;

  Json runs = Json::array();
  for (int horizon : cfg.mpc.horizons) {
    for (const auto& task : cfg.mpc.tasks) {
      const std::string tag = task.name + "_N" + std::to_string(horizon);
      const OCPConfig ocp = ocp_config(cfg, task, horizon, model.input_dim(), model.output_dim());
      const ReferenceFn ref = task_reference(task, model);
      Json entry;
      entry["task"] = task.name;
      entry["horizon"] = horizon;
      if (task.resonance) entry["period"] = round_significant(model.dynamics.slowest_period());

      const ClosedLoopLog ssmr_log = run_receding_horizon(plant, model, ref, ocp, cfg.mpc.duration);
      write_closed_loop_csv(ssmr_log, (out / "logs" / (tag + "_ssmr.csv")).string());
      entry["ssmr"] = run_stats_json(run_stats(ssmr_log, ocp, cfg.mpc.transient));
      entry["ssmr"]["log"] = "logs/" + tag + "_ssmr.csv";
      if (linear) {
        const ClosedLoopLog lin_log = run_receding_horizon(plant, *linear, ref, ocp, cfg.mpc.duration);
        write_closed_loop_csv(lin_log, (out / "logs" / (tag + "_linear.csv")).string());
        entry["linear"] = run_stats_json(run_stats(lin_log, ocp, cfg.mpc.transient));
        entry["linear"]["log"] = "logs/" + tag + "_linear.csv";
      }
      if (cfg.mpc.compare_zero) {
        const ClosedLoopLog zero_log = run_zero_control(plant, model, ref, ocp, cfg.mpc.duration);
        write_closed_loop_csv(zero_log, (out / "logs" / (tag + "_zero.csv")).string());
        entry["zero"] = run_stats_json(run_stats(zero_log, ocp, cfg.mpc.transient));
        entry["zero"]["log"] = "logs/" + tag + "_zero.csv";
      }
      log << "control: " << tag << " mse " << format_number(entry["ssmr"]["mse"].get<double>());
      if (entry.contains("linear")) log << " (linear " << format_number(entry["linear"]["mse"].get<double>()) << ")";
      if (entry.contains("zero")) log << " (zero " << format_number(entry["zero"]["mse"].get<double>()) << ")";
      log << ", faults " << entry["ssmr"]["controller_faults"].get<int>() << "\n";
      runs.push_back(entry);
    }
  }
  Json summary;
  summary["format"] = "ssmr-control-summary";
  summary["dt"] = cfg.mpc.dt;
  summary["rollout_horizon"] = cfg.mpc.rollout_horizon;
  summary["transient"] = cfg.mpc.transient;
  summary["runs"] = runs;
  write_json_file(summary, (out / "control_summary.json").string());
  return summary;
}

}  // namespace ssmr
