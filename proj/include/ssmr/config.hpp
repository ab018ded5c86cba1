#pragma once

// Pipeline configuration: one JSON document with plant, data, fit,
// control_fit, mpc and output sections. Missing keys take defaults;
// to_json emits every field so parse -> emit -> parse is the identity.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ssmr/error.hpp"
#include "ssmr/model_io.hpp"
#include "ssmr/plant.hpp"

namespace ssmr {

struct PlantSection {
  std::string type = "benchmark";  // benchmark | chain
  std::uint64_t seed = 1;
  int reduced_dim = 2;
  int full_dim = 12;
  int outputs = 2;
  double integrator_step = 5e-4;
  BenchmarkOptions benchmark;
  ChainPlantParams chain;
  std::vector<int> chain_outputs = {};  // position indices forming z; empty: last mass
};

struct DataSection {
  int decay_count = 20;
  double decay_duration = 3.0;
  double sample_period = 1e-3;
  std::string ic_mode = "manifold";  // manifold (benchmark only) | preload
  double amplitude = 0.5;
  double off_manifold = 0.0;
  bool symmetric_pairs = true;
  double rest_duration = 0.1;
  int controlled_count = 4;
  double controlled_duration = 2.0;
  int truncation = -1;  // leading samples dropped from decays; -1: automatic
  int delays = 0;
  int stride = 1;
  double holdout_fraction = 0.2;
};

struct FitSection {
  int n = 2;
  int n_w = 2;
  int n_r = 3;
  double ridge = 0.0;
  std::string time = "continuous";  // continuous | discrete
  bool linear_baseline = true;
  bool enforce_invertibility = false;
  double max_condition = 1e12;
};

struct ControlFitSection {
  double lower = -1.0;
  double upper = 1.0;
  double hold_period = 0.01;
  double max_condition = 1e10;
};

struct TaskSection {
  std::string name = "figure-eight";
  std::string type = "figure-eight";  // figure-eight | circle | equilibrium
  std::array<double, 2> amplitudes = {0.1, 0.1};
  double radius = 0.1;
  double period = 2.0;
  bool resonance = false;  // period := learned slowest oscillation period
  std::array<int, 2> axes = {0, 1};
  std::vector<double> center_offset = {};      // added to z_eq; empty: zero
  std::vector<double> performance_lower = {};  // box on z; empty: none
  std::vector<double> performance_upper = {};
};

struct TrustRegionSection {
  double initial_radius = 0.0;
  double shrink = 0.5;
  double grow = 2.0;
  double accept_ratio = 0.1;
};

struct MpcSection {
  std::vector<int> horizons = {3};
  double dt = 0.01;
  int rollout_horizon = 1;
  double stage_weight = 1.0;  // Q = q I
  double terminal_weight = 1.0;
  double control_weight = 1e-4;  // R = r I
  double control_lower = -1.0;
  double control_upper = 1.0;
  double soft_penalty = 0.0;
  TrustRegionSection trust_region;
  double scp_tolerance = 1e-4;
  int scp_max_iters = 20;
  double duration = 4.0;
  double transient = 0.5;
  bool compare_linear = true;
  bool compare_zero = true;
  std::vector<TaskSection> tasks = {TaskSection{}};
};

struct OutputSection {
  bool plots = true;
};

struct PipelineConfig {
  PlantSection plant;
  DataSection data;
  FitSection fit;
  ControlFitSection control_fit;
  MpcSection mpc;
  OutputSection output;
};

namespace detail {

template <class T>
void read_key(const Json& j, const char* key, T& value) {
  if (j.contains(key)) value = j.at(key).get<T>();
}

inline const Json& section(const Json& j, const char* key) {
  static const Json empty = Json::object();
  if (!j.contains(key)) return empty;
  require(j.at(key).is_object(), ErrorKind::ParseError, std::string("config section '") + key + "' must be an object");
  return j.at(key);
}

}  // namespace detail

inline void validate_config(const PipelineConfig& c) {
  auto bad = [](bool cond, const std::string& what) { require(!cond, ErrorKind::InvalidArgument, "config: " + what); };
  bad(c.plant.type != "benchmark" && c.plant.type != "chain", "plant.type must be benchmark or chain");
  bad(c.plant.integrator_step <= 0.0, "plant.integrator_step must be positive");
  bad(c.data.ic_mode != "manifold" && c.data.ic_mode != "preload", "data.ic_mode must be manifold or preload");
  bad(c.data.ic_mode == "manifold" && c.plant.type != "benchmark", "manifold initial conditions need the benchmark");
  bad(c.data.decay_count < 1, "data.decay_count must be >= 1");
  bad(c.data.decay_duration <= 0.0 || c.data.sample_period <= 0.0, "durations and periods must be positive");
  bad(c.data.controlled_count < 0, "data.controlled_count must be >= 0");
  bad(c.data.delays < 0 || c.data.stride < 1, "invalid embedding");
  bad(c.data.holdout_fraction < 0.0 || c.data.holdout_fraction >= 1.0, "data.holdout_fraction must lie in [0, 1)");
  bad(c.fit.n < 1 || c.fit.n_w < 1 || c.fit.n_r < 1, "fit orders and n must be >= 1");
  bad(c.fit.time != "continuous" && c.fit.time != "discrete", "fit.time must be continuous or discrete");
  bad(c.fit.ridge < 0.0, "fit.ridge must be >= 0");
  bad(c.control_fit.lower > c.control_fit.upper, "control_fit bounds reversed");
  bad(c.control_fit.hold_period <= 0.0, "control_fit.hold_period must be positive");
  bad(c.mpc.horizons.empty(), "mpc.horizons must not be empty");
  bad(c.mpc.control_lower > c.mpc.control_upper, "mpc control bounds reversed");
  bad(c.mpc.duration <= 0.0 || c.mpc.dt <= 0.0, "mpc duration and dt must be positive");
  for (const auto& t : c.mpc.tasks) {
    bad(t.type != "figure-eight" && t.type != "circle" && t.type != "equilibrium", "unknown task type '" + t.type + "'");
    bad(t.name.empty(), "task name must not be empty");
    bad(!t.resonance && t.period <= 0.0, "task period must be positive");
    bad(t.performance_lower.size() != t.performance_upper.size(), "performance bounds must pair up");
  }
}

inline PipelineConfig config_from_json(const Json& j) {
  using detail::read_key;
  require(j.is_object(), ErrorKind::ParseError, "config must be a JSON object");
  PipelineConfig c;
  try {
    const Json& p = detail::section(j, "plant");
    read_key(p, "type", c.plant.type);
    read_key(p, "seed", c.plant.seed);
    read_key(p, "reduced_dim", c.plant.reduced_dim);
    read_key(p, "full_dim", c.plant.full_dim);
    read_key(p, "outputs", c.plant.outputs);
    read_key(p, "integrator_step", c.plant.integrator_step);
    const Json& b = detail::section(p, "benchmark");
    auto& bo = c.plant.benchmark;
    read_key(b, "inputs", bo.inputs);
    read_key(b, "decay_min", bo.decay_min);
    read_key(b, "decay_max", bo.decay_max);
    read_key(b, "freq_min_hz", bo.freq_min_hz);
    read_key(b, "freq_max_hz", bo.freq_max_hz);
    read_key(b, "transverse_min", bo.transverse_min);
    read_key(b, "transverse_max", bo.transverse_max);
    read_key(b, "gap_factor", bo.gap_factor);
    read_key(b, "cubic_damping", bo.cubic_damping);
    read_key(b, "frequency_shift", bo.frequency_shift);
    read_key(b, "cubic_random", bo.cubic_random);
    read_key(b, "lift_scale", bo.lift_scale);
    read_key(b, "performance_curvature", bo.performance_curvature);
    read_key(b, "performance_outputs", bo.performance_outputs);
    read_key(b, "input_scale", bo.input_scale);
    const Json& ch = detail::section(p, "chain");
    read_key(ch, "dof", c.plant.chain.dof);
    read_key(ch, "mass", c.plant.chain.mass);
    read_key(ch, "stiffness", c.plant.chain.stiffness);
    read_key(ch, "cubic", c.plant.chain.cubic);
    read_key(ch, "rayleigh_alpha", c.plant.chain.rayleigh_alpha);
    read_key(ch, "rayleigh_beta", c.plant.chain.rayleigh_beta);
    read_key(ch, "actuated", c.plant.chain.actuated);
    read_key(ch, "outputs", c.plant.chain_outputs);

    const Json& d = detail::section(j, "data");
    read_key(d, "decay_count", c.data.decay_count);
    read_key(d, "decay_duration", c.data.decay_duration);
    read_key(d, "sample_period", c.data.sample_period);
    read_key(d, "ic_mode", c.data.ic_mode);
    read_key(d, "amplitude", c.data.amplitude);
    read_key(d, "off_manifold", c.data.off_manifold);
    read_key(d, "symmetric_pairs", c.data.symmetric_pairs);
    read_key(d, "rest_duration", c.data.rest_duration);
    read_key(d, "controlled_count", c.data.controlled_count);
    read_key(d, "controlled_duration", c.data.controlled_duration);
    if (d.contains("truncation")) {
      const Json& t = d.at("truncation");
      if (t.is_string()) {
        require(t.get<std::string>() == "auto", ErrorKind::ParseError, "data.truncation must be 'auto' or a count");
        c.data.truncation = -1;
      } else {
        c.data.truncation = t.get<int>();
        require(c.data.truncation >= 0, ErrorKind::ParseError, "data.truncation must be >= 0");
      }
    }
    read_key(d, "delays", c.data.delays);
    read_key(d, "stride", c.data.stride);
    read_key(d, "holdout_fraction", c.data.holdout_fraction);

    const Json& f = detail::section(j, "fit");
    read_key(f, "n", c.fit.n);
    read_key(f, "n_w", c.fit.n_w);
    read_key(f, "n_r", c.fit.n_r);
    read_key(f, "ridge", c.fit.ridge);
    read_key(f, "time", c.fit.time);
    read_key(f, "linear_baseline", c.fit.linear_baseline);
    read_key(f, "enforce_invertibility", c.fit.enforce_invertibility);
    read_key(f, "max_condition", c.fit.max_condition);

    const Json& cf = detail::section(j, "control_fit");
    read_key(cf, "lower", c.control_fit.lower);
    read_key(cf, "upper", c.control_fit.upper);
    read_key(cf, "hold_period", c.control_fit.hold_period);
    read_key(cf, "max_condition", c.control_fit.max_condition);

    const Json& m = detail::section(j, "mpc");
    read_key(m, "horizons", c.mpc.horizons);
    read_key(m, "dt", c.mpc.dt);
    read_key(m, "rollout_horizon", c.mpc.rollout_horizon);
    read_key(m, "stage_weight", c.mpc.stage_weight);
    read_key(m, "terminal_weight", c.mpc.terminal_weight);
    read_key(m, "control_weight", c.mpc.control_weight);
    read_key(m, "control_lower", c.mpc.control_lower);
    read_key(m, "control_upper", c.mpc.control_upper);
    read_key(m, "soft_penalty", c.mpc.soft_penalty);
    const Json& tr = detail::section(m, "trust_region");
    read_key(tr, "initial_radius", c.mpc.trust_region.initial_radius);
    read_key(tr, "shrink", c.mpc.trust_region.shrink);
    read_key(tr, "grow", c.mpc.trust_region.grow);
    read_key(tr, "accept_ratio", c.mpc.trust_region.accept_ratio);
    read_key(m, "scp_tolerance", c.mpc.scp_tolerance);
    read_key(m, "scp_max_iters", c.mpc.scp_max_iters);
    read_key(m, "duration", c.mpc.duration);
    read_key(m, "transient", c.mpc.transient);
    read_key(m, "compare_linear", c.mpc.compare_linear);
    read_key(m, "compare_zero", c.mpc.compare_zero);
    if (m.contains("tasks")) {
      c.mpc.tasks.clear();
      for (const Json& t : m.at("tasks")) {
        TaskSection ts;
        read_key(t, "name", ts.name);
        read_key(t, "type", ts.type);
        read_key(t, "amplitudes", ts.amplitudes);
        read_key(t, "radius", ts.radius);
        if (t.contains("period") && t.at("period").is_string()) {
          require(t.at("period").get<std::string>() == "resonance", ErrorKind::ParseError,
                  "task period must be a number or 'resonance'");
          ts.resonance = true;
        } else {
          read_key(t, "period", ts.period);
        }
        read_key(t, "axes", ts.axes);
        read_key(t, "center_offset", ts.center_offset);
        read_key(t, "performance_lower", ts.performance_lower);
        read_key(t, "performance_upper", ts.performance_upper);
        c.mpc.tasks.push_back(std::move(ts));
      }
    }

    const Json& o = detail::section(j, "output");
    read_key(o, "plots", c.output.plots);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ParseError, std::string("config: ") + e.what());
  }
  validate_config(c);
  return c;
}

inline Json config_to_json(const PipelineConfig& c) {
  const auto& bo = c.plant.benchmark;
  Json j;
  j["plant"] = {{"type", c.plant.type},
                {"seed", c.plant.seed},
                {"reduced_dim", c.plant.reduced_dim},
                {"full_dim", c.plant.full_dim},
                {"outputs", c.plant.outputs},
                {"integrator_step", c.plant.integrator_step},
                {"benchmark",
                 {{"inputs", bo.inputs},
                  {"decay_min", bo.decay_min},
                  {"decay_max", bo.decay_max},
                  {"freq_min_hz", bo.freq_min_hz},
                  {"freq_max_hz", bo.freq_max_hz},
                  {"transverse_min", bo.transverse_min},
                  {"transverse_max", bo.transverse_max},
                  {"gap_factor", bo.gap_factor},
                  {"cubic_damping", bo.cubic_damping},
                  {"frequency_shift", bo.frequency_shift},
                  {"cubic_random", bo.cubic_random},
                  {"lift_scale", bo.lift_scale},
                  {"performance_curvature", bo.performance_curvature},
                  {"performance_outputs", bo.performance_outputs},
                  {"input_scale", bo.input_scale}}},
                {"chain",
                 {{"dof", c.plant.chain.dof},
                  {"mass", c.plant.chain.mass},
                  {"stiffness", c.plant.chain.stiffness},
                  {"cubic", c.plant.chain.cubic},
                  {"rayleigh_alpha", c.plant.chain.rayleigh_alpha},
                  {"rayleigh_beta", c.plant.chain.rayleigh_beta},
                  {"actuated", c.plant.chain.actuated},
                  {"outputs", c.plant.chain_outputs}}}};
  j["data"] = {{"decay_count", c.data.decay_count},
               {"decay_duration", c.data.decay_duration},
               {"sample_period", c.data.sample_period},
               {"ic_mode", c.data.ic_mode},
               {"amplitude", c.data.amplitude},
               {"off_manifold", c.data.off_manifold},
               {"symmetric_pairs", c.data.symmetric_pairs},
               {"rest_duration", c.data.rest_duration},
               {"controlled_count", c.data.controlled_count},
               {"controlled_duration", c.data.controlled_duration},
               {"truncation", c.data.truncation < 0 ? Json("auto") : Json(c.data.truncation)},
               {"delays", c.data.delays},
               {"stride", c.data.stride},
               {"holdout_fraction", c.data.holdout_fraction}};
  j["fit"] = {{"n", c.fit.n},
              {"n_w", c.fit.n_w},
              {"n_r", c.fit.n_r},
              {"ridge", c.fit.ridge},
              {"time", c.fit.time},
              {"linear_baseline", c.fit.linear_baseline},
              {"enforce_invertibility", c.fit.enforce_invertibility},
              {"max_condition", c.fit.max_condition}};
  j["control_fit"] = {{"lower", c.control_fit.lower},
                      {"upper", c.control_fit.upper},
                      {"hold_period", c.control_fit.hold_period},
                      {"max_condition", c.control_fit.max_condition}};
  Json tasks = Json::array();
  for (const auto& t : c.mpc.tasks)
    tasks.push_back({{"name", t.name},
                     {"type", t.type},
                     {"amplitudes", t.amplitudes},
                     {"radius", t.radius},
                     {"period", t.resonance ? Json("resonance") : Json(t.period)},
                     {"axes", t.axes},
                     {"center_offset", t.center_offset},
                     {"performance_lower", t.performance_lower},
                     {"performance_upper", t.performance_upper}});
  j["mpc"] = {{"horizons", c.mpc.horizons},
              {"dt", c.mpc.dt},
              {"rollout_horizon", c.mpc.rollout_horizon},
              {"stage_weight", c.mpc.stage_weight},
              {"terminal_weight", c.mpc.terminal_weight},
              {"control_weight", c.mpc.control_weight},
              {"control_lower", c.mpc.control_lower},
              {"control_upper", c.mpc.control_upper},
              {"soft_penalty", c.mpc.soft_penalty},
              {"trust_region",
               {{"initial_radius", c.mpc.trust_region.initial_radius},
                {"shrink", c.mpc.trust_region.shrink},
                {"grow", c.mpc.trust_region.grow},
                {"accept_ratio", c.mpc.trust_region.accept_ratio}}},
              {"scp_tolerance", c.mpc.scp_tolerance},
              {"scp_max_iters", c.mpc.scp_max_iters},
              {"duration", c.mpc.duration},
              {"transient", c.mpc.transient},
              {"compare_linear", c.mpc.compare_linear},
              {"compare_zero", c.mpc.compare_zero},
              {"tasks", tasks}};
  j["output"] = {{"plots", c.output.plots}};
  return j;
}

inline PipelineConfig load_config(const std::string& path) { return config_from_json(read_json_file(path)); }

}  // namespace ssmr
