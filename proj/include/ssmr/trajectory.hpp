#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ssmr/error.hpp"

namespace ssmr {

enum class TrajectoryKind { Decay, Controlled };

inline std::string to_string(TrajectoryKind kind) {
  return kind == TrajectoryKind::Decay ? "decay" : "controlled";
}

inline TrajectoryKind trajectory_kind_from_string(const std::string& s) {
  if (s == "decay") return TrajectoryKind::Decay;
  if (s == "controlled") return TrajectoryKind::Controlled;
  throw Error(ErrorKind::ParseError, "unknown trajectory kind '" + s + "'");
}

/// Uniformly sampled observations, one column per sample. controls is either
/// empty (0 rows) or has one column per sample holding the input applied from
/// that timestamp until the next one.
struct Trajectory {
  Eigen::VectorXd timestamps;
  Eigen::MatrixXd observations;
  Eigen::MatrixXd controls;
  TrajectoryKind kind = TrajectoryKind::Decay;

  Eigen::Index samples() const { return timestamps.size(); }
  Eigen::Index obs_dim() const { return observations.rows(); }
  Eigen::Index input_dim() const { return controls.rows(); }
  bool has_controls() const { return controls.rows() > 0; }

  double sample_period() const {
    require(samples() >= 2, ErrorKind::TooShortTrajectory, "sample period needs >= 2 samples");
    return (timestamps(samples() - 1) - timestamps(0)) / static_cast<double>(samples() - 1);
  }

  /// Checks row/column consistency and uniform spacing (gap deviation < 1e-9 s).
  void validate() const {
    require(observations.cols() == samples(), ErrorKind::InconsistentDims,
            "observation count differs from timestamp count");
    require(!has_controls() || controls.cols() == samples(), ErrorKind::InconsistentDims,
            "control count differs from timestamp count");
    if (samples() < 2) return;
    const double h = timestamps(1) - timestamps(0);
    require(h > 0.0, ErrorKind::InconsistentSampling, "timestamps not increasing");
    for (Eigen::Index k = 1; k < samples(); ++k)
      require(std::abs(timestamps(k) - timestamps(k - 1) - h) < 1e-9,
              ErrorKind::InconsistentSampling, "non-uniform sampling");
  }
};

inline std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.15g", v);
  return buf;
}

/// CSV layout: header "t,y_1..y_p,u_1..u_m", one sample per row, 15
/// significant digits.
inline void write_trajectory_csv(const Trajectory& traj, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorKind::IoError, "cannot open '" + path + "' for writing");
  out << "t";
  for (Eigen::Index i = 0; i < traj.obs_dim(); ++i) out << ",y_" << i + 1;
  for (Eigen::Index i = 0; i < traj.input_dim(); ++i) out << ",u_" << i + 1;
  out << '\n';
  for (Eigen::Index k = 0; k < traj.samples(); ++k) {
    out << format_number(traj.timestamps(k));
    for (Eigen::Index i = 0; i < traj.obs_dim(); ++i) out << ',' << format_number(traj.observations(i, k));
    for (Eigen::Index i = 0; i < traj.input_dim(); ++i) out << ',' << format_number(traj.controls(i, k));
    out << '\n';
  }
  require(static_cast<bool>(out), ErrorKind::IoError, "write failed for '" + path + "'");
}

inline Trajectory read_trajectory_csv(const std::string& path, TrajectoryKind kind) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::IoError, "cannot open '" + path + "'");
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), ErrorKind::ParseError, "empty CSV '" + path + "'");
  Eigen::Index p = 0, m = 0;
  {
    std::stringstream header(line);
    std::string cell;
    std::getline(header, cell, ',');
    require(cell == "t", ErrorKind::ParseError, "CSV header must start with 't'");
    while (std::getline(header, cell, ',')) {
      if (cell.rfind("y_", 0) == 0) {
        require(m == 0, ErrorKind::ParseError, "observation column after control column");
        ++p;
      } else if (cell.rfind("u_", 0) == 0) {
        ++m;
      } else {
        throw Error(ErrorKind::ParseError, "unexpected CSV column '" + cell + "'");
      }
    }
  }
  std::vector<double> values;
  Eigen::Index rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream row(line);
    std::string cell;
    Eigen::Index count = 0;
    while (std::getline(row, cell, ',')) {
      values.push_back(std::stod(cell));
      ++count;
    }
    require(count == 1 + p + m, ErrorKind::ParseError, "ragged CSV row in '" + path + "'");
    ++rows;
  }
  Trajectory traj;
  traj.kind = kind;
  traj.timestamps.resize(rows);
  traj.observations.resize(p, rows);
  traj.controls.resize(m, rows);
  const Eigen::Index width = 1 + p + m;
  for (Eigen::Index k = 0; k < rows; ++k) {
    traj.timestamps(k) = values[k * width];
    for (Eigen::Index i = 0; i < p; ++i) traj.observations(i, k) = values[k * width + 1 + i];
    for (Eigen::Index i = 0; i < m; ++i) traj.controls(i, k) = values[k * width + 1 + p + i];
  }
  return traj;
}

}  // namespace ssmr
