#pragma once

// report stage: SVG tracking plots and a markdown table built from
// control_summary.json and the closed-loop CSV logs.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "ssmr/config.hpp"
#include "ssmr/error.hpp"
#include "ssmr/model_io.hpp"
#include "ssmr/pipeline.hpp"
#include "ssmr/trajectory.hpp"

namespace ssmr {

struct NumericTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  int column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return static_cast<int>(i);
    return -1;
  }
};

inline NumericTable read_numeric_csv(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::IoError, "cannot open '" + path + "'");
  NumericTable t;
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), ErrorKind::ParseError, path + ": missing header");
  std::stringstream hs(line);
  for (std::string cell; std::getline(hs, cell, ',');) t.header.push_back(cell);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw Error(ErrorKind::ParseError, path + ": bad number '" + cell + "'");
      }
    }
    require(row.size() == t.header.size(), ErrorKind::ParseError, path + ": ragged row");
    t.rows.push_back(std::move(row));
  }
  return t;
}

/// One panel per output axis: achieved z (solid) against z-bar (dashed).
inline std::string tracking_svg(const NumericTable& log, const std::string& title) {
  int outputs = 0;
  while (log.column("z_" + std::to_string(outputs + 1)) >= 0) ++outputs;
  const double width = 640, panel = 200, margin = 40;
  const double height = margin + outputs * (panel + margin);
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
  s << "<text x=\"" << margin << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\">" << title << "</text>\n";
  const int tc = log.column("t");
  if (log.rows.empty() || tc < 0) {
    s << "</svg>\n";
    return s.str();
  }
  const double t0 = log.rows.front()[tc], t1 = std::max(log.rows.back()[tc], t0 + 1e-12);
  for (int a = 0; a < outputs; ++a) {
    const int zc = log.column("z_" + std::to_string(a + 1));
    const int rc = log.column("zbar_" + std::to_string(a + 1));
    double lo = INFINITY, hi = -INFINITY;
    for (const auto& r : log.rows) {
      lo = std::min({lo, r[zc], r[rc]});
      hi = std::max({hi, r[zc], r[rc]});
    }
    if (!(hi > lo)) {
      lo -= 1.0;
      hi += 1.0;
    }
    const double top = margin + a * (panel + margin);
    auto px = [&](double t) { return margin + (width - 2 * margin) * (t - t0) / (t1 - t0); };
    auto py = [&](double v) { return top + panel - panel * (v - lo) / (hi - lo); };
    s << "<rect x=\"" << margin << "\" y=\"" << top << "\" width=\"" << width - 2 * margin << "\" height=\"" << panel
      << "\" fill=\"none\" stroke=\"#999\"/>\n";
    s << "<text x=\"" << margin + 4 << "\" y=\"" << top + 14 << "\" font-family=\"sans-serif\" font-size=\"11\">z_"
      << a + 1 << " [" << format_number(lo) << ", " << format_number(hi) << "]</text>\n";
    for (int which = 0; which < 2; ++which) {
      const int col = which == 0 ? rc : zc;
      s << "<polyline fill=\"none\" stroke=\"" << (which == 0 ? "#d62728" : "#1f77b4") << "\""
        << (which == 0 ? " stroke-dasharray=\"5,3\"" : "") << " points=\"";
      char buf[64];
      for (const auto& r : log.rows) {
        std::snprintf(buf, sizeof buf, "%.2f,%.2f ", px(r[tc]), py(r[col]));
        s << buf;
      }
      s << "\"/>\n";
    }
  }
  s << "</svg>\n";
  return s.str();
}

inline std::string cell(const Json& entry, const char* controller, const char* key) {
  if (!entry.contains(controller)) return "-";
  const Json& c = entry.at(controller);
  if (c.contains(key)) return format_number(c.at(key).get<double>());
  if (c.contains("timing") && c.at("timing").contains(key)) return format_number(c.at("timing").at(key).get<double>());
  return "-";
}

/// Returns the number of plots written.
inline int cmd_report(const PipelineConfig& cfg, const fs::path& out, std::ostream& log = std::cout) {
  write_effective_config(cfg, out, "report");
  fs::create_directories(out / "report");
  std::ostringstream md;
  md << "# Closed-loop report\n\n";
  const fs::path summary_path = out / "control_summary.json";
  Json runs = Json::array();
  if (fs::exists(summary_path)) runs = read_json_file(summary_path.string()).at("runs");
  int plots = 0;
  if (runs.empty()) {
    md << "No runs: control_summary.json lists no closed-loop runs.\n";
  } else {
    md << "Tracking MSE (mean of ||z - zbar||^2 after the transient) and mean QP time per control step.\n\n";
    md << "| Task | N | e_SSMR | e_linear | e_zero | SSMR ms | linear ms | faults |\n";
    md << "|---|---|---|---|---|---|---|---|\n";
    for (const Json& e : runs) {
      md << "| " << e.at("task").get<std::string>() << " | " << e.at("horizon").get<int>() << " | "
         << cell(e, "ssmr", "mse") << " | " << cell(e, "linear", "mse") << " | " << cell(e, "zero", "mse") << " | "
         << cell(e, "ssmr", "solve_ms_mean") << " | " << cell(e, "linear", "solve_ms_mean") << " | "
         << e.at("ssmr").at("controller_faults").get<int>() << " |\n";
      if (cfg.output.plots) {
        const std::string tag = e.at("task").get<std::string>() + "_N" + std::to_string(e.at("horizon").get<int>());
        const NumericTable t = read_numeric_csv((out / e.at("ssmr").at("log").get<std::string>()).string());
        std::ofstream svg(out / "report" / (tag + ".svg"));
        require(static_cast<bool>(svg), ErrorKind::IoError, "cannot write plot for " + tag);
        svg << tracking_svg(t, tag + " (dashed: reference)");
        ++plots;
      }
    }
    if (plots) {
      md << "\nPlots:\n\n";
      for (const Json& e : runs) {
        const std::string tag = e.at("task").get<std::string>() + "_N" + std::to_string(e.at("horizon").get<int>());
        md << "- ![" << tag << "](" << tag << ".svg)\n";
      }
    }
  }
  std::ofstream f(out / "report" / "report.md");
  require(static_cast<bool>(f), ErrorKind::IoError, "cannot write report.md");
  f << md.str();
  log << "report: " << runs.size() << " runs, " << plots << " plots\n";
  return plots;
}

}  // namespace ssmr
