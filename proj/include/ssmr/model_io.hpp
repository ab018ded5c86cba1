#pragma once

// JSON model documents. Matrices are stored row-major as
// {"rows": r, "cols": c, "data": [...]} with values rounded to 15
// significant digits; monomial bases are stored as explicit exponent lists.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <string>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "ssmr/controllearn.hpp"
#include "ssmr/error.hpp"

namespace ssmr {

using Json = nlohmann::ordered_json;

inline double round_significant(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.15g", v);
  return std::strtod(buf, nullptr);
}

inline Json matrix_to_json(const Eigen::MatrixXd& m) {
  Json data = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) data.push_back(round_significant(m(i, j)));
  return Json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

inline Eigen::MatrixXd matrix_from_json(const Json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto& data = j.at("data");
  require(static_cast<Eigen::Index>(data.size()) == rows * cols, ErrorKind::ParseError, "matrix data size mismatch");
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = data[static_cast<std::size_t>(i * cols + c)].get<double>();
  return m;
}

inline Json vector_to_json(const Eigen::VectorXd& v) {
  Json data = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) data.push_back(round_significant(v(i)));
  return data;
}

inline Eigen::VectorXd vector_from_json(const Json& j) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  return v;
}

inline Json basis_to_json(const MultiIndexBasis& b) {
  return Json{{"n", b.dim()}, {"min_order", b.min_order()}, {"max_order", b.max_order()}, {"exponents", b.exponents()}};
}

inline MultiIndexBasis basis_from_json(const Json& j) {
  return MultiIndexBasis(j.at("n").get<int>(), j.at("min_order").get<int>(), j.at("max_order").get<int>(),
                         j.at("exponents").get<std::vector<Exponents>>());
}

struct ModelProvenance {
  std::string manifest_hash;
  std::string config_hash;
};

inline Json model_to_json(const SSMRModel& m, const ModelProvenance& prov = {}) {
  const bool discrete = m.dynamics.time == TimeSemantics::Discrete;
  Json j;
  j["format"] = "ssmr-model";
  j["version"] = 1;
  j["n"] = m.reduced_dim();
  j["p"] = m.obs_dim();
  j["m"] = m.input_dim();
  j["o"] = m.output_dim();
  j["n_w"] = m.geometry.order;
  j["n_r"] = m.dynamics.order;
  j["time_semantics"] = discrete ? "discrete" : "continuous";
  j["dt"] = discrete ? round_significant(m.dynamics.dt) : 0.0;
  j["embedding"] = {{"delays", m.embedding.delays},
                    {"raw_dim", m.embedding.raw_dim},
                    {"embedded_dim", m.embedding.embedded_dim()},
                    {"stride", m.embedding.stride},
                    {"order", "current-first"}};
  j["reduced_amplitude"] = round_significant(m.reduced_amplitude);
  j["y_eq"] = vector_to_json(m.geometry.equilibrium);
  j["z_eq"] = vector_to_json(m.performance_equilibrium);
  j["lift_basis"] = basis_to_json(m.geometry.lift_basis);
  j["dynamics_basis"] = basis_to_json(m.dynamics.basis);
  j["V"] = matrix_to_json(m.geometry.tangent_basis);
  j["W0"] = matrix_to_json(m.geometry.linear_lift);
  j["W"] = matrix_to_json(m.geometry.nonlinear_lift);
  j["R0"] = matrix_to_json(m.dynamics.linear_coeffs);
  j["R"] = matrix_to_json(m.dynamics.nonlinear_coeffs);
  j["B_r"] = matrix_to_json(m.control_matrix);
  j["C"] = matrix_to_json(m.performance_selector);
  j["provenance"] = {{"manifest_hash", prov.manifest_hash}, {"config_hash", prov.config_hash}};
  return j;
}

inline SSMRModel model_from_json(const Json& j) {
  require(j.value("format", "") == "ssmr-model", ErrorKind::ParseError, "not an ssmr model document");
  try {
    SSMRModel m;
    m.geometry.tangent_basis = matrix_from_json(j.at("V"));
    m.geometry.linear_lift = matrix_from_json(j.at("W0"));
    m.geometry.nonlinear_lift = matrix_from_json(j.at("W"));
    m.geometry.lift_basis = basis_from_json(j.at("lift_basis"));
    m.geometry.equilibrium = vector_from_json(j.at("y_eq"));
    m.geometry.order = j.at("n_w").get<int>();
    m.dynamics.linear_coeffs = matrix_from_json(j.at("R0"));
    m.dynamics.nonlinear_coeffs = matrix_from_json(j.at("R"));
    m.dynamics.basis = basis_from_json(j.at("dynamics_basis"));
    m.dynamics.order = j.at("n_r").get<int>();
    m.dynamics.time =
        j.at("time_semantics").get<std::string>() == "discrete" ? TimeSemantics::Discrete : TimeSemantics::Continuous;
    m.dynamics.dt = j.at("dt").get<double>();
    m.control_matrix = matrix_from_json(j.at("B_r"));
    m.performance_selector = matrix_from_json(j.at("C"));
    m.performance_equilibrium = vector_from_json(j.at("z_eq"));
    m.embedding.delays = j.at("embedding").at("delays").get<int>();
    m.embedding.raw_dim = j.at("embedding").at("raw_dim").get<int>();
    m.embedding.stride = j.at("embedding").at("stride").get<int>();
    m.reduced_amplitude = j.at("reduced_amplitude").get<double>();
    const int n = j.at("n").get<int>(), p = j.at("p").get<int>();
    require(m.geometry.tangent_basis.rows() == p && m.geometry.tangent_basis.cols() == n &&
                m.dynamics.linear_coeffs.rows() == n && m.geometry.nonlinear_lift.cols() == m.geometry.lift_basis.size() &&
                m.dynamics.nonlinear_coeffs.cols() == m.dynamics.basis.size(),
            ErrorKind::ParseError, "model matrices disagree with declared dimensions");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ParseError, e.what());
  }
}

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::IoError, "cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ParseError, path + ": " + e.what());
  }
}

inline void write_json_file(const Json& j, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorKind::IoError, "cannot open '" + path + "' for writing");
  out << j.dump(2) << '\n';
  require(static_cast<bool>(out), ErrorKind::IoError, "write failed for '" + path + "'");
}

}  // namespace ssmr
