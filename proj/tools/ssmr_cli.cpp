// ssmr: data generation, fitting, validation, closed-loop control and
// reporting for SSM-reduced models.

#include <exception>
#include <functional>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "ssmr/config.hpp"
#include "ssmr/pipeline.hpp"
#include "ssmr/report.hpp"

namespace {

int run_stage(const std::string& stage, const std::string& config_path, const std::string& out,
              const std::function<void(const ssmr::PipelineConfig&, const std::filesystem::path&)>& body) {
  try {
    const ssmr::PipelineConfig cfg = ssmr::load_config(config_path);
    body(cfg, out);
    return 0;
  } catch (const ssmr::Error& e) {
    std::cerr << "ssmr " << stage << ": error: " << e.what() << "\n";
  } catch (const std::exception& e) {
    std::cerr << "ssmr " << stage << ": error: " << e.what() << "\n";
  }
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SSM-reduced modelling and control pipeline"};
  app.require_subcommand(1);

  struct Stage {
    const char* name;
    const char* help;
    std::function<void(const ssmr::PipelineConfig&, const std::filesystem::path&)> body;
  };
  const Stage stages[] = {
      {"generate-data", "simulate decay and controlled trajectories",
       [](const auto& c, const auto& o) { ssmr::cmd_generate_data(c, o); }},
      {"fit", "fit the SSM geometry, reduced dynamics and control matrix",
       [](const auto& c, const auto& o) { ssmr::cmd_fit(c, o); }},
      {"validate", "held-out invariance residuals and spectrum",
       [](const auto& c, const auto& o) { ssmr::cmd_validate(c, o); }},
      {"control", "run the configured closed-loop tasks", [](const auto& c, const auto& o) { ssmr::cmd_control(c, o); }},
      {"report", "write plots and the summary table", [](const auto& c, const auto& o) { ssmr::cmd_report(c, o); }},
  };

  std::string config, out;
  int status = 0;
  for (const auto& s : stages) {
    CLI::App* sub = app.add_subcommand(s.name, s.help);
    sub->add_option("--config", config, "pipeline config (JSON)")->required();
    sub->add_option("--out", out, "output directory")->required();
    sub->callback([&, name = std::string(s.name), body = s.body] { status = run_stage(name, config, out, body); });
  }
  CLI11_PARSE(app, argc, argv);
  return status;
}
