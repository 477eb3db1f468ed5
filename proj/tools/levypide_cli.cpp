#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "levypide/app.hpp"

using levypide::app::ExitCode;

int main(int argc, char** argv) {
  CLI::App app{"Monte Carlo particle solver for Levy-driven nonlinear PIDEs"};
  app.require_subcommand(1);

  std::string config;
  for (const char* name : {"solve", "probe-gradient", "flow-test", "oracle"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("config", config, "YAML config file")->required();
  }
  auto* accept = app.add_subcommand("accept", "Run the acceptance criteria");
  std::string filter, json_out;
  accept->add_option("--filter", filter, "Comma-separated criterion ids or a name substring");
  accept->add_option("--json", json_out, "Write the pass/fail summary here");

  CLI11_PARSE(app, argc, argv);

  const auto* sub = app.get_subcommands().front();
  if (sub == accept) {
    const auto results = levypide::app::run_acceptance(filter, std::cout);
    const std::string summary = levypide::app::acceptance_json(results);
    if (!json_out.empty()) {
      std::ofstream(json_out) << summary << '\n';
    } else {
      std::cout << summary << '\n';
    }
    bool ok = !results.empty();
    for (const auto& r : results) ok = ok && r.passed;
    return static_cast<int>(ok ? ExitCode::ok : ExitCode::acceptance_failed);
  }
  return static_cast<int>(levypide::app::run_experiment(sub->get_name(), config, std::cerr));
}
