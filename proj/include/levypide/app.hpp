#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "levypide/errors.hpp"
#include "levypide/oracle.hpp"
#include "levypide/pide.hpp"
#include "levypide/sfde.hpp"

namespace levypide::app {

/// Process exit status of the command-line tool.
enum class ExitCode : int {
  ok = 0,
  error = 1,  ///< Bad config, I/O, or a numerical failure without its own code.
  non_contraction = 2,
  blowup_detected = 3,
  mode_error = 4,
  budget_exceeded = 5,
  acceptance_failed = 6,
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

struct OutputConfig {
  std::string directory = "out";
  std::string name = "run";
  bool forward_time = false;
  bool dump_paths = false;
};

struct ProbeConfig {
  std::string phi = "step";  ///< step | sin
  GradientProbeConfig probe;
};

struct FlowConfig {
  CouplingMode mode = CouplingMode::drift_only;
  std::string coefficient = "constant";  ///< constant | linear | sin
  double a = 0.0, b = 1.0;
  double t1 = -1.0, t2 = -0.5, t3 = 0.0;
  std::vector<double> x{0.0};
  std::size_t paths = 10000;
  double dt = 1.0 / 64.0;
};

struct OracleConfig {
  std::string kind = "spectral";  ///< cole_hopf | spectral | convolution
  int modes = 128;
  double period_scale = 1.0;
  double t = -0.5;
  double dt = 1.0 / 1024.0;
  double output_dt = 1.0 / 64.0;
  double nu = 0.5;
  double alpha = 2.0;
  double advection = 1.0;
};

struct RunConfig {
  std::uint64_t seed = 0;
  std::string builtin;
  PideProblem problem;
  SolverConfig solver;
  /// A blow-up flag fails the run when the intent was a global solve.
  bool global_intent = true;
  OutputConfig output;
  ProbeConfig probe;
  FlowConfig flow;
  OracleConfig oracle;
  /// Scalar 1D terminal data, kept for the oracle and probe commands.
  std::function<double(double)> phi1;
};

/// YAML config. Unknown keys are rejected and `seed` is mandatory.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

/// Output directory after applying the LEVYPIDE_OUTPUT_ROOT override.
std::string output_directory(const OutputConfig& output);

/// Runs `command` (solve, probe-gradient, flow-test, oracle) and writes its
/// artifacts. Always writes a report, also on failure.
ExitCode run_experiment(const std::string& command, const std::string& config_path, std::ostream& log);

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

/// Acceptance criteria whose id or name matches `filter` (comma-separated ids
/// or a name substring; empty runs all). One line per criterion goes to `log`.
std::vector<CriterionResult> run_acceptance(const std::string& filter, std::ostream& log);

/// JSON summary of acceptance results.
std::string acceptance_json(const std::vector<CriterionResult>& results);

}  // namespace levypide::app
