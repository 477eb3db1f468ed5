#include <json.hpp>

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <ostream>

#include <omp.h>

#include "levypide/app.hpp"

namespace levypide::app {

namespace {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

json window_json(const WindowReport& w) {
  return {{"start_time", w.start_time},   {"end_time", w.end_time},   {"residuals", w.residuals},
          {"contraction_ratio", w.contraction_ratio}, {"converged", w.converged}, {"halvings", w.halvings}};
}

json report_json(const SolveReport& r) {
  json j;
  j["mode"] = r.mode;
  j["windows"] = json::array();
  for (const auto& w : r.windows) j["windows"].push_back(window_json(w));
  j["rejected_windows"] = json::array();
  for (const auto& w : r.rejected_windows) j["rejected_windows"].push_back(window_json(w));
  j["times"] = r.times;
  j["sup_norms"] = r.sup_norms;
  j["lipschitz_norms"] = r.lipschitz_norms;
  j["std_errors"] = r.std_errors;
  j["interpolation_bounds"] = r.interpolation_bounds;
  j["blow_up"] = r.blow_up;
  j["t_max"] = r.blow_up ? json(r.t_max) : json(nullptr);
  j["blowup_threshold"] = r.blowup_threshold;
  j["completed_time"] = r.completed_time;
  j["particles"] = r.particles;
  j["seed"] = r.seed;
  j["apriori_checks"] = r.apriori_checks;
  j["apriori_violations"] = r.apriori_violations;
  j["apriori_worst_excess"] = std::isfinite(r.apriori_worst_excess) ? json(r.apriori_worst_excess) : json(nullptr);
  j["phi_sup"] = r.phi_sup;
  j["phi_lipschitz"] = r.phi_lipschitz;
  j["exit_fraction"] = r.exit_fraction;
  j["notes"] = r.notes;
  return j;
}

void write_json(const fs::path& file, const json& j) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out << j.dump(2) << '\n';
}

std::string summary_table(const SolveReport& r) {
  std::string s;
  char line[160];
  s += "mode " + r.mode + ", particles " + std::to_string(r.particles) + ", seed " + std::to_string(r.seed) + "\n";
  s += "        t        sup|u|       Lip(u)        sigma\n";
  for (std::size_t i = 0; i < r.times.size(); ++i) {
    std::snprintf(line, sizeof line, "%9.5f  %12.6g %12.6g %12.3g\n", r.times[i], r.sup_norms[i], r.lipschitz_norms[i],
                  r.std_errors[i]);
    s += line;
  }
  s += "windows (residual history):\n";
  for (const auto& w : r.windows) {
    std::snprintf(line, sizeof line, "  [%g, %g] ratio %.3g:", w.start_time, w.end_time, w.contraction_ratio);
    s += line;
    for (double v : w.residuals) {
      std::snprintf(line, sizeof line, " %.3g", v);
      s += line;
    }
    s += "\n";
  }
  if (!r.rejected_windows.empty()) s += "rejected windows: " + std::to_string(r.rejected_windows.size()) + "\n";
  if (r.blow_up) {
    std::snprintf(line, sizeof line, "blow-up detected, T_max = %g\n", r.t_max);
    s += line;
  } else {
    s += "no blow-up\n";
  }
  std::snprintf(line, sizeof line, "a-priori bound: %zu checks, %zu violations\n", r.apriori_checks,
                r.apriori_violations);
  s += line;
  return s;
}

struct Outcome {
  ExitCode code = ExitCode::ok;
  json report;
};

CoefficientFn flow_coefficient(const FlowConfig& f, int d, int m) {
  const std::string kind = f.coefficient;
  if (kind != "constant" && kind != "linear" && kind != "sin") {
    throw ConfigError("flow: coefficient must be constant, linear or sin");
  }
  const bool drift = f.mode == CouplingMode::drift_only;
  return [f, kind, d, m, drift](double, std::span<const double> x, std::span<double> out) {
    std::fill(out.begin(), out.end(), 0.0);
    for (int i = 0; i < d; ++i) {
      double v = f.b;
      if (kind == "linear") v += f.a * x[i];
      if (kind == "sin") v += f.a * std::sin(x[i]);
      if (drift) {
        out[i] = v;
      } else if (i < m) {
        out[i + i * d] = v;
      }
    }
  };
}

Outcome run_solve(const RunConfig& cfg, const fs::path& dir, std::ostream& log) {
  Outcome o;
  const SolveResult result = solve(cfg.problem, cfg.solver);
  const auto& r = result.report;
  write_field(result.field, (dir / (cfg.output.name + "_field")).string(), cfg.output.forward_time);
  o.report["solve"] = report_json(r);
  const std::string summary = summary_table(r);
  std::ofstream(dir / (cfg.output.name + "_summary.txt"), std::ios::binary) << summary;
  log << summary;
  if (cfg.output.dump_paths) {
    const auto& field = result.field;
    const std::size_t centre = cfg.solver.space.size() / 2;
    const auto x0 = cfg.solver.space.node(centre);
    const CouplingMode mode = coupling_mode(cfg.problem.mode);
    const PideProblem& pb = cfg.problem;
    CoefficientFn coef = [&](double s, std::span<const double> x, std::span<double> out) {
      const Eigen::VectorXd u = field.eval(s, x);
      if (pb.G) {
        pb.G(s, x, {u.data(), static_cast<std::size_t>(u.size())}, out);
      } else {
        std::fill(out.begin(), out.end(), 0.0);
      }
    };
    for (std::uint64_t p = 0; p < 5; ++p) {
      const auto path = simulate_path(mode, coef, pb.triple, field.time().horizon(), x0, field.time(), cfg.seed, p);
      write_path_csv(path, (dir / (cfg.output.name + "_path" + std::to_string(p) + ".csv")).string());
    }
  }
  if (r.blow_up && cfg.global_intent) o.code = ExitCode::blowup_detected;
  return o;
}

Outcome run_probe(const RunConfig& cfg, std::ostream& log) {
  Outcome o;
  const auto res = gradient_decay_probe(cfg.problem.triple, cfg.phi1, cfg.probe.probe);
  o.report["probe"] = {{"deltas", res.deltas},
                       {"gradient_norms", res.gradient_norms},
                       {"std_errors", res.std_errors},
                       {"slope", res.slope},
                       {"slope_std_error", res.slope_std_error}};
  log << "gradient decay slope " << res.slope << " +- " << res.slope_std_error << "\n";
  return o;
}

Outcome run_flow(const RunConfig& cfg, std::ostream& log) {
  Outcome o;
  const auto& f = cfg.flow;
  const int d = cfg.problem.triple.dim();
  if (static_cast<int>(f.x.size()) != d) throw ConfigError("flow: x has the wrong dimension");
  const TimeGrid grid(std::min(f.t1, -f.dt), f.dt);
  const auto res = flow_test(f.mode, flow_coefficient(f, d, d), cfg.problem.triple, f.t1, f.t2, f.t3, f.x, f.paths,
                             grid, cfg.seed);
  const bool passed = res.pathwise_gap <= 1e-12 && res.ks_statistic < res.ks_critical;
  o.report["flow"] = {{"pathwise_gap", res.pathwise_gap},
                      {"ks_statistic", res.ks_statistic},
                      {"ks_critical", res.ks_critical},
                      {"paths", res.paths},
                      {"passed", passed}};
  log << "flow test: pathwise gap " << res.pathwise_gap << ", KS " << res.ks_statistic << " (critical "
      << res.ks_critical << ")\n";
  if (!passed) o.code = ExitCode::error;
  return o;
}

Outcome run_oracle(const RunConfig& cfg, const fs::path& dir, std::ostream& log) {
  Outcome o;
  const auto& oc = cfg.oracle;
  const oracle::PeriodicSpectralGrid grid(oc.modes, oc.period_scale);
  const std::string stem = (dir / (cfg.output.name + "_oracle")).string();
  if (oc.kind == "spectral") {
    oracle::SpectralProblem sp{oc.nu, oc.alpha, oc.advection, cfg.phi1, {}};
    oracle::SpectralOptions opt;
    opt.dt = oc.dt;
    opt.output_dt = oc.output_dt;
    const auto field = oracle::spectral_fractal_solve(sp, grid, oc.t, opt);
    write_field(field, stem, cfg.output.forward_time);
  } else if (oc.kind == "cole_hopf") {
    const TimeGrid time(oc.t, oc.output_dt);
    SpaceTimeField field(cfg.solver.space, time, 1);
    double worst = 0.0;
    for (int i = 0; i < time.nodes(); ++i) {
      for (std::size_t n = 0; n < field.space().size(); ++n) {
        const auto v = oracle::cole_hopf_burgers(cfg.phi1, oc.nu, time.time(i), field.space().node(n)[0]);
        field.at(i, n) = v.value;
        worst = std::max(worst, v.error);
      }
    }
    write_field(field, stem, cfg.output.forward_time);
    o.report["oracle"]["quadrature_error"] = worst;
  } else if (oc.kind == "convolution") {
    const TimeGrid time(oc.t, oc.output_dt);
    SpaceTimeField field(grid.space_grid(), time, 1);
    std::vector<double> phi;
    for (double x : grid.nodes()) phi.push_back(cfg.phi1(x));
    for (int i = 0; i < time.nodes(); ++i) {
      const auto u = oracle::linear_convolution_solve(cfg.problem.triple, grid, phi, time.time(i));
      for (int j = 0; j < oc.modes; ++j) field.at(i, j) = u[j];
      field.at(i, oc.modes) = u[0];
    }
    write_field(field, stem, cfg.output.forward_time);
  } else {
    throw ConfigError("oracle: kind must be cole_hopf, spectral or convolution");
  }
  o.report["oracle"]["kind"] = oc.kind;
  log << "oracle field written to " << stem << ".csv\n";
  return o;
}

}  // namespace

ExitCode run_experiment(const std::string& command, const std::string& config_path, std::ostream& log) {
  const auto started = std::chrono::steady_clock::now();
  Outcome outcome;
  std::string error;
  OutputConfig output;
  fs::path dir;
  try {
    RunConfig cfg = load_config(config_path);
    output = cfg.output;
    dir = output_directory(output);
    fs::create_directories(dir);
    if (command == "solve") {
      outcome = run_solve(cfg, dir, log);
    } else if (command == "probe-gradient") {
      outcome = run_probe(cfg, log);
    } else if (command == "flow-test") {
      outcome = run_flow(cfg, log);
    } else if (command == "oracle") {
      outcome = run_oracle(cfg, dir, log);
    } else {
      throw ConfigError("unknown command '" + command + "'");
    }
  } catch (const NonContraction& e) {
    outcome.code = ExitCode::non_contraction;
    outcome.report["solve"] = report_json(e.report());
    error = e.what();
  } catch (const ModeError& e) {
    outcome.code = ExitCode::mode_error;
    error = e.what();
  } catch (const BudgetExceeded& e) {
    outcome.code = ExitCode::budget_exceeded;
    error = e.what();
  } catch (const std::exception& e) {
    outcome.code = ExitCode::error;
    error = e.what();
  }
  if (dir.empty()) dir = output_directory(output);
  json report;
  report["command"] = command;
  report["status"] = outcome.code == ExitCode::ok ? "ok" : "failed";
  report["exit_code"] = static_cast<int>(outcome.code);
  report["error"] = error.empty() ? json(nullptr) : json(error);
  for (auto& [key, value] : outcome.report.items()) report[key] = value;
  try {
    fs::create_directories(dir);
    write_json(dir / (output.name + "_report.json"), report);
    // Wall-clock data lives apart from the deterministic payloads.
    const std::time_t now = std::time(nullptr);
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    write_json(dir / (output.name + "_meta.json"),
               {{"finished_utc", stamp},
                {"wall_seconds", std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count()},
                {"threads", omp_get_max_threads()},
                {"config", config_path}});
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    if (outcome.code == ExitCode::ok) outcome.code = ExitCode::error;
  }
  if (!error.empty()) log << "error: " << error << "\n";
  return outcome.code;
}

}  // namespace levypide::app
