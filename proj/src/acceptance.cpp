#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <sstream>

#include "levypide/app.hpp"
#include "levypide/stats.hpp"

namespace levypide::app {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
constexpr double kPi = std::numbers::pi;

struct Verdict {
  bool passed = false;
  std::string detail;
};

std::string fmt(const char* pattern, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, pattern, args...);
  return buf;
}

// Shared runs. Criterion 4 produces the Burgers field reused by 7 and 12, and
// every solve report feeds the a-priori check of criterion 8.
struct Suite {
  fs::path work;
  std::optional<SpaceTimeField> burgers;
  std::string burgers_csv;
  json burgers_report;
  struct Apriori {
    std::string run;
    std::size_t checks = 0, violations = 0;
    double worst = 0.0;
  };
  std::vector<Apriori> apriori;

  void record(const std::string& run, const SolveReport& r) {
    apriori.push_back({run, r.apriori_checks, r.apriori_violations, r.apriori_worst_excess});
  }
};

std::string slurp(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double sin_phi(double x) { return std::sin(x); }

// 1. Empirical characteristic function of N increments against exp(dt Psi).
Verdict characteristic_function(Suite&) {
  struct Case {
    std::string name;
    LevyTriple triple;
  };
  GaussianJumpLaw law;
  law.mean = Eigen::VectorXd::Constant(1, 0.5);
  law.stddev = 0.7;
  const std::vector<Case> cases{
      {"brownian A=I (2d)", LevyTriple::brownian(2, 1.0)},
      {"stable 0.8", LevyTriple::alpha_stable(1, 0.8, 1.0)},
      {"stable 1.5", LevyTriple::alpha_stable(1, 1.5, 1.0)},
      {"compound poisson rate 2", LevyTriple(Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Zero(1, 1),
                                             CompoundPoisson{2.0, law})},
  };
  const std::size_t n = 100000;
  const double dt = 0.5;
  const double bound = 3.0 / std::sqrt(static_cast<double>(n));
  const std::vector<double> xis{-2.0, -0.5, 0.3, 1.0, 2.5};
  double worst = 0.0;
  std::string worst_case;
  std::uint64_t seed = 11;
  for (const auto& c : cases) {
    const int m = c.triple.dim();
    std::vector<double> samples(n * m);
    const NoiseStream noise(seed++, 0);
    for (std::size_t p = 0; p < n; ++p) {
      auto step = noise.step(p);
      sample_increment(c.triple, dt, step, {samples.data() + p * m, static_cast<std::size_t>(m)});
    }
    for (double xi0 : xis) {
      std::vector<double> xi(m, 0.0);
      xi[0] = xi0;
      if (m > 1) xi[1] = -0.5 * xi0;
      std::complex<double> acc = 0.0;
      for (std::size_t p = 0; p < n; ++p) {
        double dot = 0.0;
        for (int i = 0; i < m; ++i) dot += xi[i] * samples[p * m + i];
        acc += std::polar(1.0, dot);
      }
      const auto exact = std::exp(dt * symbol(c.triple, xi));
      const double gap = std::abs(acc / static_cast<double>(n) - exact);
      if (gap > worst) {
        worst = gap;
        worst_case = c.name + fmt(" at xi=%g", xi0);
      }
    }
  }
  return {worst <= bound, fmt("max |ecf - exp(dt Psi)| = %.3g (%s), bound 3/sqrt(N) = %.3g", worst,
                              worst_case.c_str(), bound)};
}

// 2. Generator on cos and sin against the real and imaginary parts of Psi e^{i xi x}.
Verdict generator_symbol(Suite&) {
  struct Case {
    std::string name;
    LevyTriple triple;
    double tolerance;
  };
  Eigen::VectorXd drift(1);
  drift << 0.3;
  const std::vector<Case> cases{
      {"stable 1.5", LevyTriple::alpha_stable(1, 1.5, 1.0), 1e-4},
      {"stable 1.5 (2d)", LevyTriple::alpha_stable(2, 1.5, 1.0), 1e-4},
      {"gaussian", LevyTriple(drift, Eigen::MatrixXd::Constant(1, 1, 0.8)), 1e-6},
      {"gaussian (2d)", LevyTriple::brownian(2, 1.3), 1e-6},
  };
  std::string detail;
  bool passed = true;
  for (const auto& c : cases) {
    const int m = c.triple.dim();
    double worst = 0.0;
    for (double xi0 : {0.5, 1.0, 2.0}) {
      std::vector<double> xi(m, 0.0);
      xi[0] = xi0;
      if (m > 1) xi[1] = 0.7 * xi0;
      const auto psi = symbol(c.triple, xi);
      auto dot = [xi](std::span<const double> x) {
        double s = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) s += xi[i] * x[i];
        return s;
      };
      for (double x0 : {-0.7, 0.0, 1.3}) {
        std::vector<double> x(m, x0);
        const std::complex<double> expected = psi * std::polar(1.0, dot(x));
        const double re = apply_generator(c.triple, [&](std::span<const double> y) { return std::cos(dot(y)); }, x);
        const double im = apply_generator(c.triple, [&](std::span<const double> y) { return std::sin(dot(y)); }, x);
        worst = std::max(worst, std::abs(std::complex<double>(re, im) - expected));
      }
    }
    passed = passed && worst <= c.tolerance;
    detail += fmt("%s%s %.2g (tol %.0e)", detail.empty() ? "" : ", ", c.name.c_str(), worst, c.tolerance);
  }
  return {passed, detail};
}

// 3. Cole-Hopf against the spectral solver, all stored slices.
Verdict oracle_gate(Suite&) {
  const oracle::PeriodicSpectralGrid grid(128);
  oracle::SpectralProblem sp{0.5, 2.0, 1.0, sin_phi, {}};
  oracle::SpectralOptions opt;
  opt.dt = 1.0 / 1024.0;
  opt.output_dt = 1.0 / 64.0;
  const auto spectral = oracle::spectral_fractal_solve(sp, grid, -0.5, opt);
  const auto antiderivative = [](double y) { return 1.0 - std::cos(y); };
  double gap = 0.0;
  for (int i = 0; i < spectral.time().nodes(); i += 8) {
    for (std::size_t j = 0; j < spectral.space().size(); ++j) {
      const double x = spectral.space().coordinate(0, static_cast<int>(j));
      const auto ch = oracle::cole_hopf_burgers(sin_phi, 0.5, spectral.time().time(i), x, 64, 1e-9, antiderivative);
      gap = std::max(gap, std::fabs(ch.value - spectral.at(i, j)));
    }
  }
  return {gap <= 1e-6, fmt("sup |cole_hopf - spectral| = %.3g over t in {0, -1/8, ..., -1/2}, tol 1e-6", gap)};
}

std::string burgers_yaml(const fs::path& dir) {
  return "seed: 20240607\n"
         "problem:\n"
         "  builtin: burgers1d\n"
         "  params: {nu: 0.5}\n"
         "  phi: sin\n"
         "grid: {points: 129, periodic: true, horizon: -0.5, dt: 0.015625}\n"
         "solver: {particles: 100000, substeps: 4, tolerance: 1.0e-3}\n"
         "output: {directory: \"" +
         dir.string() + "\", name: burgers}\n";
}

// Runs the criterion-4 config through the command-line pipeline and returns
// the field CSV bytes.
std::string run_burgers_config(Suite& suite, const std::string& tag, json* report) {
  const fs::path cfg_dir = suite.work / tag;
  fs::create_directories(cfg_dir);
  const fs::path cfg_file = cfg_dir / "burgers.yaml";
  std::ofstream(cfg_file) << burgers_yaml(cfg_dir / "out");
  std::ostringstream log;
  const ExitCode code = run_experiment("solve", cfg_file.string(), log);
  if (code != ExitCode::ok) throw std::runtime_error("burgers run exited with code " + std::to_string(int(code)) + ": " + log.str());
  const fs::path out = output_directory(load_config(cfg_file.string()).output);
  if (report) *report = json::parse(slurp(out / "burgers_report.json"));
  if (!suite.burgers) suite.burgers = read_field((out / "burgers_field").string());
  return slurp(out / "burgers_field.csv");
}

void ensure_burgers(Suite& suite) {
  if (suite.burgers) return;
  suite.burgers_csv = run_burgers_config(suite, "burgers_a", &suite.burgers_report);
  SolveReport r;
  const auto& s = suite.burgers_report["solve"];
  r.apriori_checks = s["apriori_checks"].get<std::size_t>();
  r.apriori_violations = s["apriori_violations"].get<std::size_t>();
  r.apriori_worst_excess = s["apriori_worst_excess"].is_null() ? 0.0 : s["apriori_worst_excess"].get<double>();
  suite.record("burgers (criterion 4)", r);
}

// 4. Monte Carlo Burgers against Cole-Hopf, plus geometric Picard decay.
Verdict burgers_equivalence(Suite& suite) {
  ensure_burgers(suite);
  const auto& field = *suite.burgers;
  const auto antiderivative = [](double y) { return 1.0 - std::cos(y); };
  double gap = 0.0;
  for (int i = 0; i < field.time().nodes(); ++i) {
    for (std::size_t j = 0; j < field.space().size(); ++j) {
      const double x = field.space().coordinate(0, static_cast<int>(j));
      const auto ch = oracle::cole_hopf_burgers(sin_phi, 0.5, field.time().time(i), x, 64, 1e-9, antiderivative);
      gap = std::max(gap, std::fabs(ch.value - field.at(i, j)));
    }
  }
  double ratio = 0.0, final_residual = 0.0;
  bool converged = true;
  const auto& s = suite.burgers_report["solve"];
  for (const auto& w : s["windows"]) {
    ratio = std::max(ratio, w["contraction_ratio"].get<double>());
    final_residual = w["residuals"].back().get<double>();
    converged = converged && w["converged"].get<bool>() && w["residuals"].size() >= 3;
  }
  const bool passed = gap <= 0.05 && ratio <= 0.7 && converged && s["rejected_windows"].empty();
  return {passed, fmt("sup gap %.4f (tol 0.05), Picard ratio after iteration 2 %.3f (tol 0.7), %zu windows, "
                      "final residual %.2g",
                      gap, ratio, s["windows"].size(), final_residual)};
}

// 5. Pure stable noise, G = F = 0, against the Fourier multiplier solution.
Verdict fractal_linear(Suite& suite) {
  const double alpha = 1.5, nu = 0.5;
  const oracle::PeriodicSpectralGrid grid(128);
  auto phi1 = [](double x) { return std::sin(x) + 0.5 * std::cos(2.0 * x); };
  PideProblem pb;
  pb.triple = LevyTriple::alpha_stable_with_multiplier(1, alpha, nu);
  pb.phi = [phi1](std::span<const double> x, std::span<double> out) { out[0] = phi1(x[0]); };
  pb.G_depends_on_u = pb.F_depends_on_u = false;
  SolverConfig cfg;
  cfg.space = grid.space_grid();
  cfg.horizon = -0.5;
  cfg.dt = 1.0 / 64.0;
  cfg.substeps = 4;
  cfg.particles = 100000;
  cfg.seed = 5;
  cfg.tolerance = 1e-3;
  const auto res = solve(pb, cfg);
  suite.record("fractal linear (criterion 5)", res.report);
  std::vector<double> phi;
  for (double x : grid.nodes()) phi.push_back(phi1(x));
  double worst = -1e300, gap_at = 0.0, sigma_at = 0.0, grid_at = 0.0;
  double grid_tol = 0.0;
  for (int i = 1; i < res.field.time().nodes(); ++i) {
    // Each restart interpolates the previous slice once.
    grid_tol += res.report.interpolation_bounds[i - 1];
    const auto exact = oracle::linear_convolution_solve(pb.triple, grid, phi, res.field.time().time(i));
    double gap = 0.0;
    for (int j = 0; j < grid.modes(); ++j) gap = std::max(gap, std::fabs(exact[j] - res.field.at(i, j)));
    const double sigma = res.report.std_errors[i];
    if (gap - 3.0 * sigma - grid_tol > worst) {
      worst = gap - 3.0 * sigma - grid_tol;
      gap_at = gap;
      sigma_at = sigma;
      grid_at = grid_tol;
    }
  }
  return {worst <= 0.0, fmt("worst slice: gap %.4f vs 3 sigma %.4f + grid %.4f (N = 1e5, %zu Picard iterations in "
                            "the first window)",
                            gap_at, 3.0 * sigma_at, grid_at, res.report.windows.front().residuals.size())};
}

// 6. Flow property on shared noise and in law.
Verdict flow_property(Suite&) {
  struct Case {
    std::string name;
    CouplingMode mode;
    LevyTriple triple;
    CoefficientFn coef;
  };
  GaussianJumpLaw law;
  law.mean = Eigen::VectorXd::Constant(1, 0.8);
  law.stddev = 0.5;
  const std::vector<Case> cases{
      {"drift sin, stable 1.5", CouplingMode::drift_only, LevyTriple::alpha_stable(1, 1.5, 0.5),
       [](double, std::span<const double> x, std::span<double> out) { out[0] = 0.5 + std::sin(x[0]); }},
      {"general 2d, brownian", CouplingMode::general, LevyTriple::brownian(2, 1.0),
       [](double, std::span<const double> x, std::span<double> out) {
         out[0] = 1.0 + 0.3 * std::sin(x[0]);
         out[1] = 0.2 * x[1] / (1.0 + x[1] * x[1]);
         out[2] = 0.0;
         out[3] = 1.0 + 0.3 * std::cos(x[1]);
       }},
      {"constant big jump, poisson", CouplingMode::constant_big_jump,
       LevyTriple(Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Constant(1, 1, 0.5), CompoundPoisson{2.0, law}),
       [](double, std::span<const double> x, std::span<double> out) { out[0] = 1.0 + 0.5 * std::tanh(x[0]); }},
  };
  const TimeGrid grid(-1.0, 1.0 / 64.0);
  bool passed = true;
  std::string detail;
  std::uint64_t seed = 31;
  for (const auto& c : cases) {
    std::vector<double> x(c.triple.dim(), 0.2);
    const auto r = flow_test(c.mode, c.coef, c.triple, -1.0, -0.5, 0.0, x, 10000, grid, seed++);
    passed = passed && r.pathwise_gap <= 1e-12 && r.ks_statistic < r.ks_critical;
    detail += fmt("%s%s: gap %.1e, KS %.4f < %.4f", detail.empty() ? "" : "; ", c.name.c_str(), r.pathwise_gap,
                  r.ks_statistic, r.ks_critical);
  }
  return {passed, detail};
}

PideProblem burgers_problem() {
  PideProblem pb;
  pb.triple = LevyTriple::brownian(1, 1.0);
  pb.G = [](double, std::span<const double>, std::span<const double> u, std::span<double> out) { out[0] = -u[0]; };
  pb.F_depends_on_u = false;
  pb.phi = [](std::span<const double> x, std::span<double> out) { out[0] = std::sin(x[0]); };
  return pb;
}

// 7. Direct inner estimates of the conditional expectation against the fixed point.
Verdict nested_consistency(Suite& suite) {
  ensure_burgers(suite);
  const TimeGrid coarse(-0.5, 1.0 / 16.0);
  const std::vector<double> x{0.6};
  const auto r = nested_conditional_simulate(burgers_problem(), *suite.burgers, -0.5, x, 50, 200, coarse, 77);
  const double bound = 3.0 * (r.mean_inner_std_error + r.interpolation_bound);
  return {r.mean_gap <= bound, fmt("mean gap %.4f <= 3 (sigma %.4f + interp %.2g) = %.4f; max gap %.4f, M=50 K=200 "
                                   "L=%d",
                                   r.mean_gap, r.mean_inner_std_error, r.interpolation_bound, bound, r.max_gap,
                                   coarse.steps())};
}

// 8. A-priori sup bound over every accepted iterate of the suite's solves.
Verdict apriori_bound(Suite& suite) {
  if (suite.apriori.empty()) ensure_burgers(suite);
  std::size_t checks = 0, violations = 0;
  double worst = -1e300;
  for (const auto& a : suite.apriori) {
    checks += a.checks;
    violations += a.violations;
    worst = std::max(worst, a.worst);
  }
  return {violations == 0 && checks > 0,
          fmt("%zu solves, %zu slice checks, %zu violations, worst excess %.3g", suite.apriori.size(), checks,
              violations, worst)};
}

// 9. Nonnegative data and source with drift coupling stay nonnegative.
Verdict nonnegativity(Suite& suite) {
  PideProblem pb;
  pb.triple = LevyTriple::alpha_stable_with_multiplier(1, 1.5, 0.5);
  pb.G = [](double, std::span<const double>, std::span<const double> u, std::span<double> out) { out[0] = -u[0]; };
  pb.F = [](double, std::span<const double> x, std::span<const double> u, std::span<double> out) {
    out[0] = 0.25 * u[0] * u[0] + 0.1 * (1.0 + std::sin(x[0]));
  };
  pb.phi = [](std::span<const double> x, std::span<double> out) { out[0] = std::exp(-2.0 * x[0] * x[0]); };
  SolverConfig cfg;
  cfg.space = SpaceGrid(-3.0, 3.0, 61);
  cfg.horizon = -0.5;
  cfg.dt = 1.0 / 64.0;
  cfg.substeps = 4;
  cfg.particles = 20000;
  cfg.seed = 9;
  cfg.tolerance = 1e-3;
  const auto res = solve(pb, cfg);
  suite.record("nonnegativity (criterion 9)", res.report);
  double worst = 1e300, at_min = 0.0, at_allow = 0.0;
  for (int i = 0; i < res.field.time().nodes(); ++i) {
    const double m = res.field.min_value(i);
    const double allowance = 3.0 * res.report.std_errors[i] + res.report.interpolation_bounds[i];
    if (m + allowance < worst) {
      worst = m + allowance;
      at_min = m;
      at_allow = allowance;
    }
  }
  return {worst >= 0.0, fmt("min u %.3g against allowance -%.3g", at_min, at_allow)};
}

// 10. Gradient decay exponent of the linear semigroup on step data.
Verdict gradient_decay(Suite&) {
  GradientProbeConfig cfg;
  cfg.deltas = {1.0 / 256, 1.0 / 128, 1.0 / 64, 1.0 / 32, 1.0 / 16};
  cfg.particles = 200000;
  cfg.seed = 3;
  const auto step = [](double x) { return x >= 0.0 ? 1.0 : 0.0; };
  const auto a = gradient_decay_probe(LevyTriple::brownian(1, 1.0), step, cfg);
  const auto b = gradient_decay_probe(LevyTriple::alpha_stable_with_multiplier(1, 1.5, 1.0), step, cfg);
  const bool passed = std::fabs(a.slope + 0.5) <= 0.1 && std::fabs(b.slope + 1.0 / 1.5) <= 0.15;
  return {passed, fmt("alpha 2: slope %.4f (target -0.5 +- 0.1); alpha 1.5: slope %.4f (target -0.667 +- 0.15)",
                      a.slope, b.slope)};
}

// 11. Steep compressive data: supercritical noise blows up, Brownian noise does not.
Verdict blowup_dichotomy(Suite& suite) {
  auto make = [](double alpha) {
    PideProblem pb;
    pb.triple = alpha == 2.0 ? LevyTriple::brownian(1, 1.0) : LevyTriple::alpha_stable_with_multiplier(1, alpha, 0.5);
    pb.G = [](double, std::span<const double>, std::span<const double> u, std::span<double> out) { out[0] = -u[0]; };
    pb.F_depends_on_u = false;
    pb.phi = [](std::span<const double> x, std::span<double> out) { out[0] = -2.0 * std::tanh(4.0 * x[0]); };
    return pb;
  };
  SolverConfig cfg;
  cfg.space = SpaceGrid(-2.0, 2.0, 161);
  cfg.horizon = -1.0;
  cfg.dt = 1.0 / 64.0;
  cfg.substeps = 4;
  cfg.particles = 10000;
  cfg.seed = 13;
  cfg.tolerance = 1e-3;
  cfg.blowup_threshold = 3.0 * 8.0;  // 3 |grad phi|
  const auto steep = solve(make(0.5), cfg);
  suite.record("blow-up alpha 0.5 (criterion 11)", steep.report);
  const auto smooth = solve(make(2.0), cfg);
  suite.record("blow-up alpha 2 (criterion 11)", smooth.report);
  double lip = 0.0;
  for (double v : smooth.report.lipschitz_norms) lip = std::max(lip, v);
  const double lip_bound = 4.0 * smooth.report.phi_lipschitz * 2.0;
  const bool passed = steep.report.blow_up && steep.report.t_max > -1.0 && !smooth.report.blow_up &&
                      smooth.report.completed_time <= -1.0 + 1e-12 && lip < lip_bound;
  return {passed, fmt("alpha 0.5: blow-up %s at t = %g (Lipschitz %.1f, threshold %.0f); alpha 2: reached t = %g, max "
                      "Lipschitz %.2f < %.1f",
                      steep.report.blow_up ? "flagged" : "not flagged", steep.report.t_max,
                      steep.report.lipschitz_norms.back(), steep.report.blowup_threshold,
                      smooth.report.completed_time, lip, lip_bound)};
}

// 12. Byte-identical field CSVs from two runs of the criterion-4 config.
Verdict determinism(Suite& suite) {
  ensure_burgers(suite);
  const std::string again = run_burgers_config(suite, "burgers_b", nullptr);
  const bool same = again == suite.burgers_csv && !again.empty();
  return {same, fmt("%zu-byte field CSVs %s", again.size(), same ? "identical" : "differ")};
}

struct Criterion {
  int id;
  const char* name;
  Verdict (*run)(Suite&);
};

constexpr Criterion kCriteria[] = {
    {1, "characteristic_function", characteristic_function},
    {2, "generator_symbol", generator_symbol},
    {3, "oracle_gate", oracle_gate},
    {4, "burgers_equivalence", burgers_equivalence},
    {5, "fractal_linear", fractal_linear},
    {6, "flow_property", flow_property},
    {7, "nested_consistency", nested_consistency},
    {9, "nonnegativity", nonnegativity},
    {10, "gradient_decay", gradient_decay},
    {11, "blowup_dichotomy", blowup_dichotomy},
    {12, "determinism", determinism},
    // Last, so it sees every solve above.
    {8, "apriori_bound", apriori_bound},
};

bool selected(const Criterion& c, const std::string& filter) {
  if (filter.empty()) return true;
  std::stringstream ss(filter);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    if (std::all_of(item.begin(), item.end(), ::isdigit)) {
      if (std::stoi(item) == c.id) return true;
    } else if (std::string(c.name).find(item) != std::string::npos) {
      return true;
    }
  }
  return false;
}

}  // namespace

std::vector<CriterionResult> run_acceptance(const std::string& filter, std::ostream& log) {
  Suite suite;
  suite.work = fs::temp_directory_path() / "levypide_acceptance";
  fs::remove_all(suite.work);
  fs::create_directories(suite.work);
  std::vector<CriterionResult> results;
  for (const auto& c : kCriteria) {
    if (!selected(c, filter)) continue;
    CriterionResult r;
    r.id = c.id;
    r.name = c.name;
    const auto started = std::chrono::steady_clock::now();
    try {
      const Verdict v = c.run(suite);
      r.passed = v.passed;
      r.detail = v.detail;
    } catch (const std::exception& e) {
      r.passed = false;
      r.detail = std::string("error: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    log << (r.passed ? "PASS" : "FAIL") << fmt("  %2d %-24s %7.1fs  ", r.id, r.name.c_str(), r.seconds) << r.detail
        << std::endl;
    results.push_back(r);
  }
  std::sort(results.begin(), results.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  fs::remove_all(suite.work);
  return results;
}

std::string acceptance_json(const std::vector<CriterionResult>& results) {
  json j;
  j["passed"] = std::all_of(results.begin(), results.end(), [](const auto& r) { return r.passed; });
  j["criteria"] = json::array();
  for (const auto& r : results) {
    j["criteria"].push_back({{"id", r.id}, {"name", r.name}, {"passed", r.passed}, {"detail", r.detail}});
  }
  return j.dump(2);
}

}  // namespace levypide::app
