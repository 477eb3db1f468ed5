#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "levypide/app.hpp"

namespace levypide::app {

namespace {

constexpr double kPi = std::numbers::pi;

void allow(const YAML::Node& node, const std::string& where, std::initializer_list<const char*> keys) {
  if (!node || node.IsNull()) return;
  if (!node.IsMap()) throw ConfigError(where + ": expected a mapping");
  const std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

template <typename T>
T get(const YAML::Node& node, const char* key, T fallback) {
  if (!node || !node[key]) return fallback;
  try {
    return node[key].as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError(std::string("bad value for '") + key + "'");
  }
}

// Scalars are broadcast to `n` entries.
template <typename T>
std::vector<T> get_list(const YAML::Node& node, const char* key, std::vector<T> fallback, std::size_t n) {
  if (!node || !node[key]) return fallback;
  try {
    if (node[key].IsSequence()) return node[key].as<std::vector<T>>();
    return std::vector<T>(n, node[key].as<T>());
  } catch (const YAML::Exception&) {
    throw ConfigError(std::string("bad value for '") + key + "'");
  }
}

// Piecewise-linear table with constant extension.
struct Table {
  std::vector<double> x, y;

  double operator()(double v) const {
    if (v <= x.front()) return y.front();
    if (v >= x.back()) return y.back();
    const auto it = std::upper_bound(x.begin(), x.end(), v);
    const std::size_t i = static_cast<std::size_t>(it - x.begin()) - 1;
    const double w = (v - x[i]) / (x[i + 1] - x[i]);
    return (1.0 - w) * y[i] + w * y[i + 1];
  }
};

Table parse_table(const YAML::Node& node, const std::string& where) {
  allow(node, where, {"kind", "x", "y"});
  Table t;
  t.x = get<std::vector<double>>(node, "x", {});
  t.y = get<std::vector<double>>(node, "y", {});
  if (t.x.size() < 2 || t.x.size() != t.y.size()) throw ConfigError(where + ": need matching x and y with >= 2 points");
  for (std::size_t i = 1; i < t.x.size(); ++i) {
    if (!(t.x[i] > t.x[i - 1])) throw ConfigError(where + ": x must be strictly increasing");
  }
  return t;
}

// Scalar terminal data on R^d, built from a name or a mapping.
std::function<double(std::span<const double>)> parse_phi(const YAML::Node& node) {
  std::string kind = "sin";
  YAML::Node params;
  if (node && node.IsScalar()) {
    kind = node.as<std::string>();
  } else if (node) {
    kind = get<std::string>(node, "kind", "sin");
    params = node;
  }
  auto first = [](std::span<const double> x) { return x[0]; };
  if (kind == "sin" || kind == "cos") {
    allow(params, "phi", {"kind", "amplitude"});
    const double amp = get(params, "amplitude", 1.0);
    const bool sine = kind == "sin";
    return [amp, sine](std::span<const double> x) {
      double v = amp;
      for (double xi : x) v *= sine ? std::sin(xi) : std::cos(xi);
      return v;
    };
  }
  if (kind == "zero" || kind == "constant") {
    allow(params, "phi", {"kind", "value"});
    const double c = kind == "zero" ? 0.0 : get(params, "value", 1.0);
    return [c](std::span<const double>) { return c; };
  }
  if (kind == "tanh_step") {
    allow(params, "phi", {"kind", "amplitude", "steepness"});
    const double amp = get(params, "amplitude", 2.0), k = get(params, "steepness", 4.0);
    return [amp, k, first](std::span<const double> x) { return -amp * std::tanh(k * first(x)); };
  }
  if (kind == "gaussian_bump") {
    allow(params, "phi", {"kind", "amplitude", "width"});
    const double amp = get(params, "amplitude", 1.0), w = get(params, "width", 0.5);
    return [amp, w](std::span<const double> x) {
      double r2 = 0.0;
      for (double xi : x) r2 += xi * xi;
      return amp * std::exp(-0.5 * r2 / (w * w));
    };
  }
  if (kind == "step") {
    allow(params, "phi", {"kind", "width"});
    const double w = get(params, "width", 1e-2);
    return [w, first](std::span<const double> x) { return std::clamp(first(x) / w + 0.5, 0.0, 1.0); };
  }
  if (kind == "table") {
    const Table t = parse_table(params, "phi");
    return [t, first](std::span<const double> x) { return t(first(x)); };
  }
  throw ConfigError("phi: unknown kind '" + kind + "'");
}

LevyTriple parse_triple(const YAML::Node& node, const LevyTriple& fallback) {
  if (!node) return fallback;
  allow(node, "triple",
        {"kind", "dim", "variance", "drift", "alpha", "multiplier", "scale", "cutoff", "rate", "jump_mean",
         "jump_stddev"});
  const std::string kind = get<std::string>(node, "kind", "brownian");
  const int dim = get(node, "dim", 1);
  if (dim < 1 || dim > 8) throw ConfigError("triple: dim must lie in 1..8");
  Eigen::VectorXd drift = Eigen::VectorXd::Zero(dim);
  const auto b = get_list<double>(node, "drift", std::vector<double>(dim, 0.0), dim);
  if (static_cast<int>(b.size()) != dim) throw ConfigError("triple: drift has the wrong length");
  for (int i = 0; i < dim; ++i) drift[i] = b[i];
  const double variance = get(node, "variance", kind == "brownian" ? 1.0 : 0.0);
  const Eigen::MatrixXd cov = variance * Eigen::MatrixXd::Identity(dim, dim);
  try {
    if (kind == "zero") return LevyTriple(drift, cov);
    if (kind == "brownian") return LevyTriple(drift, cov);
    if (kind == "stable" || kind == "truncated_stable") {
      const double alpha = get(node, "alpha", 1.5);
      double scale = get(node, "scale", 0.0);
      if (node["multiplier"]) {
        if (node["scale"]) throw ConfigError("triple: give either scale or multiplier");
        scale = get(node, "multiplier", 1.0) / stable_symbol_constant(dim, alpha);
      }
      if (!(scale > 0.0)) scale = 1.0 / stable_symbol_constant(dim, alpha);
      if (kind == "stable") return LevyTriple(drift, cov, AlphaStable{alpha, scale});
      return LevyTriple(drift, cov, TruncatedStable{alpha, scale, get(node, "cutoff", 0.0)});
    }
    if (kind == "compound_poisson") {
      GaussianJumpLaw law;
      const auto mean = get_list<double>(node, "jump_mean", std::vector<double>(dim, 0.0), dim);
      if (static_cast<int>(mean.size()) != dim) throw ConfigError("triple: jump_mean has the wrong length");
      law.mean = Eigen::Map<const Eigen::VectorXd>(mean.data(), dim);
      law.stddev = get(node, "jump_stddev", 1.0);
      return LevyTriple(drift, cov, CompoundPoisson{get(node, "rate", 1.0), law});
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("triple: ") + e.what());
  }
  throw ConfigError("triple: unknown kind '" + kind + "'");
}

PideMode parse_mode(const std::string& s) {
  if (s == "semilinear") return PideMode::semilinear;
  if (s == "quasilinear_general") return PideMode::quasilinear_general;
  if (s == "quasilinear_constant_big_jump") return PideMode::quasilinear_constant_big_jump;
  if (s == "linear_fk") return PideMode::linear_fk;
  throw ConfigError("problem: unknown mode '" + s + "'");
}

CouplingMode parse_coupling(const std::string& s) {
  if (s == "general") return CouplingMode::general;
  if (s == "constant_big_jump") return CouplingMode::constant_big_jump;
  if (s == "drift_only") return CouplingMode::drift_only;
  throw ConfigError("flow: unknown coupling '" + s + "'");
}

void build_problem(const YAML::Node& node, RunConfig& cfg) {
  if (!node) throw ConfigError("config: 'problem' section is required");
  allow(node, "problem", {"builtin", "mode", "triple", "params", "phi", "G", "F"});
  cfg.builtin = get<std::string>(node, "builtin", "");
  const YAML::Node params = node["params"];
  PideProblem& pb = cfg.problem;

  if (cfg.builtin == "burgers1d") {
    allow(params, "params", {"nu", "advection"});
    const double nu = get(params, "nu", 0.5);
    const double c = get(params, "advection", 1.0);
    pb.triple = parse_triple(node["triple"], LevyTriple::brownian(1, 2.0 * nu));
    pb.mode = PideMode::semilinear;
    pb.G = [c](double, std::span<const double>, std::span<const double> u, std::span<double> out) {
      out[0] = -c * u[0];
    };
    pb.F_depends_on_u = false;
  } else if (cfg.builtin == "conservation_law") {
    // div g(x, u) with g = c u^2 / 2 + v0 sin(x) u, rewritten as G = dg/du and F = div_x g + f0.
    allow(params, "params", {"flux", "velocity", "source"});
    const double c = get(params, "flux", -1.0), v0 = get(params, "velocity", 0.0), f0 = get(params, "source", 0.0);
    pb.triple = parse_triple(node["triple"], LevyTriple::brownian(1, 1.0));
    pb.mode = PideMode::semilinear;
    pb.G = [c, v0](double, std::span<const double> x, std::span<const double> u, std::span<double> out) {
      out[0] = c * u[0] + v0 * std::sin(x[0]);
    };
    pb.F = [v0, f0](double, std::span<const double> x, std::span<const double> u, std::span<double> out) {
      out[0] = v0 * std::cos(x[0]) * u[0] + f0;
    };
  } else if (cfg.builtin == "linear_fk") {
    allow(params, "params", {"lambda", "drift", "source"});
    const double lambda = get(params, "lambda", 0.0), b = get(params, "drift", 0.0), f = get(params, "source", 0.0);
    pb.triple = parse_triple(node["triple"], LevyTriple::brownian(1, 1.0));
    pb.mode = PideMode::linear_fk;
    pb.G = [b](double, std::span<const double>, std::span<const double>, std::span<double> out) {
      std::fill(out.begin(), out.end(), b);
    };
    pb.F = [f](double, std::span<const double>, std::span<const double>, std::span<double> out) { out[0] = f; };
    pb.H = [lambda](double, std::span<const double>, std::span<double> out) { out[0] = lambda; };
    pb.G_depends_on_u = pb.F_depends_on_u = false;
  } else if (cfg.builtin == "custom-table") {
    allow(params, "params", {});
    pb.triple = parse_triple(node["triple"], LevyTriple::brownian(1, 1.0));
    pb.mode = PideMode::semilinear;
    if (node["G"]) {
      const Table g = parse_table(node["G"], "G");
      pb.G = [g](double, std::span<const double>, std::span<const double> u, std::span<double> out) {
        std::fill(out.begin(), out.end(), g(u[0]));
      };
    }
    if (node["F"]) {
      const Table f = parse_table(node["F"], "F");
      pb.F = [f](double, std::span<const double>, std::span<const double> u, std::span<double> out) {
        out[0] = f(u[0]);
      };
    }
    pb.G_depends_on_u = static_cast<bool>(node["G"]);
    pb.F_depends_on_u = static_cast<bool>(node["F"]);
  } else {
    throw ConfigError("problem: builtin must be one of burgers1d, conservation_law, linear_fk, custom-table");
  }
  if (cfg.builtin != "custom-table" && (node["G"] || node["F"])) {
    throw ConfigError("problem: G and F tables are only accepted by custom-table");
  }
  if (node["mode"]) pb.mode = parse_mode(node["mode"].as<std::string>());
  pb.dim = pb.triple.dim();
  pb.components = 1;
  const auto phi = parse_phi(node["phi"]);
  pb.phi = [phi](std::span<const double> x, std::span<double> out) { out[0] = phi(x); };
  cfg.phi1 = [phi](double x) { return phi({&x, 1}); };
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("config: YAML parse error: ") + e.what());
  }
  if (!root || !root.IsMap()) throw ConfigError("config: expected a mapping at the top level");
  allow(root, "config", {"seed", "problem", "grid", "solver", "output", "probe", "flow", "oracle"});
  if (!root["seed"]) throw ConfigError("config: 'seed' is mandatory");
  RunConfig cfg;
  cfg.seed = get<std::uint64_t>(root, "seed", 0);
  build_problem(root["problem"], cfg);

  const YAML::Node grid = root["grid"];
  allow(grid, "grid", {"lower", "upper", "points", "periodic", "horizon", "dt"});
  const std::size_t d = static_cast<std::size_t>(cfg.problem.dim);
  const bool burgers = cfg.builtin == "burgers1d" || cfg.builtin == "conservation_law";
  auto lower = get_list<double>(grid, "lower", std::vector<double>(d, burgers ? -kPi : -3.0), d);
  auto upper = get_list<double>(grid, "upper", std::vector<double>(d, burgers ? kPi : 3.0), d);
  auto points = get_list<int>(grid, "points", std::vector<int>(d, burgers ? 129 : 61), d);
  auto periodic = get_list<bool>(grid, "periodic", std::vector<bool>(d, burgers), d);
  if (lower.size() != d || upper.size() != d || points.size() != d || periodic.size() != d) {
    throw ConfigError("grid: lower, upper, points and periodic need one entry per dimension");
  }
  SolverConfig& s = cfg.solver;
  try {
    s.space = SpaceGrid(lower, upper, points, periodic);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("grid: ") + e.what());
  }
  s.horizon = get(grid, "horizon", -0.5);
  s.dt = get(grid, "dt", 1.0 / 64.0);
  if (!(s.horizon < 0.0) || !(s.dt > 0.0)) throw ConfigError("grid: need horizon < 0 and dt > 0");

  const YAML::Node solver = root["solver"];
  allow(solver, "solver",
        {"particles", "substeps", "tolerance", "max_iterations", "window", "min_window", "restart_stride",
         "blowup_threshold", "small_jump_cutoff", "cache_bytes", "parallel", "intent"});
  s.particles = get<std::size_t>(solver, "particles", 10000);
  s.substeps = get(solver, "substeps", 4);
  s.tolerance = get(solver, "tolerance", 1e-3);
  s.max_iterations = get(solver, "max_iterations", 30);
  s.window = get(solver, "window", 0.25);
  s.min_window = get(solver, "min_window", 0.0);
  s.restart_stride = get(solver, "restart_stride", 1);
  s.blowup_threshold = get(solver, "blowup_threshold", 0.0);
  s.small_jump_cutoff = get(solver, "small_jump_cutoff", 1e-3);
  s.increment_cache_bytes = get<std::size_t>(solver, "cache_bytes", std::size_t{1} << 30);
  s.parallel = get(solver, "parallel", true);
  s.seed = cfg.seed;
  const std::string intent = get<std::string>(solver, "intent", "global");
  if (intent != "global" && intent != "local") throw ConfigError("solver: intent must be global or local");
  cfg.global_intent = intent == "global";

  const YAML::Node output = root["output"];
  allow(output, "output", {"directory", "name", "forward_time", "dump_paths"});
  cfg.output.directory = get<std::string>(output, "directory", "out");
  cfg.output.name = get<std::string>(output, "name", "run");
  cfg.output.forward_time = get(output, "forward_time", false);
  cfg.output.dump_paths = get(output, "dump_paths", false);

  const YAML::Node probe = root["probe"];
  allow(probe, "probe", {"deltas", "particles", "spacing", "half_width", "center"});
  cfg.probe.probe.deltas = get<std::vector<double>>(probe, "deltas", {1.0 / 256, 1.0 / 128, 1.0 / 64, 1.0 / 32, 1.0 / 16});
  cfg.probe.probe.particles = get<std::size_t>(probe, "particles", 200000);
  cfg.probe.probe.spacing = get(probe, "spacing", 1e-3);
  cfg.probe.probe.half_width = get(probe, "half_width", 64);
  cfg.probe.probe.center = get(probe, "center", 0.0);
  cfg.probe.probe.seed = cfg.seed;

  const YAML::Node flow = root["flow"];
  allow(flow, "flow", {"coupling", "coefficient", "a", "b", "t1", "t2", "t3", "x", "paths", "dt"});
  cfg.flow.mode = parse_coupling(get<std::string>(flow, "coupling", "drift_only"));
  cfg.flow.coefficient = get<std::string>(flow, "coefficient", "constant");
  cfg.flow.a = get(flow, "a", 0.0);
  cfg.flow.b = get(flow, "b", 1.0);
  cfg.flow.t1 = get(flow, "t1", -1.0);
  cfg.flow.t2 = get(flow, "t2", -0.5);
  cfg.flow.t3 = get(flow, "t3", 0.0);
  cfg.flow.x = get_list<double>(flow, "x", std::vector<double>(d, 0.0), d);
  cfg.flow.paths = get<std::size_t>(flow, "paths", 10000);
  cfg.flow.dt = get(flow, "dt", 1.0 / 64.0);

  const YAML::Node oracle = root["oracle"];
  allow(oracle, "oracle", {"kind", "modes", "period_scale", "t", "dt", "output_dt", "nu", "alpha", "advection"});
  cfg.oracle.kind = get<std::string>(oracle, "kind", "spectral");
  cfg.oracle.modes = get(oracle, "modes", 128);
  cfg.oracle.period_scale = get(oracle, "period_scale", 1.0);
  cfg.oracle.t = get(oracle, "t", -0.5);
  cfg.oracle.dt = get(oracle, "dt", 1.0 / 1024.0);
  cfg.oracle.output_dt = get(oracle, "output_dt", 1.0 / 64.0);
  cfg.oracle.nu = get(oracle, "nu", 0.5);
  cfg.oracle.alpha = get(oracle, "alpha", 2.0);
  cfg.oracle.advection = get(oracle, "advection", 1.0);
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string output_directory(const OutputConfig& output) {
  namespace fs = std::filesystem;
  const char* root = std::getenv("LEVYPIDE_OUTPUT_ROOT");
  if (!root || !*root) return output.directory;
  fs::path dir(output.directory);
  if (dir.is_absolute()) dir = dir.filename();
  return (fs::path(root) / dir).string();
}

}  // namespace levypide::app
