#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "levypide/errors.hpp"
#include "levypide/field.hpp"
#include "levypide/levy.hpp"
#include "levypide/sfde.hpp"

namespace levypide {

/// u-dependent coefficient (t, x, u) -> out.
using FieldCoefficientFn =
    std::function<void(double t, std::span<const double> x, std::span<const double> u, std::span<double> out)>;
/// Terminal data x -> phi(x) in R^k.
using TerminalFn = std::function<void(std::span<const double> x, std::span<double> out)>;
/// u-independent coefficient (t, x) -> out.
using SpaceTimeFn = std::function<void(double t, std::span<const double> x, std::span<double> out)>;

enum class PideMode { semilinear, quasilinear_general, quasilinear_constant_big_jump, linear_fk };

const char* to_string(PideMode mode);

/// du/dt + L0 u + G(t,x,u).grad u + F(t,x,u) = 0 on t <= 0 with u_0 = phi (semilinear),
/// or the quasi-linear form in which G(t,x,u) (d x m) couples the noise.
/// Linear FK adds H(t,x) u to the equation, with G and F independent of u.
struct PideProblem {
  LevyTriple triple = LevyTriple::zero(1);
  PideMode mode = PideMode::semilinear;
  int dim = 1;         ///< Space dimension d.
  int components = 1;  ///< k.
  /// Semilinear and linear FK: R^d drift. Quasi-linear: d x m, column-major.
  /// Empty means zero.
  FieldCoefficientFn G;
  /// R^k source. Empty means zero.
  FieldCoefficientFn F;
  TerminalFn phi;
  /// k x k, column-major (linear FK only).
  SpaceTimeFn H;
  /// Lets the solver skip work and report the mode reduction.
  bool G_depends_on_u = true;
  bool F_depends_on_u = true;
  /// Declared sup(|grad G| + |grad f|) + |grad phi|; NaN if unknown. Diagnostic only.
  double declared_lipschitz = std::numeric_limits<double>::quiet_NaN();
};

CouplingMode coupling_mode(PideMode mode);

struct SolverConfig {
  SpaceGrid space{-1.0, 1.0, 17};
  double horizon = -0.5;        ///< T < 0.
  double dt = 1.0 / 64.0;       ///< Field time step.
  int substeps = 1;             ///< Euler steps per field step.
  std::size_t particles = 10000;
  std::uint64_t seed = 0;
  double tolerance = 1e-4;      ///< Sup-norm Picard residual target.
  int max_iterations = 30;
  double window = 0.25;
  double min_window = 0.0;      ///< 0 selects 4 * dt.
  /// Paths restart from the new iterate every `restart_stride` field steps.
  /// 0 runs every path to the window end.
  int restart_stride = 1;
  double blowup_threshold = 0.0;  ///< 0 selects 25 * |grad phi|.
  double small_jump_cutoff = 1e-3;
  std::size_t increment_cache_bytes = std::size_t{1} << 30;
  double max_particle_steps = 4e11;
  bool parallel = true;
};

struct WindowReport {
  double start_time = 0.0;  ///< Earliest time of the window.
  double end_time = 0.0;
  std::vector<double> residuals;
  double contraction_ratio = 0.0;  ///< max residual ratio over n >= 2.
  bool converged = false;
  int halvings = 0;
};

struct SolveReport {
  std::string mode;
  std::vector<WindowReport> windows;
  std::vector<WindowReport> rejected_windows;
  std::vector<double> times;
  std::vector<double> sup_norms;
  std::vector<double> lipschitz_norms;
  /// Accumulated Monte Carlo standard error per time node (max over nodes and components).
  std::vector<double> std_errors;
  std::vector<double> interpolation_bounds;
  bool blow_up = false;
  double t_max = std::numeric_limits<double>::quiet_NaN();
  double blowup_threshold = 0.0;
  double completed_time = 0.0;
  std::size_t particles = 0;
  std::uint64_t seed = 0;
  double wall_seconds = 0.0;
  /// A-priori bound |u_t| <= |phi| + |t| sup|F| + 3 sigma checked on every iterate.
  std::size_t apriori_checks = 0;
  std::size_t apriori_violations = 0;
  double apriori_worst_excess = -std::numeric_limits<double>::infinity();
  double phi_sup = 0.0;
  double phi_lipschitz = 0.0;
  double exit_fraction = 0.0;  ///< Share of terminal particle positions outside the box.
  std::vector<std::string> notes;
};

struct SolveResult {
  SpaceTimeField field;
  SolveReport report;
};

class NonContraction : public Error {
 public:
  NonContraction(const std::string& what, SolveReport report) : Error(what), report_(std::move(report)) {}
  const SolveReport& report() const { return report_; }

 private:
  SolveReport report_;
};

/// Picard iteration on fields with window patching and blow-up detection.
SolveResult solve_semilinear(const PideProblem& problem, const SolverConfig& config);
SolveResult solve_linear_fk(const PideProblem& problem, const SolverConfig& config);
SolveResult solve_quasilinear(const PideProblem& problem, const SolverConfig& config);
/// Dispatches on problem.mode.
SolveResult solve(const PideProblem& problem, const SolverConfig& config);

struct BlowupDecision {
  bool blow_up = false;
  double lipschitz = 0.0;
  double previous = 0.0;
};

/// Blow-up when the latest window-start Lipschitz norm exceeds `threshold`
/// and at least doubled relative to the previous one. `norms` holds the
/// Lipschitz norm of phi followed by one entry per completed window.
BlowupDecision blow_up_detector(std::span<const double> norms, double threshold);

struct ResidualResult {
  double residual = 0.0;
  /// Quadrature, differencing and Monte Carlo allowance for `residual`.
  double tolerance = 0.0;
};

using TestFunction = std::function<double(std::span<const double>)>;

struct TestFunctionSpec {
  TestFunction psi;
  std::vector<double> support_lower, support_upper;
};

/// Smooth bump supported on the ball |x - center| < radius.
TestFunctionSpec bump_test_function(std::vector<double> center, double radius);

/// Max over test functions of the gap in the weak formulation at time t,
/// scalar component 0 (semilinear and linear problems). The terminal pairing
/// uses problem.phi, not slice 0 of the field. With jumps, the nonlocal
/// pairing covers the whole grid (and periodic images), and the neglected
/// far field enters the tolerance.
ResidualResult weak_residual(const SpaceTimeField& field, const PideProblem& problem,
                             std::span<const TestFunctionSpec> tests, double t,
                             std::span<const double> std_errors = {});

/// Pointwise PIDE residual at (t, x); x must be an interior node at least two
/// nodes from the boundary and t a time node other than the last.
struct StrongResidual {
  Eigen::VectorXd residual;
  double tolerance = 0.0;
};
StrongResidual strong_residual(const SpaceTimeField& field, const PideProblem& problem, double t,
                               std::span<const double> x, double std_error = 0.0);

struct NestedResult {
  std::vector<SamplePath> paths;
  double max_gap = 0.0;
  double mean_gap = 0.0;
  double inner_std_error = 0.0;  ///< Max standard error of the inner estimates.
  double mean_inner_std_error = 0.0;
  double interpolation_bound = 0.0;
  std::size_t steps_used = 0;
};

/// Outer paths whose drift uses a direct inner Monte Carlo estimate of the
/// conditional expectation, compared with the frozen field along the way.
/// Semilinear scalar problems; M K L^2 must not exceed `budget`.
NestedResult nested_conditional_simulate(const PideProblem& problem, const SpaceTimeField& frozen, double t,
                                         std::span<const double> x, std::size_t outer, std::size_t inner,
                                         const TimeGrid& grid, std::uint64_t seed, double budget = 1e6);

struct GradientProbeResult {
  std::vector<double> deltas;
  std::vector<double> gradient_norms;
  std::vector<double> std_errors;
  double slope = 0.0;
  double slope_std_error = 0.0;
};

struct GradientProbeConfig {
  std::vector<double> deltas;
  std::size_t particles = 200000;
  std::uint64_t seed = 0;
  double spacing = 1e-3;   ///< Finite-difference node spacing.
  int half_width = 64;     ///< Nodes on each side of the probe centre.
  double center = 0.0;
};

/// ||grad E phi(x + L_delta)|| over a fine grid around the centre, by shared
/// increments and central differences, and the least-squares slope of
/// log norm versus log delta. One-dimensional, drift-free.
GradientProbeResult gradient_decay_probe(const LevyTriple& triple, const std::function<double(double)>& phi,
                                         const GradientProbeConfig& config);

}  // namespace levypide
