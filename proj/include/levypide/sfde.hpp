#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "levypide/field.hpp"
#include "levypide/levy.hpp"

namespace levypide {

/// How the coefficient enters the Euler step.
///  - general:           X += C(s, X) dL               (C is d x m)
///  - constant_big_jump: X += C(s, X) dL_small + dL_big (jumps |z| >= 1 uncoupled)
///  - drift_only:        X += b(s, X) dt + dL          (b in R^d, d = m)
enum class CouplingMode { general, constant_big_jump, drift_only };

const char* to_string(CouplingMode mode);

/// Coefficient closure. For drift_only `out` has d entries, otherwise d * m
/// entries in column-major order.
using CoefficientFn = std::function<void(double s, std::span<const double> x, std::span<double> out)>;

/// Rejects `general` coupling unless the noise has a finite beta-moment for
/// some beta > 1 (probed at beta = (1 + alpha) / 2 for stable noise). Throws ModeError.
void require_coupling_allowed(CouplingMode mode, const LevyTriple& triple);

/// Noise for the Euler step over [-(e + 1) dt, -e dt] is keyed by (seed,
/// stream, e), so any two simulations that cross the same interval with the
/// same stream see the same increment.
std::uint64_t interval_index(double step_end_time, double dt);

struct JumpRecord {
  double time;  ///< End of the step in which the jump was applied.
  std::vector<double> size;
};

struct SamplePath {
  double start_time = 0.0;
  std::vector<double> times;   ///< Grid nodes from start_time up to the end time.
  std::vector<double> states;  ///< times.size() x d, row-major.
  int dim = 0;
  std::vector<JumpRecord> big_jumps;
  bool divergent = false;

  std::span<const double> state(std::size_t i) const { return {states.data() + i * dim, static_cast<std::size_t>(dim)}; }
  std::span<const double> final_state() const { return state(times.size() - 1); }
};

struct PathOptions {
  double end_time = 0.0;
  double small_jump_cutoff = 1e-3;
  bool record_states = true;
};

/// Euler scheme from (start_time, x) to options.end_time on the nodes of
/// `grid`. The coefficient is evaluated at the pre-step state.
SamplePath simulate_path(CouplingMode mode, const CoefficientFn& coefficient, const LevyTriple& triple,
                         double start_time, std::span<const double> x, const TimeGrid& grid,
                         std::uint64_t seed, std::uint64_t stream, const PathOptions& options = {});

/// CSV with columns s, x0..x{d-1}, jump (1 if a big jump landed in the step ending at s).
void write_path_csv(const SamplePath& path, const std::string& file);

struct FlowTestResult {
  double pathwise_gap = 0.0;  ///< max_p |X_{t1,t3} - X_{t2,t3}(X_{t1,t2})| on shared noise.
  double ks_statistic = 0.0;  ///< Composed (independent legs) vs direct law of phi(X_{t1,t3}).
  double ks_critical = 0.0;   ///< Two-sample critical value at level 1%.
  std::size_t paths = 0;
};

/// `phi` maps a final state to the scalar whose law is compared; empty uses x0.
FlowTestResult flow_test(CouplingMode mode, const CoefficientFn& coefficient, const LevyTriple& triple,
                         double t1, double t2, double t3, std::span<const double> x, std::size_t paths,
                         const TimeGrid& grid, std::uint64_t seed,
                         const std::function<double(std::span<const double>)>& phi = {});

}  // namespace levypide
