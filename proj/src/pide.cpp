#include "levypide/pide.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <memory>
#include <optional>
#include <stdexcept>

#include "levypide/kernels.hpp"

namespace levypide {

const char* to_string(PideMode mode) {
  switch (mode) {
    case PideMode::semilinear:
      return "semilinear";
    case PideMode::quasilinear_general:
      return "quasilinear_general";
    case PideMode::quasilinear_constant_big_jump:
      return "quasilinear_constant_big_jump";
    case PideMode::linear_fk:
      return "linear_fk";
  }
  return "unknown";
}

CouplingMode coupling_mode(PideMode mode) {
  switch (mode) {
    case PideMode::quasilinear_general:
      return CouplingMode::general;
    case PideMode::quasilinear_constant_big_jump:
      return CouplingMode::constant_big_jump;
    default:
      return CouplingMode::drift_only;
  }
}

BlowupDecision blow_up_detector(std::span<const double> norms, double threshold) {
  BlowupDecision decision;
  if (norms.size() < 2) return decision;
  decision.lipschitz = norms.back();
  // Growth is measured across the last two windows.
  decision.previous = norms.size() >= 3 ? norms[norms.size() - 3] : norms.front();
  decision.blow_up = decision.lipschitz > threshold && decision.lipschitz >= 2.0 * decision.previous;
  return decision;
}

namespace {

void validate(const PideProblem& pb, const SolverConfig& cfg) {
  if (!pb.phi) throw std::invalid_argument("solve: terminal data phi is required");
  if (pb.dim != cfg.space.dim()) throw std::invalid_argument("solve: problem dimension differs from the grid");
  if (pb.components < 1 || pb.components > 8) throw std::invalid_argument("solve: components must lie in 1..8");
  if (pb.mode == PideMode::semilinear || pb.mode == PideMode::linear_fk ||
      pb.mode == PideMode::quasilinear_constant_big_jump) {
    if (pb.dim != pb.triple.dim()) {
      throw std::invalid_argument("solve: this mode needs the noise dimension to equal the space dimension");
    }
  }
  if (cfg.particles == 0) throw std::invalid_argument("solve: particles must be positive");
  if (cfg.substeps < 1) throw std::invalid_argument("solve: substeps must be positive");
  if (cfg.restart_stride < 0) throw std::invalid_argument("solve: restart_stride must be nonnegative");
  if (!(cfg.tolerance > 0.0) || cfg.max_iterations < 1) throw std::invalid_argument("solve: bad iteration limits");
  if (!(cfg.window > 0.0)) throw std::invalid_argument("solve: window must be positive");
}

struct WindowOutcome {
  bool success = false;
  WindowReport report;
  std::size_t exits = 0;
  std::size_t samples = 0;
};

class Solver {
 public:
  Solver(const PideProblem& pb, const SolverConfig& cfg)
      : pb_(pb),
        cfg_(cfg),
        coupling_(coupling_mode(pb.mode)),
        time_(cfg.horizon, cfg.dt),
        field_(cfg.space, time_, pb.components) {}

  SolveResult run() {
    const auto started = std::chrono::steady_clock::now();
    const auto& space = cfg_.space;
    const int k = pb_.components;
    report_.mode = to_string(pb_.mode);
    report_.particles = cfg_.particles;
    report_.seed = cfg_.seed;

    std::vector<double> x(space.dim());
    for (std::size_t n = 0; n < space.size(); ++n) {
      space.node(n, x);
      double out[8];
      pb_.phi(x, {out, static_cast<std::size_t>(k)});
      for (int c = 0; c < k; ++c) {
        if (!std::isfinite(out[c])) throw std::invalid_argument("solve: phi is not finite on the grid");
        field_.at(0, n, c) = out[c];
      }
    }
    report_.phi_sup = field_.sup_norm(0);
    report_.phi_lipschitz = field_.lipschitz_norm(0);
    const double threshold = cfg_.blowup_threshold > 0.0 ? cfg_.blowup_threshold
                             : report_.phi_lipschitz > 0.0 ? 25.0 * report_.phi_lipschitz
                                                           : std::numeric_limits<double>::infinity();
    report_.blowup_threshold = threshold;
    sigma_.assign(time_.nodes(), 0.0);

    const double min_window = cfg_.min_window > 0.0 ? cfg_.min_window : 4.0 * cfg_.dt;
    double window = std::max(cfg_.window, min_window);
    std::vector<double> lipschitz_history{report_.phi_lipschitz};
    int start = 0;
    int halvings = 0;
    std::size_t exits = 0, samples = 0;
    int completed = 0;
    while (start < time_.steps()) {
      const int span = std::max(1, static_cast<int>(std::lround(window / cfg_.dt)));
      const int end = std::min(time_.steps(), start + span);
      WindowOutcome outcome = solve_window(start, end);
      outcome.report.halvings = halvings;
      if (!outcome.success) {
        report_.rejected_windows.push_back(outcome.report);
        if (window <= min_window * (1.0 + 1e-12)) {
          finish(completed, started);
          throw NonContraction("Picard iteration did not contract on the minimal window ending at t = " +
                                   std::to_string(time_.time(start)),
                               report_);
        }
        window = std::max(0.5 * window, min_window);
        ++halvings;
        continue;
      }
      report_.windows.push_back(outcome.report);
      exits += outcome.exits;
      samples += outcome.samples;
      completed = end;
      start = end;
      lipschitz_history.push_back(field_.lipschitz_norm(end));
      const auto decision = blow_up_detector(lipschitz_history, threshold);
      if (decision.blow_up) {
        report_.blow_up = true;
        report_.t_max = time_.time(end);
        break;
      }
    }
    report_.exit_fraction = samples ? static_cast<double>(exits) / static_cast<double>(samples) : 0.0;
    finish(completed, started);

    if (completed == time_.steps()) return {std::move(field_), std::move(report_)};
    // Truncate at the blow-up time.
    SpaceTimeField truncated(space, TimeGrid::from_steps(time_.time(completed), completed), k);
    for (int i = 0; i <= completed; ++i) {
      std::copy(field_.slice(i).begin(), field_.slice(i).end(), truncated.slice(i).begin());
    }
    return {std::move(truncated), std::move(report_)};
  }

 private:
  void finish(int completed, std::chrono::steady_clock::time_point started) {
    report_.completed_time = time_.time(completed);
    report_.times.clear();
    report_.sup_norms.clear();
    report_.lipschitz_norms.clear();
    report_.std_errors.clear();
    report_.interpolation_bounds.clear();
    for (int i = 0; i <= completed; ++i) {
      report_.times.push_back(time_.time(i));
      report_.sup_norms.push_back(field_.sup_norm(i));
      report_.lipschitz_norms.push_back(field_.lipschitz_norm(i));
      report_.std_errors.push_back(sigma_[i]);
      report_.interpolation_bounds.push_back(field_.interpolation_error_bound(i));
    }
    report_.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  }

  // sup over nodes and slices 0..i of |F(t, x, u_t(x))| for the given iterate.
  std::vector<double> source_sup(const SpaceTimeField& u, int last) const {
    std::vector<double> sup(last + 1, 0.0);
    if (!pb_.F) return sup;
    const int k = pb_.components;
    std::vector<double> x(cfg_.space.dim());
    double uv[8], out[8];
    for (int i = 0; i <= last; ++i) {
      double best = i > 0 ? sup[i - 1] : 0.0;
      for (std::size_t n = 0; n < cfg_.space.size(); ++n) {
        cfg_.space.node(n, x);
        for (int c = 0; c < k; ++c) uv[c] = u.at(i, n, c);
        pb_.F(time_.time(i), x, {uv, static_cast<std::size_t>(k)}, {out, static_cast<std::size_t>(k)});
        for (int c = 0; c < k; ++c) best = std::max(best, std::fabs(out[c]));
      }
      sup[i] = best;
    }
    return sup;
  }

  WindowOutcome solve_window(int start, int end) {
    WindowOutcome outcome;
    outcome.report.start_time = time_.time(end);
    outcome.report.end_time = time_.time(start);
    const int E = cfg_.substeps;
    const int k = pb_.components;
    const std::size_t nodes = cfg_.space.size();
    const std::size_t slice_size = nodes * k;

    const double path_length = cfg_.restart_stride == 0 ? 0.5 * (end - start + 1) : cfg_.restart_stride;
    const double cost = static_cast<double>(cfg_.particles) * nodes * (end - start) * E * path_length;
    if (cost > cfg_.max_particle_steps) {
      throw BudgetExceeded("solve: particle steps per iteration", cost, cfg_.max_particle_steps);
    }

    std::unique_ptr<kernels::IncrementTable> table;
    const bool split = coupling_ == CouplingMode::constant_big_jump;
    const std::uint64_t intervals = static_cast<std::uint64_t>(end - start) * E;
    if (kernels::IncrementTable::bytes_needed(pb_.triple.dim(), split, cfg_.particles, intervals) <=
        cfg_.increment_cache_bytes) {
      table = std::make_unique<kernels::IncrementTable>(pb_.triple, split, cfg_.dt / E, cfg_.seed, cfg_.particles,
                                                        static_cast<std::uint64_t>(start) * E, intervals,
                                                        cfg_.small_jump_cutoff, cfg_.parallel);
    }

    // u^0 is the window's terminal slice, constant in time.
    SpaceTimeField previous = field_;
    for (int i = start + 1; i <= end; ++i) {
      std::copy(field_.slice(start).begin(), field_.slice(start).end(), previous.slice(i).begin());
    }
    SpaceTimeField current = previous;
    std::vector<double> sigma(sigma_);
    const bool apriori = pb_.mode != PideMode::linear_fk;

    for (int n = 1; n <= cfg_.max_iterations; ++n) {
      std::size_t exits = 0;
      for (int i = start + 1; i <= end; ++i) {
        kernels::SliceContext ctx;
        ctx.problem = &pb_;
        ctx.coupling = coupling_;
        ctx.previous = &previous;
        ctx.current = &current;
        ctx.target = i;
        ctx.restart = cfg_.restart_stride == 0 ? start : std::max(start, i - cfg_.restart_stride);
        ctx.substeps = E;
        ctx.particles = cfg_.particles;
        ctx.seed = cfg_.seed;
        ctx.small_jump_cutoff = cfg_.small_jump_cutoff;
        ctx.table = table.get();
        auto out = cfg_.parallel ? kernels::estimate_slice_parallel(ctx) : kernels::estimate_slice_serial(ctx);
        std::copy(out.values.begin(), out.values.end(), current.slice(i).begin());
        double se = 0.0;
        for (double v : out.std_errors) se = std::max(se, v);
        // Errors of successive restarts add in quadrature along the chain.
        sigma[i] = std::sqrt(sigma[ctx.restart] * sigma[ctx.restart] + se * se);
        exits += out.exits;
      }
      double residual = 0.0;
      for (int i = start + 1; i <= end; ++i) {
        const auto a = current.slice(i);
        const auto b = previous.slice(i);
        for (std::size_t j = 0; j < slice_size; ++j) residual = std::max(residual, std::fabs(a[j] - b[j]));
      }
      if (!std::isfinite(residual) || !current.all_finite()) residual = std::numeric_limits<double>::infinity();
      if (apriori && std::isfinite(residual)) {
        const auto fsup = source_sup(previous, end);
        for (int i = start + 1; i <= end; ++i) {
          const double bound = report_.phi_sup + std::fabs(time_.time(i)) * fsup[i] + 3.0 * sigma[i];
          const double excess = current.sup_norm(i) - bound;
          ++report_.apriori_checks;
          report_.apriori_worst_excess = std::max(report_.apriori_worst_excess, excess);
          if (excess > 1e-12 * std::max(1.0, bound)) ++report_.apriori_violations;
        }
      }
      outcome.report.residuals.push_back(residual);
      std::swap(previous, current);
      outcome.exits = exits;
      outcome.samples = cfg_.particles * nodes * (end - start);
      const auto& r = outcome.report.residuals;
      if (r.size() >= 3) {
        const double ratio = r[r.size() - 2] > 0.0 ? r.back() / r[r.size() - 2] : 0.0;
        outcome.report.contraction_ratio = std::max(outcome.report.contraction_ratio, ratio);
      }
      if (residual <= cfg_.tolerance) {
        outcome.success = true;
        break;
      }
      if (!std::isfinite(residual) || (r.size() >= 3 && r.back() >= r[r.size() - 2])) break;
    }
    outcome.report.converged = outcome.success;
    if (outcome.success) {
      for (int i = start + 1; i <= end; ++i) {
        std::copy(previous.slice(i).begin(), previous.slice(i).end(), field_.slice(i).begin());
        sigma_[i] = sigma[i];
      }
    }
    return outcome;
  }

  const PideProblem& pb_;
  const SolverConfig& cfg_;
  CouplingMode coupling_;
  TimeGrid time_;
  SpaceTimeField field_;
  SolveReport report_;
  std::vector<double> sigma_;
};

}  // namespace

SolveResult solve_semilinear(const PideProblem& problem, const SolverConfig& config) {
  if (problem.mode != PideMode::semilinear) throw std::invalid_argument("solve_semilinear: mode must be semilinear");
  validate(problem, config);
  return Solver(problem, config).run();
}

SolveResult solve_linear_fk(const PideProblem& problem, const SolverConfig& config) {
  if (problem.mode != PideMode::linear_fk) throw std::invalid_argument("solve_linear_fk: mode must be linear_fk");
  validate(problem, config);
  if ((problem.G && problem.G_depends_on_u) || (problem.F && problem.F_depends_on_u)) {
    throw std::invalid_argument("solve_linear_fk: G and F must not depend on u");
  }
  if (!problem.H) throw std::invalid_argument("solve_linear_fk: H is required");
  return Solver(problem, config).run();
}

SolveResult solve_quasilinear(const PideProblem& problem, const SolverConfig& config) {
  if (problem.mode != PideMode::quasilinear_general && problem.mode != PideMode::quasilinear_constant_big_jump) {
    throw std::invalid_argument("solve_quasilinear: mode must be quasi-linear");
  }
  validate(problem, config);
  require_coupling_allowed(coupling_mode(problem.mode), problem.triple);
  auto result = Solver(problem, config).run();
  if (problem.mode == PideMode::quasilinear_general) {
    result.report.notes.push_back(
        "general coupling gated on a finite beta-moment for some beta > 1; the existence theory for the "
        "quasi-linear equation assumes all moments of order >= 2");
  } else {
    result.report.notes.push_back("constant big-jump coupling assumes bounded G, phi and f");
  }
  result.report.notes.push_back("smoothness of G, f and phi is assumed, not checked");
  return result;
}

SolveResult solve(const PideProblem& problem, const SolverConfig& config) {
  switch (problem.mode) {
    case PideMode::semilinear:
      return solve_semilinear(problem, config);
    case PideMode::linear_fk:
      return solve_linear_fk(problem, config);
    default:
      return solve_quasilinear(problem, config);
  }
}

}  // namespace levypide
