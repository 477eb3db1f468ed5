#include "levypide/sfde.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "levypide/errors.hpp"
#include "levypide/stats.hpp"

namespace levypide {

const char* to_string(CouplingMode mode) {
  switch (mode) {
    case CouplingMode::general:
      return "general";
    case CouplingMode::constant_big_jump:
      return "constant_big_jump";
    case CouplingMode::drift_only:
      return "drift_only";
  }
  return "unknown";
}

void require_coupling_allowed(CouplingMode mode, const LevyTriple& triple) {
  if (mode != CouplingMode::general) return;
  const double alpha = triple.stable_index();
  if (std::holds_alternative<AlphaStable>(triple.jumps()) ||
      std::holds_alternative<TruncatedStable>(triple.jumps())) {
    if (alpha <= 1.0) {
      throw ModeError("general coupling needs a finite beta-moment for some beta > 1; stable noise with alpha = " +
                      std::to_string(alpha) + " has none");
    }
    return;
  }
  for (double beta : {2.0, 1.5, 1.1}) {
    if (check_moment(triple, beta) == MomentStatus::finite) return;
  }
  throw ModeError("general coupling needs a finite beta-moment for some beta > 1");
}

std::uint64_t interval_index(double step_end_time, double dt) {
  const double e = -step_end_time / dt;
  if (e < -1e-9) throw std::invalid_argument("interval_index: step ends after time 0");
  return static_cast<std::uint64_t>(std::llround(std::max(0.0, e)));
}

SamplePath simulate_path(CouplingMode mode, const CoefficientFn& coefficient, const LevyTriple& triple,
                         double start_time, std::span<const double> x, const TimeGrid& grid,
                         std::uint64_t seed, std::uint64_t stream, const PathOptions& options) {
  const int m = triple.dim();
  const int d = static_cast<int>(x.size());
  if (mode == CouplingMode::drift_only && d != m) {
    throw std::invalid_argument("simulate_path: drift_only needs state dimension equal to noise dimension");
  }
  if (mode == CouplingMode::constant_big_jump && d != m) {
    throw std::invalid_argument("simulate_path: constant_big_jump adds raw big jumps, so d must equal m");
  }
  if (d > 8 || m > 8) throw std::invalid_argument("simulate_path: dimensions above 8 are not supported");
  const int first = grid.index_of(start_time);
  const int last = grid.index_of(options.end_time);
  if (last > first) throw std::invalid_argument("simulate_path: end time precedes start time");
  const double dt = grid.dt();

  SamplePath path;
  path.start_time = start_time;
  path.dim = d;
  std::vector<double> state(x.begin(), x.end());
  auto record = [&](int index) {
    if (!options.record_states && index != last) return;
    path.times.push_back(grid.time(index));
    path.states.insert(path.states.end(), state.begin(), state.end());
  };
  record(first);

  const NoiseStream noise(seed, stream);
  const std::size_t coef_size = mode == CouplingMode::drift_only ? d : static_cast<std::size_t>(d) * m;
  std::vector<double> coef(coef_size), inc(m), small(m), big(m);
  for (int j = first; j > last; --j) {
    const double s = grid.time(j);
    auto draws = noise.step(static_cast<std::uint64_t>(j - 1));
    coefficient(s, state, coef);
    bool jumped = false;
    switch (mode) {
      case CouplingMode::drift_only:
        sample_increment(triple, dt, draws, inc);
        for (int i = 0; i < d; ++i) state[i] += coef[i] * dt + inc[i];
        if (triple.has_jumps()) {
          double n2 = 0.0;
          for (int i = 0; i < m; ++i) n2 += inc[i] * inc[i];
          jumped = n2 >= 1.0;
        }
        break;
      case CouplingMode::general: {
        sample_increment(triple, dt, draws, inc);
        for (int i = 0; i < d; ++i) {
          double acc = 0.0;
          for (int k = 0; k < m; ++k) acc += coef[i + k * d] * inc[k];
          state[i] += acc;
        }
        if (triple.has_jumps()) {
          double n2 = 0.0;
          for (int i = 0; i < m; ++i) n2 += inc[i] * inc[i];
          jumped = n2 >= 1.0;
        }
        break;
      }
      case CouplingMode::constant_big_jump: {
        sample_split_increment(triple, dt, draws, small, big, options.small_jump_cutoff);
        for (int i = 0; i < d; ++i) {
          double acc = big[i];
          for (int k = 0; k < m; ++k) acc += coef[i + k * d] * small[k];
          state[i] += acc;
        }
        for (int i = 0; i < m; ++i) jumped = jumped || big[i] != 0.0;
        break;
      }
    }
    if (jumped) {
      const auto& size = mode == CouplingMode::constant_big_jump ? big : inc;
      path.big_jumps.push_back({grid.time(j - 1), size});
    }
    for (double v : state) {
      if (!std::isfinite(v)) path.divergent = true;
    }
    if (path.divergent) {
      record(last);
      return path;
    }
    record(j - 1);
  }
  return path;
}

void write_path_csv(const SamplePath& path, const std::string& file) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + file);
  out << "s";
  for (int i = 0; i < path.dim; ++i) out << ",x" << i;
  out << ",jump\n";
  std::size_t next_jump = 0;
  char buf[40];
  for (std::size_t n = 0; n < path.times.size(); ++n) {
    const double s = path.times[n];
    bool jump = false;
    while (next_jump < path.big_jumps.size() && path.big_jumps[next_jump].time <= s) {
      jump = jump || path.big_jumps[next_jump].time == s;
      ++next_jump;
    }
    std::snprintf(buf, sizeof buf, "%.17g", s);
    out << buf;
    for (double v : path.state(n)) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out << ',' << buf;
    }
    out << ',' << (jump ? 1 : 0) << '\n';
  }
}

FlowTestResult flow_test(CouplingMode mode, const CoefficientFn& coefficient, const LevyTriple& triple,
                         double t1, double t2, double t3, std::span<const double> x, std::size_t paths,
                         const TimeGrid& grid, std::uint64_t seed,
                         const std::function<double(std::span<const double>)>& phi) {
  if (!(t1 < t2 && t2 < t3 && t3 <= 0.0)) throw std::invalid_argument("flow_test: need t1 < t2 < t3 <= 0");
  // Misaligned times are rejected by index_of (RangeError).
  grid.index_of(t1);
  grid.index_of(t2);
  grid.index_of(t3);
  auto observe = [&](std::span<const double> s) { return phi ? phi(s) : s[0]; };
  PathOptions to2{t2, 1e-3, false}, to3{t3, 1e-3, false};

  FlowTestResult result;
  result.paths = paths;
  std::vector<double> direct(paths), composed(paths);
  for (std::size_t p = 0; p < paths; ++p) {
    const auto whole = simulate_path(mode, coefficient, triple, t1, x, grid, seed, p, to3);
    const auto head = simulate_path(mode, coefficient, triple, t1, x, grid, seed, p, to2);
    const auto tail = simulate_path(mode, coefficient, triple, t2, head.final_state(), grid, seed, p, to3);
    for (int i = 0; i < whole.dim; ++i) {
      result.pathwise_gap = std::max(result.pathwise_gap, std::fabs(whole.final_state()[i] - tail.final_state()[i]));
    }
    direct[p] = observe(whole.final_state());
    // Independent legs: fresh streams for each half.
    const auto head2 = simulate_path(mode, coefficient, triple, t1, x, grid, seed, paths + p, to2);
    const auto tail2 = simulate_path(mode, coefficient, triple, t2, head2.final_state(), grid, seed, 2 * paths + p, to3);
    composed[p] = observe(tail2.final_state());
  }
  result.ks_statistic = ks_statistic(direct, composed);
  result.ks_critical = ks_critical_value(paths, paths, 0.01);
  return result;
}

}  // namespace levypide
