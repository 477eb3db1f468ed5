#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "levypide/pide.hpp"

namespace levypide {

NestedResult nested_conditional_simulate(const PideProblem& problem, const SpaceTimeField& frozen, double t,
                                         std::span<const double> x, std::size_t outer, std::size_t inner,
                                         const TimeGrid& grid, std::uint64_t seed, double budget) {
  if (problem.mode != PideMode::semilinear || problem.components != 1) {
    throw std::invalid_argument("nested_conditional_simulate: scalar semilinear problems only");
  }
  const int d = problem.dim;
  if (problem.triple.dim() != d || frozen.space().dim() != d || static_cast<int>(x.size()) != d) {
    throw std::invalid_argument("nested_conditional_simulate: dimensions differ");
  }
  if (outer == 0 || inner < 2) throw std::invalid_argument("nested_conditional_simulate: need outer >= 1, inner >= 2");
  if (t < frozen.time().horizon() - 1e-12) throw RangeError("nested_conditional_simulate: t outside the frozen field");
  const int L = grid.index_of(t);
  const double required = static_cast<double>(outer) * inner * L * L;
  if (required > budget) throw BudgetExceeded("nested_conditional_simulate", required, budget);

  const double dt = grid.dt();
  auto frozen_at = [&](double s, std::span<const double> y) { return frozen.eval(s, y, 0); };

  // phi(X_0) + int_s^0 F dr along one path from (node j, y), drift and source frozen at the field.
  auto inner_value = [&](int j, std::span<const double> y, std::uint64_t stream) {
    const NoiseStream noise(seed, stream);
    std::vector<double> state(y.begin(), y.end()), coef(d), inc(d);
    double u = 0.0, running = 0.0, f = 0.0;
    for (int i = j; i > 0; --i) {
      const double s = grid.time(i);
      u = frozen_at(s, state);
      if (problem.G) {
        problem.G(s, state, {&u, 1}, coef);
      } else {
        std::fill(coef.begin(), coef.end(), 0.0);
      }
      if (problem.F) {
        problem.F(s, state, {&u, 1}, {&f, 1});
        running += f * dt;
      }
      auto draws = noise.step(static_cast<std::uint64_t>(i - 1));
      sample_increment(problem.triple, dt, draws, inc);
      for (int a = 0; a < d; ++a) state[a] += coef[a] * dt + inc[a];
    }
    double terminal = 0.0;
    problem.phi(state, {&terminal, 1});
    return terminal + running;
  };

  NestedResult result;
  double gap_sum = 0.0, se_sum = 0.0;
  std::size_t gap_count = 0;
  for (std::size_t p = 0; p < outer; ++p) {
    const NoiseStream noise(seed, p);
    SamplePath path;
    path.start_time = t;
    path.dim = d;
    std::vector<double> state(x.begin(), x.end()), coef(d), inc(d), values(inner);
    for (int j = L; j >= 0; --j) {
      const double s = grid.time(j);
      path.times.push_back(s);
      path.states.insert(path.states.end(), state.begin(), state.end());
      if (j == 0) break;
      // Direct estimate of the conditional expectation from the current state.
      const std::uint64_t base = outer + (p * L + static_cast<std::size_t>(L - j)) * inner;
#pragma omp parallel for schedule(static)
      for (long long q = 0; q < static_cast<long long>(inner); ++q) {
        values[q] = inner_value(j, state, base + static_cast<std::uint64_t>(q));
      }
      double mean = 0.0;
      for (double v : values) mean += v;
      mean /= inner;
      double var = 0.0;
      for (double v : values) var += (v - mean) * (v - mean);
      const double se = std::sqrt(var / (inner - 1.0) / inner);
      result.steps_used += inner * static_cast<std::size_t>(j);

      const double gap = std::fabs(mean - frozen_at(s, state));
      result.max_gap = std::max(result.max_gap, gap);
      result.inner_std_error = std::max(result.inner_std_error, se);
      gap_sum += gap;
      se_sum += se;
      ++gap_count;

      double y = mean;
      if (problem.G) {
        problem.G(s, state, {&y, 1}, coef);
      } else {
        std::fill(coef.begin(), coef.end(), 0.0);
      }
      auto draws = noise.step(static_cast<std::uint64_t>(j - 1));
      sample_increment(problem.triple, dt, draws, inc);
      for (int a = 0; a < d; ++a) state[a] += coef[a] * dt + inc[a];
      result.steps_used += 1;
    }
    result.paths.push_back(std::move(path));
  }
  result.mean_gap = gap_count ? gap_sum / gap_count : 0.0;
  result.mean_inner_std_error = gap_count ? se_sum / gap_count : 0.0;
  for (int i = 0; i < frozen.time().nodes() && frozen.time().time(i) >= t - 1e-12; ++i) {
    result.interpolation_bound = std::max(result.interpolation_bound, frozen.interpolation_error_bound(i));
  }
  return result;
}

}  // namespace levypide
