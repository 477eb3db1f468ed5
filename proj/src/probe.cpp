#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "levypide/pide.hpp"
#include "levypide/stats.hpp"

namespace levypide {

GradientProbeResult gradient_decay_probe(const LevyTriple& triple, const std::function<double(double)>& phi,
                                         const GradientProbeConfig& config) {
  if (triple.dim() != 1) throw std::invalid_argument("gradient_decay_probe: one-dimensional triples only");
  if (config.deltas.size() < 2) throw std::invalid_argument("gradient_decay_probe: need at least two deltas");
  if (config.particles < 2 || !(config.spacing > 0.0) || config.half_width < 1) {
    throw std::invalid_argument("gradient_decay_probe: bad particle count or grid");
  }
  const int nodes = 2 * config.half_width + 1;
  const double h = config.spacing;
  const std::size_t n = config.particles;
  GradientProbeResult result;
  std::vector<double> increments(n);

  for (std::size_t k = 0; k < config.deltas.size(); ++k) {
    const double delta = config.deltas[k];
    if (!(delta > 0.0)) throw std::invalid_argument("gradient_decay_probe: deltas must be positive");
    for (std::size_t p = 0; p < n; ++p) {
      const NoiseStream noise(config.seed, p);
      auto draws = noise.step(k);
      sample_increment(triple, delta, draws, {&increments[p], 1});
    }
    // Central differences of E phi(x + L_delta) at interior probe nodes, with
    // the same increments at every node.
    std::vector<double> grad(nodes, 0.0), err(nodes, 0.0);
#pragma omp parallel for schedule(static)
    for (int j = 1; j < nodes - 1; ++j) {
      const double x = config.center + (j - config.half_width) * h;
      double sum = 0.0, sum2 = 0.0;
      for (std::size_t p = 0; p < n; ++p) {
        const double v = (phi(x + h + increments[p]) - phi(x - h + increments[p])) / (2.0 * h);
        sum += v;
        sum2 += v * v;
      }
      const double mean = sum / n;
      grad[j] = mean;
      err[j] = std::sqrt(std::max(0.0, (sum2 - sum * mean) / (n - 1.0)) / n);
    }
    int best = 1;
    for (int j = 1; j < nodes - 1; ++j) {
      if (std::fabs(grad[j]) > std::fabs(grad[best])) best = j;
    }
    const double norm = std::fabs(grad[best]);
    if (!(norm > 4.0 * err[best])) {
      throw InsufficientSamples("gradient_decay_probe: Monte Carlo noise dominates the gradient at delta = " +
                                std::to_string(delta) + "; increase the particle count");
    }
    result.deltas.push_back(delta);
    result.gradient_norms.push_back(norm);
    result.std_errors.push_back(err[best]);
  }

  std::vector<double> lx, ly;
  for (std::size_t k = 0; k < result.deltas.size(); ++k) {
    lx.push_back(std::log(result.deltas[k]));
    ly.push_back(std::log(result.gradient_norms[k]));
  }
  const LineFit fit = fit_line(lx, ly);
  result.slope = fit.slope;
  result.slope_std_error = fit.slope_std_error;
  return result;
}

}  // namespace levypide
