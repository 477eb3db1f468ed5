#pragma once

#include <functional>
#include <vector>

namespace levypide::quad {

struct Result {
  double value = 0.0;
  double error = 0.0;
};

/// Adaptive Gauss-Kronrod (15-point) on a finite interval. Throws
/// QuadratureError if the error estimate stays above `tol` (absolute) after
/// `max_depth` bisections.
Result integrate(const std::function<double(double)>& f, double a, double b, double tol,
                 unsigned max_depth = 30);

/// Same as `integrate` but never throws; the caller inspects `error`.
Result integrate_unchecked(const std::function<double(double)>& f, double a, double b,
                           double tol, unsigned max_depth = 30);

struct Rule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Gauss-Hermite rule for weight exp(-x^2) on the real line, order <= 150.
Rule gauss_hermite(int order);

/// Gauss-Legendre rule on [-1, 1].
Rule gauss_legendre(int order);

}  // namespace levypide::quad
