#pragma once

#include <span>

namespace levypide {

struct SampleSummary {
  double mean = 0.0;
  double std_error = 0.0;  ///< Sample standard deviation / sqrt(n).
};

SampleSummary summarize(std::span<const double> samples);

/// Two-sample Kolmogorov-Smirnov statistic sup |F_a - F_b|.
double ks_statistic(std::span<const double> a, std::span<const double> b);

/// Asymptotic critical value c(level) sqrt((n + m) / (n m)) with
/// c(level) = sqrt(-ln(level / 2) / 2).
double ks_critical_value(std::size_t n, std::size_t m, double level);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_std_error = 0.0;
};

/// Ordinary least squares y = intercept + slope x.
LineFit fit_line(std::span<const double> x, std::span<const double> y);

}  // namespace levypide
