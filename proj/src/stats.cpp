#include "levypide/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace levypide {

SampleSummary summarize(std::span<const double> samples) {
  const std::size_t n = samples.size();
  if (n == 0) throw std::invalid_argument("summarize: empty sample");
  // Shift by the first sample to keep the variance accurate for large offsets.
  const double shift = samples[0];
  double s = 0.0, s2 = 0.0;
  for (double v : samples) {
    s += v - shift;
    s2 += (v - shift) * (v - shift);
  }
  SampleSummary out;
  out.mean = shift + s / n;
  if (n > 1) {
    const double var = std::max(0.0, (s2 - s * s / n) / (n - 1));
    out.std_error = std::sqrt(var / n);
  }
  return out;
}

double ks_statistic(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("ks_statistic: empty sample");
  std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double n = static_cast<double>(x.size()), m = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::fabs(i / n - j / m));
  }
  return d;
}

double ks_critical_value(std::size_t n, std::size_t m, double level) {
  if (n == 0 || m == 0 || !(level > 0.0 && level < 1.0)) {
    throw std::invalid_argument("ks_critical_value: bad arguments");
  }
  const double c = std::sqrt(-0.5 * std::log(0.5 * level));
  return c * std::sqrt(static_cast<double>(n + m) / (static_cast<double>(n) * m));
}

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n) throw std::invalid_argument("fit_line: need at least two matched points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("fit_line: x values are all equal");
  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  if (n > 2) {
    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = y[i] - fit.intercept - fit.slope * x[i];
      rss += r * r;
    }
    fit.slope_std_error = std::sqrt(rss / (n - 2) / sxx);
  }
  return fit;
}

}  // namespace levypide
