#include "levypide/field.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "levypide/errors.hpp"

namespace levypide {

namespace {

constexpr double kSnap = 1e-11;

// Cell index i and weight w in [0, 1) with x = node_i + w h (after clamping or wrapping).
inline void locate(double x, double lower, double inv_h, int points, bool periodic, int& i, double& w) {
  double s = (x - lower) * inv_h;
  const int cells = points - 1;
  if (periodic) {
    if (s < 0.0 || s >= cells) s -= cells * std::floor(s / cells);
  } else if (!(s > 0.0)) {
    i = 0;
    w = 0.0;
    return;
  } else if (s >= cells) {
    i = cells;
    w = 0.0;
    return;
  }
  double f = std::floor(s);
  w = s - f;
  if (w < kSnap) {
    w = 0.0;
  } else if (w > 1.0 - kSnap) {
    w = 0.0;
    f += 1.0;
  }
  i = static_cast<int>(f);
  if (i >= cells) {
    i = periodic ? i - cells : cells;
    if (!periodic) w = 0.0;
  }
}

}  // namespace

SpaceGrid::SpaceGrid(std::vector<double> lower, std::vector<double> upper, std::vector<int> points,
                     std::vector<bool> periodic)
    : lower_(std::move(lower)), upper_(std::move(upper)), points_(std::move(points)), periodic_(std::move(periodic)) {
  const std::size_t d = lower_.size();
  if (d == 0 || upper_.size() != d || points_.size() != d) {
    throw std::invalid_argument("SpaceGrid: lower, upper and points must have the same nonzero length");
  }
  if (periodic_.empty()) periodic_.assign(d, false);
  if (periodic_.size() != d) throw std::invalid_argument("SpaceGrid: periodic flags have the wrong length");
  spacing_.resize(d);
  inv_spacing_.resize(d);
  stride_.resize(d);
  size_ = 1;
  for (std::size_t a = 0; a < d; ++a) {
    if (!(upper_[a] > lower_[a]) || !std::isfinite(upper_[a] - lower_[a])) {
      throw std::invalid_argument("SpaceGrid: extent must be strictly positive and finite");
    }
    if (points_[a] < 2) throw std::invalid_argument("SpaceGrid: at least 2 points per axis");
    spacing_[a] = (upper_[a] - lower_[a]) / (points_[a] - 1);
    inv_spacing_[a] = (points_[a] - 1) / (upper_[a] - lower_[a]);
    stride_[a] = size_;
    size_ *= static_cast<std::size_t>(points_[a]);
  }
}

SpaceGrid::SpaceGrid(double lower, double upper, int points, bool periodic)
    : SpaceGrid(std::vector<double>{lower}, std::vector<double>{upper}, std::vector<int>{points},
                std::vector<bool>{periodic}) {}

double SpaceGrid::coordinate(int axis, int index) const {
  return index == points_[axis] - 1 ? upper_[axis] : lower_[axis] + index * spacing_[axis];
}

int SpaceGrid::axis_index(std::size_t node, int axis) const {
  return static_cast<int>((node / stride_[axis]) % static_cast<std::size_t>(points_[axis]));
}

void SpaceGrid::node(std::size_t node, std::span<double> out) const {
  for (int a = 0; a < dim(); ++a) out[a] = coordinate(a, axis_index(node, a));
}

std::vector<double> SpaceGrid::node(std::size_t n) const {
  std::vector<double> out(dim());
  node(n, out);
  return out;
}

bool SpaceGrid::contains(std::span<const double> x) const {
  for (int a = 0; a < dim(); ++a) {
    if (x[a] < lower_[a] || x[a] > upper_[a]) return false;
  }
  return true;
}

bool SpaceGrid::operator==(const SpaceGrid& o) const {
  return lower_ == o.lower_ && upper_ == o.upper_ && points_ == o.points_ && periodic_ == o.periodic_;
}

TimeGrid::TimeGrid(double horizon, double dt) : horizon_(horizon), dt_(dt) {
  if (!(horizon < 0.0) || !(dt > 0.0)) throw std::invalid_argument("TimeGrid: need T < 0 and dt > 0");
  const double n = -horizon / dt;
  steps_ = static_cast<int>(std::lround(n));
  if (steps_ < 1 || std::fabs(n - steps_) > 1e-9 * std::max(1.0, n)) {
    throw std::invalid_argument("TimeGrid: |T| must be an integer multiple of dt");
  }
}

TimeGrid TimeGrid::from_steps(double horizon, int steps) {
  if (steps < 1) throw std::invalid_argument("TimeGrid: steps must be positive");
  return TimeGrid(horizon, -horizon / steps);
}

int TimeGrid::index_of(double t) const {
  const double s = -t / dt_;
  const long i = std::lround(s);
  if (i < 0 || i > steps_ || std::fabs(s - i) > 1e-9 * std::max(1.0, s)) {
    throw RangeError("time " + std::to_string(t) + " is not a node of the time grid");
  }
  return static_cast<int>(i);
}

bool TimeGrid::operator==(const TimeGrid& o) const {
  return steps_ == o.steps_ && dt_ == o.dt_ && horizon_ == o.horizon_;
}

double SliceView::eval1(double x) const {
  int i;
  double w;
  locate(x, grid_->lower(0), grid_->inv_spacing(0), grid_->points(0), grid_->periodic(0), i, w);
  const double* v = values_ + static_cast<std::size_t>(i) * components_;
  return w == 0.0 ? v[0] : (1.0 - w) * v[0] + w * v[components_];
}

double SliceView::operator()(std::span<const double> x, int component) const {
  const int d = grid_->dim();
  if (d == 1) {
    int i;
    double w;
    locate(x[0], grid_->lower(0), grid_->inv_spacing(0), grid_->points(0), grid_->periodic(0), i, w);
    const double* v = values_ + static_cast<std::size_t>(i) * components_ + component;
    return w == 0.0 ? v[0] : (1.0 - w) * v[0] + w * v[components_];
  }
  int idx[8];
  double wt[8];
  for (int a = 0; a < d; ++a) {
    locate(x[a], grid_->lower(a), grid_->inv_spacing(a), grid_->points(a), grid_->periodic(a), idx[a], wt[a]);
  }
  double acc = 0.0;
  for (int corner = 0; corner < (1 << d); ++corner) {
    double weight = 1.0;
    std::size_t node = 0;
    for (int a = 0; a < d; ++a) {
      const bool up = (corner >> a) & 1;
      if (up && wt[a] == 0.0) {
        weight = 0.0;
        break;
      }
      weight *= up ? wt[a] : 1.0 - wt[a];
      node += static_cast<std::size_t>(idx[a] + (up ? 1 : 0)) * grid_->stride(a);
    }
    if (weight != 0.0) acc += weight * values_[node * components_ + component];
  }
  return acc;
}

void SliceView::all(std::span<const double> x, std::span<double> out) const {
  for (int c = 0; c < components_; ++c) out[c] = (*this)(x, c);
}

SpaceTimeField::SpaceTimeField(SpaceGrid space, TimeGrid time, int components, double fill)
    : space_(std::move(space)), time_(time), components_(components) {
  if (components < 1) throw std::invalid_argument("SpaceTimeField: components must be positive");
  if (space_.dim() > 8) throw std::invalid_argument("SpaceTimeField: at most 8 space dimensions");
  values_.assign(static_cast<std::size_t>(time_.nodes()) * space_.size() * components_, fill);
}

std::span<double> SpaceTimeField::slice(int ti) {
  const std::size_t n = space_.size() * components_;
  return {values_.data() + static_cast<std::size_t>(ti) * n, n};
}

std::span<const double> SpaceTimeField::slice(int ti) const {
  const std::size_t n = space_.size() * components_;
  return {values_.data() + static_cast<std::size_t>(ti) * n, n};
}

double SpaceTimeField::eval(double t, std::span<const double> x, int component) const {
  const double T = time_.horizon();
  const double slack = 1e-12 * std::fabs(T);
  if (!(t <= slack && t >= T - slack)) {
    throw RangeError("eval: time " + std::to_string(t) + " outside the field window");
  }
  if (static_cast<int>(x.size()) != space_.dim()) throw std::invalid_argument("eval: x has wrong dimension");
  double s = std::clamp(-t / time_.dt(), 0.0, static_cast<double>(time_.steps()));
  double f = std::floor(s);
  double w = s - f;
  if (w < kSnap) {
    w = 0.0;
  } else if (w > 1.0 - kSnap) {
    w = 0.0;
    f += 1.0;
  }
  int i = static_cast<int>(f);
  if (i >= time_.steps()) {
    i = time_.steps();
    w = 0.0;
  }
  const double a = view(i)(x, component);
  if (w == 0.0) return a;
  return (1.0 - w) * a + w * view(i + 1)(x, component);
}

Eigen::VectorXd SpaceTimeField::eval(double t, std::span<const double> x) const {
  Eigen::VectorXd out(components_);
  for (int c = 0; c < components_; ++c) out[c] = eval(t, x, c);
  return out;
}

double SpaceTimeField::lipschitz_norm(int ti) const {
  double best = 0.0;
  for (std::size_t n = 0; n < space_.size(); ++n) {
    for (int a = 0; a < space_.dim(); ++a) {
      if (space_.axis_index(n, a) + 1 >= space_.points(a)) continue;
      const std::size_t m = n + space_.stride(a);
      double d2 = 0.0;
      for (int c = 0; c < components_; ++c) {
        const double diff = at(ti, m, c) - at(ti, n, c);
        d2 += diff * diff;
      }
      best = std::max(best, std::sqrt(d2) / space_.spacing(a));
    }
  }
  return best;
}

double SpaceTimeField::sup_norm(int ti) const {
  double best = 0.0;
  for (double v : slice(ti)) best = std::max(best, std::fabs(v));
  return best;
}

double SpaceTimeField::sup_norm() const {
  double best = 0.0;
  for (double v : values_) best = std::max(best, std::fabs(v));
  return best;
}

double SpaceTimeField::min_value(int ti, int component) const {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t n = 0; n < space_.size(); ++n) best = std::min(best, at(ti, n, component));
  return best;
}

Eigen::MatrixXd SpaceTimeField::estimate_gradient(int ti, std::size_t node) const {
  Eigen::MatrixXd g(space_.dim(), components_);
  for (int a = 0; a < space_.dim(); ++a) {
    const int i = space_.axis_index(node, a);
    const int n = space_.points(a);
    const std::size_t s = space_.stride(a);
    const double h = space_.spacing(a);
    for (int c = 0; c < components_; ++c) {
      if (i > 0 && i + 1 < n) {
        g(a, c) = (at(ti, node + s, c) - at(ti, node - s, c)) / (2.0 * h);
      } else if (space_.periodic(a)) {
        // First and last node coincide; step across the seam.
        const std::size_t first = node - static_cast<std::size_t>(i) * s;
        const std::size_t last = first + static_cast<std::size_t>(n - 1) * s;
        const double next = at(ti, first + s, c);
        const double prev = at(ti, last - s, c);
        g(a, c) = (next - prev) / (2.0 * h);
      } else if (i == 0) {
        g(a, c) = (at(ti, node + s, c) - at(ti, node, c)) / h;
      } else {
        g(a, c) = (at(ti, node, c) - at(ti, node - s, c)) / h;
      }
    }
  }
  return g;
}

double SpaceTimeField::interpolation_error_bound(int ti) const {
  double bound = 0.0;
  for (int a = 0; a < space_.dim(); ++a) {
    if (space_.points(a) < 3) continue;
    double worst = 0.0;
    for (std::size_t n = 0; n < space_.size(); ++n) {
      const int i = space_.axis_index(n, a);
      if (i == 0 || i + 1 >= space_.points(a)) continue;
      const std::size_t s = space_.stride(a);
      for (int c = 0; c < components_; ++c) {
        worst = std::max(worst, std::fabs(at(ti, n + s, c) - 2.0 * at(ti, n, c) + at(ti, n - s, c)));
      }
    }
    bound += worst / 8.0;
  }
  return bound;
}

bool SpaceTimeField::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace levypide
