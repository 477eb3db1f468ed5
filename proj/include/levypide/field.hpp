#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace levypide {

/// Uniform tensor grid on a box in R^d. Node coordinates include both
/// corners. Axis 0 varies fastest in the flat node index.
///
/// Outside the box, fields extend by the nearest node value. An axis may
/// instead be flagged periodic with period upper - lower, in which case the
/// first and last node describe the same point.
class SpaceGrid {
 public:
  SpaceGrid(std::vector<double> lower, std::vector<double> upper, std::vector<int> points,
            std::vector<bool> periodic = {});
  /// One-dimensional convenience constructor.
  SpaceGrid(double lower, double upper, int points, bool periodic = false);

  int dim() const { return static_cast<int>(lower_.size()); }
  double lower(int axis) const { return lower_[axis]; }
  double upper(int axis) const { return upper_[axis]; }
  int points(int axis) const { return points_[axis]; }
  double spacing(int axis) const { return spacing_[axis]; }
  double inv_spacing(int axis) const { return inv_spacing_[axis]; }
  bool periodic(int axis) const { return periodic_[axis]; }
  std::size_t stride(int axis) const { return stride_[axis]; }
  std::size_t size() const { return size_; }

  double coordinate(int axis, int index) const;
  /// Coordinates of flat node `node` written into `out` (size d).
  void node(std::size_t node, std::span<double> out) const;
  std::vector<double> node(std::size_t node) const;
  int axis_index(std::size_t node, int axis) const;

  bool contains(std::span<const double> x) const;
  bool operator==(const SpaceGrid& other) const;

 private:
  std::vector<double> lower_, upper_, spacing_, inv_spacing_;
  std::vector<int> points_;
  std::vector<bool> periodic_;
  std::vector<std::size_t> stride_;
  std::size_t size_ = 0;
};

/// Time nodes t_i = -i * dt, i = 0..steps, running from 0 down to T.
class TimeGrid {
 public:
  /// `horizon` T < 0 must be an integer multiple of dt (to 1e-9 relative).
  TimeGrid(double horizon, double dt);
  static TimeGrid from_steps(double horizon, int steps);

  double horizon() const { return horizon_; }
  double dt() const { return dt_; }
  int steps() const { return steps_; }
  int nodes() const { return steps_ + 1; }
  double time(int index) const { return index == steps_ ? horizon_ : -index * dt_; }
  /// Index of the node equal to t (to round-off); throws RangeError otherwise.
  int index_of(double t) const;
  bool operator==(const TimeGrid& other) const;

 private:
  double horizon_;
  double dt_;
  int steps_;
};

/// Multilinear interpolation on one stored time slice.
class SliceView {
 public:
  SliceView(const SpaceGrid& grid, const double* values, int components)
      : grid_(&grid), values_(values), components_(components) {}

  double operator()(std::span<const double> x, int component = 0) const;
  void all(std::span<const double> x, std::span<double> out) const;

  /// Fast path for one-dimensional scalar fields.
  double eval1(double x) const;

 private:
  const SpaceGrid* grid_;
  const double* values_;
  int components_;
};

/// Values u_t(x) in R^k on a space-time grid, stored as [time][node][component].
class SpaceTimeField {
 public:
  SpaceTimeField(SpaceGrid space, TimeGrid time, int components = 1, double fill = 0.0);

  const SpaceGrid& space() const { return space_; }
  const TimeGrid& time() const { return time_; }
  int components() const { return components_; }

  double& at(int time_index, std::size_t node, int component = 0) {
    return values_[(static_cast<std::size_t>(time_index) * space_.size() + node) * components_ + component];
  }
  double at(int time_index, std::size_t node, int component = 0) const {
    return values_[(static_cast<std::size_t>(time_index) * space_.size() + node) * components_ + component];
  }
  std::span<double> slice(int time_index);
  std::span<const double> slice(int time_index) const;
  SliceView view(int time_index) const {
    return SliceView(space_, values_.data() + static_cast<std::size_t>(time_index) * space_.size() * components_,
                     components_);
  }
  const std::vector<double>& values() const { return values_; }

  /// Multilinear in space, linear in time. Throws RangeError for t outside [T, 0].
  Eigen::VectorXd eval(double t, std::span<const double> x) const;
  double eval(double t, std::span<const double> x, int component) const;

  /// Max over adjacent node pairs of |u(x) - u(x')| / |x - x'| (Euclidean norm over components).
  double lipschitz_norm(int time_index) const;
  double sup_norm(int time_index) const;
  double sup_norm() const;
  double min_value(int time_index, int component = 0) const;
  /// Central differences in the interior, one-sided at the boundary. Rows are
  /// space axes, columns components.
  Eigen::MatrixXd estimate_gradient(int time_index, std::size_t node) const;
  /// Bound on the multilinear interpolation error of a slice, sum over axes of
  /// h^2/8 * max |second difference| / h^2.
  double interpolation_error_bound(int time_index) const;

  bool all_finite() const;

 private:
  SpaceGrid space_;
  TimeGrid time_;
  int components_;
  std::vector<double> values_;
};

/// Writes `<stem>.csv` (one row per space node: coordinates, then one column
/// per time node and component, %.17g) and `<stem>.json` describing the grids.
/// With `forward_time` the JSON labels the time nodes as t_fwd = -t.
void write_field(const SpaceTimeField& field, const std::string& stem, bool forward_time = false);
SpaceTimeField read_field(const std::string& stem);

}  // namespace levypide
