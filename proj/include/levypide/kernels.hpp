#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "levypide/pide.hpp"

namespace levypide::kernels {

/// Increments of every particle over a contiguous range of Euler intervals,
/// laid out [interval][particle][m]. Values equal what NoiseStream(seed, p)
/// produces for interval e, so cached and on-the-fly runs agree bit for bit.
class IncrementTable {
 public:
  IncrementTable(const LevyTriple& triple, bool split, double dt, std::uint64_t seed, std::size_t particles,
                 std::uint64_t first_interval, std::uint64_t intervals, double small_jump_cutoff, bool parallel);

  static std::size_t bytes_needed(int m, bool split, std::size_t particles, std::uint64_t intervals) {
    return sizeof(double) * static_cast<std::size_t>(m) * particles * intervals * (split ? 2 : 1);
  }

  bool covers(std::uint64_t e) const { return e >= first_ && e < first_ + count_; }
  /// Whole increment (or the small part when split).
  const double* increment(std::uint64_t e, std::size_t p) const {
    return data_.data() + ((e - first_) * particles_ + p) * m_;
  }
  const double* big(std::uint64_t e, std::size_t p) const {
    return big_.data() + ((e - first_) * particles_ + p) * m_;
  }

 private:
  int m_;
  std::size_t particles_;
  std::uint64_t first_, count_;
  std::vector<double> data_, big_;
};

/// Inputs for estimating one field slice from paths that restart on a later slice.
struct SliceContext {
  const PideProblem* problem = nullptr;
  CouplingMode coupling = CouplingMode::drift_only;
  const SpaceTimeField* previous = nullptr;  ///< u^{n-1}: drives the coefficients.
  const SpaceTimeField* current = nullptr;   ///< u^n: supplies values on the restart slice.
  int target = 1;   ///< Slice to estimate.
  int restart = 0;  ///< Slice where paths stop (restart < target).
  int substeps = 1;
  std::size_t particles = 1;
  std::uint64_t seed = 0;
  double small_jump_cutoff = 1e-3;
  const IncrementTable* table = nullptr;  ///< Null generates increments on the fly.
};

struct SliceOutput {
  std::vector<double> values;      ///< nodes x k
  std::vector<double> std_errors;  ///< nodes x k
  std::size_t exits = 0;           ///< Particles ending outside the box.
};

SliceOutput estimate_slice_serial(const SliceContext& context);
SliceOutput estimate_slice_parallel(const SliceContext& context);

}  // namespace levypide::kernels
