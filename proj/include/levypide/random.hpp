#pragma once

#include <array>
#include <cstdint>

namespace levypide {

/// Philox4x32-10 block function (Salmon et al., "Parallel random numbers: as
/// easy as 1, 2, 3"). Stateless: the output is a pure function of
/// (counter, key).
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter generate(Counter ctr, Key key);
};

/// Counter-based noise source for one particle.
///
/// Every draw is addressed by (seed, stream_id, step index, draw index), so the
/// same particle sees the same increments in every fixed-point iteration and
/// on every thread. Draws within a step are consumed through a `Step` cursor.
class NoiseStream {
 public:
  NoiseStream(std::uint64_t seed, std::uint64_t stream_id);

  class Step {
   public:
    /// Uniform on the open interval (0, 1), 53-bit resolution.
    double uniform();
    double normal();
    /// Unit-rate exponential.
    double exponential();
    std::uint64_t poisson(double mean);

    std::uint32_t draws_used() const { return next_word_; }

   private:
    friend class NoiseStream;
    Step(Philox4x32::Key key, Philox4x32::Counter base) : key_(key), base_(base) {}

    std::uint64_t next64();

    Philox4x32::Key key_;
    Philox4x32::Counter base_;
    Philox4x32::Counter block_{};
    std::uint32_t next_word_ = 0;
    double spare_normal_ = 0.0;
    bool has_spare_ = false;
  };

  /// Cursor over the draws of step `index`. Steps must fit in 32 bits.
  Step step(std::uint64_t index) const;

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  Philox4x32::Key key_;
};

}  // namespace levypide
