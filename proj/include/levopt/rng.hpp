#pragma once

#include <array>
#include <cstdint>

namespace levopt {

// Counter-based Philox4x64-10 generator. A (seed, stream) pair names an
// independent sequence, so parallel Monte Carlo trials can each own a stream
// and reproduce bit-for-bit regardless of scheduling.
class Philox {
 public:
  explicit Philox(std::uint64_t seed, std::uint64_t stream = 0)
      : key_{seed, stream}, counter_{0, 0, 0, 0} {}

  // Raw 64-bit output (advances the counter every 4 draws).
  std::uint64_t next_u64();

  // Uniform double in [0, 1) with 53 random bits.
  double uniform();

  // Standard normal via Box-Muller; consumes exactly two uniforms per pair.
  double normal();

  // Positions the block counter directly (used for known-answer tests and
  // skip-ahead). The next block encrypts counter+1, as after construction.
  // Resets buffered output.
  void set_counter(std::uint64_t c0, std::uint64_t c1, std::uint64_t c2,
                   std::uint64_t c3);

 private:
  void refill();

  std::array<std::uint64_t, 2> key_;
  std::array<std::uint64_t, 4> counter_;
  std::array<std::uint64_t, 4> block_{};
  int block_pos_ = 4;  // empty
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

}  // namespace levopt
