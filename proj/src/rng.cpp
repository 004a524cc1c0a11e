#include "levopt/rng.hpp"

#include <cmath>
#include <numbers>

namespace levopt {
namespace {

// Philox4x64 round multipliers and Weyl key schedule (Salmon et al. 2011).
constexpr std::uint64_t kMul0 = 0xD2E7470EE14C6C93ULL;
constexpr std::uint64_t kMul1 = 0xCA5A826395121157ULL;
constexpr std::uint64_t kWeyl0 = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kWeyl1 = 0xBB67AE8584CAA73BULL;

inline std::uint64_t mulhi(std::uint64_t a, std::uint64_t b) {
  return static_cast<std::uint64_t>((static_cast<unsigned __int128>(a) * b) >>
                                    64);
}

}  // namespace

void Philox::refill() {
  // The counter advances before the block cipher runs, so the first block of
  // a fresh generator encrypts counter 1 (matches numpy.random.Philox).
  if (++counter_[0] == 0 && ++counter_[1] == 0 && ++counter_[2] == 0)
    ++counter_[3];
  std::uint64_t k0 = key_[0];
  std::uint64_t k1 = key_[1];
  std::array<std::uint64_t, 4> c = counter_;
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      k0 += kWeyl0;
      k1 += kWeyl1;
    }
    const std::uint64_t hi0 = mulhi(kMul0, c[0]);
    const std::uint64_t lo0 = kMul0 * c[0];
    const std::uint64_t hi1 = mulhi(kMul1, c[2]);
    const std::uint64_t lo1 = kMul1 * c[2];
    c = {hi1 ^ c[1] ^ k0, lo1, hi0 ^ c[3] ^ k1, lo0};
  }
  block_ = c;
  block_pos_ = 0;
}

std::uint64_t Philox::next_u64() {
  if (block_pos_ >= 4) refill();
  return block_[block_pos_++];
}

double Philox::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Philox::normal() {
  if (has_cached_normal_) {
    has_cached_normal_ = false;
    return cached_normal_;
  }
  const double u1 = 1.0 - uniform();  // in (0, 1], keeps the log finite
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  cached_normal_ = r * std::sin(theta);
  has_cached_normal_ = true;
  return r * std::cos(theta);
}

void Philox::set_counter(std::uint64_t c0, std::uint64_t c1, std::uint64_t c2,
                         std::uint64_t c3) {
  counter_ = {c0, c1, c2, c3};
  block_pos_ = 4;
  has_cached_normal_ = false;
}

}  // namespace levopt
