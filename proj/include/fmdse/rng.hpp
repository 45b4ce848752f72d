#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace fmdse {

// All randomness flows through one seeded stream per run. mt19937_64 itself is
// bit-exact across platforms; the standard <random> distributions are not, so
// the bounded draws below are implemented here and never delegated.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform integer in [lo, hi], inclusive. Unbiased via rejection sampling.
  std::uint64_t next_int(std::uint64_t lo, std::uint64_t hi);

  // Uniform double in [0, 1) with 53 bits of precision.
  double next_unit();

  // Uniform double in [lo, hi).
  double next_real(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

  std::uint64_t draws() const { return draws_; }

 private:
  std::mt19937_64 engine_;
  std::uint64_t draws_ = 0;
};

// splitmix64-style mixer used to derive independent sub-seeds from a master
// seed plus a role tag, so grid cells and walk slots never share a stream.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt);
std::uint64_t mix_seed(std::uint64_t seed, std::string_view tag);

}  // namespace fmdse
