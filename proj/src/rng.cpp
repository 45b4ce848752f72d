#include "fmdse/rng.hpp"

#include <cassert>
#include <cstring>

namespace fmdse {

std::uint64_t Rng::next_int(std::uint64_t lo, std::uint64_t hi) {
  assert(lo <= hi);
  ++draws_;
  const std::uint64_t span = hi - lo + 1;
  if (span == 0) return engine_();  // full 64-bit range
  const std::uint64_t limit = std::uint64_t(-1) - std::uint64_t(-1) % span;
  std::uint64_t x = engine_();
  while (x >= limit) x = engine_();
  return lo + x % span;
}

double Rng::next_unit() {
  ++draws_;
  return double(engine_() >> 11) * 0x1.0p-53;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t mix_seed(std::uint64_t seed, std::string_view tag) {
  std::uint64_t h = 1469598103934665603ULL;
  for (char c : tag) {
    h ^= std::uint8_t(c);
    h *= 1099511628211ULL;
  }
  return mix_seed(seed, h);
}

}  // namespace fmdse
