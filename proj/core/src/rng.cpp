#include "cemee/rng.hpp"

#include <stdexcept>

namespace cemee {

namespace {
constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;
}

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t hash_combine(std::uint64_t h, std::uint64_t v) {
  return mix64(h ^ (v + kGamma + (h << 6) + (h >> 2)));
}

std::uint64_t Rng::next_u64() {
  counter_ += kGamma;
  return mix64(key_ + counter_);
}

double Rng::uniform() {
  // 53 random bits centered in (0,1); (x + 0.5) * 2^-53 cannot hit 0 or 1.
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

int Rng::uniform_int(int n) {
  if (n < 1) throw std::invalid_argument("uniform_int: n must be >= 1");
  // multiply-shift; bias is O(n / 2^64), irrelevant for simulation use
  return static_cast<int>((static_cast<unsigned __int128>(next_u64()) *
                           static_cast<unsigned __int128>(n)) >> 64);
}

Rng Rng::stream(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
  std::uint64_t key = mix64(seed + kGamma);
  for (std::uint64_t v : path) key = hash_combine(key, v);
  return Rng(key);
}

}  // namespace cemee
