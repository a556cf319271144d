#pragma once

#include <cstdint>
#include <initializer_list>

namespace cemee {

/// splitmix64 finalizer; bijective 64-bit mix.
std::uint64_t mix64(std::uint64_t z);

/// Order-sensitive combine for deriving substream keys.
std::uint64_t hash_combine(std::uint64_t h, std::uint64_t v);

/// Counter-based generator: the k-th output is mix64(key + k * gamma), so a
/// stream is fully determined by its key and draws are cheap to replay.
/// Substreams derived from (seed, path...) make generation order-independent
/// under parallel execution.
class Rng {
 public:
  explicit Rng(std::uint64_t key) : key_(key), counter_(0) {}

  std::uint64_t next_u64();

  /// Uniform on the open interval (0,1); never returns an endpoint.
  double uniform();

  /// Uniform integer in {0, ..., n-1}, n >= 1.
  int uniform_int(int n);

  int bernoulli(double p) { return uniform() < p ? 1 : 0; }

  static Rng stream(std::uint64_t seed, std::initializer_list<std::uint64_t> path);

 private:
  std::uint64_t key_;
  std::uint64_t counter_;
};

// Stream purpose tags. Keeping them distinct means adding a new draw site
// never perturbs existing streams.
namespace stream_tag {
inline constexpr std::uint64_t cluster_effect = 0xA1;
inline constexpr std::uint64_t states = 0xA2;
inline constexpr std::uint64_t treatments = 0xA3;
inline constexpr std::uint64_t outcomes = 0xA4;
inline constexpr std::uint64_t lag_outcomes = 0xA5;
inline constexpr std::uint64_t truth = 0xA6;
inline constexpr std::uint64_t replicate = 0xA7;
}  // namespace stream_tag

}  // namespace cemee
