#pragma once

#include <cstdint>
#include <initializer_list>

namespace perturbmax {

// SplitMix64 finalizer. Every random stream in the library is derived from a
// lineage of integers hashed through this mix, so a draw can be reproduced in
// isolation from (seed, sample index, ...) without any shared generator state.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t stream_key(std::initializer_list<std::uint64_t> lineage) {
  std::uint64_t h = 0x6a09e667f3bcc909ULL;
  for (std::uint64_t v : lineage) h = mix64(h ^ mix64(v));
  return h;
}

// Domain tags keep streams for different purposes disjoint.
enum class StreamTag : std::uint64_t {
  model = 1,
  perturbation = 2,
  sampler_phi = 4,
  sampler_draw = 5,
  oracle_sample = 6,
  learning = 7,
  dataset = 8,
  poincare = 9,
  full_perturbation = 10,
};

constexpr std::uint64_t tag(StreamTag t) { return static_cast<std::uint64_t>(t); }

inline constexpr double kUnitGuard = 1.0 / 9007199254740992.0;  // 2^-53

/// Counter-based generator: output k is mix64(key + k), so two generators with
/// the same key produce the same sequence on every platform.
class CounterRng {
 public:
  constexpr explicit CounterRng(std::uint64_t key) : key_(key) {}

  constexpr std::uint64_t next_u64() { return mix64(key_ ^ mix64(counter_++)); }

  /// Uniform on [0, 1) with 53 random bits.
  constexpr double uniform() { return static_cast<double>(next_u64() >> 11) * kUnitGuard; }

  /// Uniform clamped to [2^-53, 1 - 2^-53].
  constexpr double uniform_open() {
    double u = uniform();
    if (u < kUnitGuard) u = kUnitGuard;
    if (u > 1.0 - kUnitGuard) u = 1.0 - kUnitGuard;
    return u;
  }

  constexpr double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  constexpr std::uint64_t key() const { return key_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Single uniform draw addressed directly by a lineage key.
constexpr double uniform_at(std::uint64_t key) {
  double u = static_cast<double>(mix64(key) >> 11) * kUnitGuard;
  if (u < kUnitGuard) u = kUnitGuard;
  if (u > 1.0 - kUnitGuard) u = 1.0 - kUnitGuard;
  return u;
}

}  // namespace perturbmax
