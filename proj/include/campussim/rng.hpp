#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace campussim {

using Rng = std::mt19937_64;

// SplitMix64 finalizer. Used only to derive well-separated seeds, never as
// the simulation generator itself.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Counter-based stream derivation: the same (root, path...) always yields
/// the same seed, independent of how many other streams were derived before.
constexpr std::uint64_t derive_seed(std::uint64_t root,
                                    std::initializer_list<std::uint64_t> path) noexcept {
  std::uint64_t h = mix64(root);
  for (std::uint64_t p : path) h = mix64(h ^ mix64(p + 0x632BE59BD9B4E019ULL));
  return h;
}

inline Rng make_stream(std::uint64_t root, std::initializer_list<std::uint64_t> path) {
  return Rng{derive_seed(root, path)};
}

// Stream tags, so per-phase sub-streams never collide.
namespace stream {
inline constexpr std::uint64_t kReplication = 1;
inline constexpr std::uint64_t kOutside = 2;
inline constexpr std::uint64_t kSession = 3;
inline constexpr std::uint64_t kTesting = 4;
inline constexpr std::uint64_t kSeeding = 5;
inline constexpr std::uint64_t kMasks = 6;
inline constexpr std::uint64_t kAttendance = 7;
inline constexpr std::uint64_t kNetwork = 8;
inline constexpr std::uint64_t kSchedule = 9;
inline constexpr std::uint64_t kPreset = 10;
}  // namespace stream

inline double uniform01(Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

inline bool bernoulli(Rng& rng, double p) {
  if (p <= 0.0) return false;
  if (p >= 1.0) return true;
  return uniform01(rng) < p;
}

}  // namespace campussim
