#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace uavpfl {

using Rng = std::mt19937_64;

// Stream tags keep independent consumers of one seed from sharing draws.
enum class Stream : std::uint64_t {
  kPlacement = 1,
  kMobility = 2,
  kData = 3,
  kModelInit = 4,
  kLocalTraining = 5,
  kScheduling = 6,
  kDiagnostics = 7,
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Deterministic seed for the stream identified by (seed, stream, tags...),
// e.g. (seed, kLocalTraining, device, round).
inline std::uint64_t derive_seed(std::uint64_t seed, Stream stream,
                                 std::initializer_list<std::uint64_t> tags = {}) {
  std::uint64_t h = splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(stream)));
  for (auto t : tags) h = splitmix64(h ^ splitmix64(t + 0x632be59bd9b4e019ULL));
  return h;
}

inline Rng make_rng(std::uint64_t seed, Stream stream,
                    std::initializer_list<std::uint64_t> tags = {}) {
  return Rng(derive_seed(seed, stream, tags));
}

}  // namespace uavpfl
