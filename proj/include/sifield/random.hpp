#pragma once

#include <cstdint>
#include <random>

namespace sifield {

/// Stream tags keep substreams of different consumers disjoint for one seed.
enum class StreamTag : std::uint64_t {
  GaussianSample = 1,
  AllenCahnChain = 2,
  NavierStokesTrajectory = 3,
  Probe = 4,
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Deterministic generator for (seed, tag, index); independent of how many
/// threads consume neighbouring indices.
inline std::mt19937_64 substream(std::uint64_t seed, StreamTag tag, std::uint64_t index) {
  const std::uint64_t a = splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(tag)));
  const std::uint64_t b = splitmix64(a ^ splitmix64(index + 0x632be59bd9b4e019ULL));
  std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace sifield
