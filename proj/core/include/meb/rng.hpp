#pragma once

#include <cstdint>
#include <random>

namespace meb {

/// Purpose-indexed random streams derived from one replication seed.
/// Splitting by purpose keeps the draws of one consumer stable when
/// another consumer is added or removed.
enum class RngStream : std::uint64_t {
  context = 1,
  error = 2,
  reward = 3,
  policy = 4,
  variance_feed = 5,
};

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Deterministic engine for (seed, stream); distinct streams are
/// decorrelated through a splitmix64 chain.
inline std::mt19937_64 make_stream(std::uint64_t seed, RngStream stream) {
  std::uint64_t state = seed ^ (0xd1b54a32d192ed03ULL * static_cast<std::uint64_t>(stream));
  const std::uint64_t a = splitmix64(state);
  const std::uint64_t b = splitmix64(state);
  std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace meb
