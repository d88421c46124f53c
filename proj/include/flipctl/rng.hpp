#pragma once

#include <cstdint>
#include <random>

namespace flipctl {

using Rng = std::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Child stream seed for `key` under a run seed. Every learner gets its own
/// child, keyed by something stable (for flip-set runs: the flip set's node
/// mask), so results do not depend on the order runs are scheduled in.
constexpr std::uint64_t derive_seed(std::uint64_t run_seed, std::uint64_t key) noexcept {
  return splitmix64(run_seed ^ splitmix64(key + 1));
}

}  // namespace flipctl
