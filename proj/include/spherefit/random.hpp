#pragma once

#include <cstdint>
#include <random>

namespace spherefit {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seed of an independent stream identified by (master, cell, replication).
/// Depends only on the identifiers, never on execution order.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t cell,
                                    std::uint64_t replication) {
  return mix64(mix64(mix64(master) ^ cell) ^ (replication * 0xd1b54a32d192ed03ULL));
}

inline Rng make_rng(std::uint64_t seed) {
  return Rng(seed);
}

}  // namespace spherefit
