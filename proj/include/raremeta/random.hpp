#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace raremeta {

using Rng = std::mt19937_64;

// One splitmix64 step; advances `state`.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Stream-splitting rule: every independent random stream is seeded with
/// derive_seed(base, {key...}), folding the keys through splitmix64 in order.
/// Chains use {chain_id}; simulation replicates use
/// {scenario_id, replicate_index, stream}.
inline std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> keys) {
  std::uint64_t state = base;
  std::uint64_t out = splitmix64(state);
  for (const auto key : keys) {
    state ^= out + key;
    out = splitmix64(state);
  }
  return out;
}

}  // namespace raremeta
