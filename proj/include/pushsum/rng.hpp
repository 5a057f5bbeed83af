#pragma once

#include <cstdint>
#include <random>

namespace pushsum {

using Engine = std::mt19937_64;

/// Independent engine for (seed, stream). Streams with different ids never share state,
/// so trials and per-trial consumers (graph draws, perturbations) are order independent.
inline Engine make_stream(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return Engine(seq);
}

/// Counter-keyed engine: the draws for (seed, stream, counter) do not depend on how many
/// other counters were visited before.
inline Engine make_stream(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream),  static_cast<std::uint32_t>(stream >> 32),
                    static_cast<std::uint32_t>(counter), static_cast<std::uint32_t>(counter >> 32)};
  return Engine(seq);
}

/// Uniform double in [0, 1) from the top 53 bits; identical on every platform,
/// unlike std::uniform_real_distribution.
inline double uniform01(Engine& engine) {
  return static_cast<double>(engine() >> 11) * 0x1.0p-53;
}

inline double uniform(Engine& engine, double lo, double hi) {
  return lo + (hi - lo) * uniform01(engine);
}

namespace streams {
inline constexpr std::uint64_t graphs = 1;
inline constexpr std::uint64_t perturbations = 2;
inline constexpr std::uint64_t anchors = 3;
inline constexpr std::uint64_t bootstrap = 4;
}  // namespace streams

}  // namespace pushsum
