#pragma once

#include <cstdint>
#include <cmath>
#include <random>

namespace ringsim {

/// Independent generator for (seed, atom index, stream); the sequence does not
/// depend on which thread draws it or in what order atoms are processed.
inline std::mt19937_64 substream(std::uint64_t seed, std::uint64_t index, std::uint64_t stream = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                    static_cast<std::uint32_t>(stream), 0x5eedu};
  return std::mt19937_64(seq);
}

/// Standard normal draw by Box-Muller; std::normal_distribution is not
/// specified bit-for-bit across library versions.
inline double normal(std::mt19937_64& rng) {
  constexpr double two_pi = 6.28318530717958647692;
  const double u1 = (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
  const double u2 = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
}

inline double uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Exponential draw with the given mean.
inline double exponential(std::mt19937_64& rng, double mean) {
  return -mean * std::log1p(-uniform(rng));
}

}  // namespace ringsim
