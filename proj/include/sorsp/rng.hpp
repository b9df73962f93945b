// Seed derivation and the few distributions the simulators draw from.
//
// All randomness comes from std::mt19937_64, whose output sequence is fixed
// by the standard. Child seeds are derived with a splitmix64 finalizer:
//   child = splitmix64(seed ^ splitmix64(index + 0x9E3779B97F4A7C15))
#pragma once

#include <cstdint>
#include <random>

namespace sorsp {

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

/// Uniform double in [0, 1) built from the top 53 bits of one draw.
double uniform01(std::mt19937_64& rng);

/// Poisson draw; mean == 0 returns 0.
std::int64_t poisson(std::mt19937_64& rng, double mean);

/// Standard normal via Box-Muller on uniform01.
double standard_normal(std::mt19937_64& rng);

/// Fresh 64-bit seed from std::random_device.
std::uint64_t entropy_seed();

}  // namespace sorsp
