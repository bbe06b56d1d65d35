#pragma once

// Deterministic random streams. The samplers below are implemented here rather than taken
// from <random> distributions, whose algorithms are implementation-defined; only the
// mt19937_64 engine (fully specified by the standard) is used from the library.

#include <cstdint>
#include <random>

namespace nvens::rng {

/// Independent engine for (seed, stream).
std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t stream);

/// Uniform double in [0, 1) with 53 random bits.
double uniform(std::mt19937_64& eng);

/// Standard normal (Box–Muller, one value per call).
double normal(std::mt19937_64& eng);

/// Poisson sample: inversion for mean < 30, transformed rejection (PTRS) for
/// 30 ≤ mean < 1e6, rounded normal approximation above.
std::uint64_t poisson(std::mt19937_64& eng, double mean);

}  // namespace nvens::rng
