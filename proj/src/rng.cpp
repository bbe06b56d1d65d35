#include "nvens/rng.hpp"

#include <cmath>
#include <numbers>

#include "nvens/error.hpp"

namespace nvens::rng {

std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32), 0x6e76u};
  return std::mt19937_64(seq);
}

double uniform(std::mt19937_64& eng) { return static_cast<double>(eng() >> 11) * 0x1.0p-53; }

double normal(std::mt19937_64& eng) {
  double u1 = uniform(eng);
  while (u1 <= 0.0) u1 = uniform(eng);
  const double u2 = uniform(eng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

namespace {

std::uint64_t poisson_inversion(std::mt19937_64& eng, double mean) {
  const double u = uniform(eng);
  double p = std::exp(-mean);
  double cdf = p;
  std::uint64_t k = 0;
  while (u > cdf && k < 1000) {
    ++k;
    p *= mean / static_cast<double>(k);
    cdf += p;
  }
  return k;
}

// Hörmann (1993), "The transformed rejection method for generating Poisson random variables".
std::uint64_t poisson_ptrs(std::mt19937_64& eng, double mean) {
  const double slam = std::sqrt(mean);
  const double loglam = std::log(mean);
  const double b = 0.931 + 2.53 * slam;
  const double a = -0.059 + 0.02483 * b;
  const double invalpha = 1.1239 + 1.1328 / (b - 3.4);
  const double vr = 0.9277 - 3.6224 / (b - 2.0);
  for (;;) {
    const double u = uniform(eng) - 0.5;
    const double v = uniform(eng);
    const double us = 0.5 - std::fabs(u);
    const double k = std::floor((2.0 * a / us + b) * u + mean + 0.43);
    if (us >= 0.07 && v <= vr) return static_cast<std::uint64_t>(k);
    if (k < 0.0 || (us < 0.013 && v > us)) continue;
    if (std::log(v) + std::log(invalpha) - std::log(a / (us * us) + b) <= -mean + k * loglam - std::lgamma(k + 1.0))
      return static_cast<std::uint64_t>(k);
  }
}

}  // namespace

std::uint64_t poisson(std::mt19937_64& eng, double mean) {
  if (!(mean >= 0.0) || !std::isfinite(mean)) throw DomainError("Poisson mean must be finite and non-negative");
  if (mean == 0.0) return 0;
  if (mean < 30.0) return poisson_inversion(eng, mean);
  if (mean < 1e6) return poisson_ptrs(eng, mean);
  const double k = std::round(mean + std::sqrt(mean) * normal(eng));
  return k < 0.0 ? 0 : static_cast<std::uint64_t>(k);
}

}  // namespace nvens::rng
