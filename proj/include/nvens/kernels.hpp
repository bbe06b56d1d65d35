#pragma once

// Data-parallel kernels. Every kernel has a straightforward serial reference in
// `kernels::serial` and an OpenMP version in `kernels::omp`; the two must agree bit for bit
// (same per-element arithmetic, only the iteration order across elements differs).

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "nvens/field.hpp"
#include "nvens/vec3.hpp"

namespace nvens::kernels {

/// Straight current filament from `a` to `b` (metres).
struct Segment {
  Vec3 a;
  Vec3 b;
};

/// Field of one straight filament at `p` for unit μ0·I/(4π), with the perpendicular
/// distance clamped from below by `standoff`.
Vec3 segment_field(const Segment& s, const Vec3& p, double standoff);

/// Magnitude of the field component perpendicular to `axis` on every pixel of `grid`
/// (plane z = height_m), summed over `segments` and scaled by `prefactor`.
struct PerpFieldJob {
  std::span<const Segment> segments;
  GridSpec grid;
  double height_m = 0.0;
  Vec3 axis{0.0, 0.0, 1.0};
  double standoff_m = 0.0;
  double prefactor = 1.0;
};

namespace serial {
void perpendicular_field(const PerpFieldJob& job, std::span<double> out);
}
namespace omp {
void perpendicular_field(const PerpFieldJob& job, std::span<double> out);
}

/// out[i] = f(in[i]).
namespace serial {
template <class F>
void transform(std::span<const double> in, std::span<double> out, const F& f) {
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = f(in[i]);
}
}  // namespace serial
namespace omp {
template <class F>
void transform(std::span<const double> in, std::span<double> out, const F& f) {
  const auto n = static_cast<std::ptrdiff_t>(in.size());
#pragma omp parallel for schedule(dynamic, 256)
  for (std::ptrdiff_t i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = f(in[static_cast<std::size_t>(i)]);
}
}  // namespace omp

/// Sum of Poisson draws, one per shot, with per-stream RNG state derived from `seed`.
/// Shots are split into `streams` contiguous blocks; block b uses stream b. The split does
/// not depend on the number of threads, so the output is identical for both kernels.
struct PoissonShotJob {
  double mean = 0.0;
  std::uint64_t seed = 0;
  std::size_t shots = 0;
  std::size_t streams = 64;
};

namespace serial {
void poisson_shots(const PoissonShotJob& job, std::span<double> counts);
}
namespace omp {
void poisson_shots(const PoissonShotJob& job, std::span<double> counts);
}

}  // namespace nvens::kernels
