#include "nvens/kernels.hpp"

#include <algorithm>
#include <cmath>

#include "nvens/error.hpp"
#include "nvens/rng.hpp"

namespace nvens::kernels {

Vec3 segment_field(const Segment& s, const Vec3& p, double standoff) {
  const Vec3 ab = s.b - s.a;
  const double len = norm(ab);
  if (len == 0.0) return {};
  const Vec3 u = (1.0 / len) * ab;
  const double t1 = dot(p - s.a, u);
  const double t2 = t1 - len;
  const Vec3 rho = p - (s.a + t1 * u);
  const double d = norm(rho);
  const double deff = std::max(d, standoff);
  if (deff == 0.0) return {};
  const double mag = (t1 / std::sqrt(t1 * t1 + deff * deff) - t2 / std::sqrt(t2 * t2 + deff * deff)) / deff;
  Vec3 dir;
  if (d > 0.0) {
    dir = (1.0 / d) * cross(u, rho);
  } else {
    // On the wire axis: pick the direction of a point displaced along the plane normal.
    const Vec3 z{0.0, 0.0, 1.0};
    const Vec3 n = z - dot(z, u) * u;
    const double nn = norm(n);
    dir = nn > 0.0 ? (1.0 / nn) * cross(u, n) : Vec3{};
  }
  return mag * dir;
}

namespace {

double perp_magnitude(const Vec3& b, const Vec3& axis) { return norm(b - dot(b, axis) * axis); }

Vec3 pixel_point(const GridSpec& g, std::size_t i, double h) {
  const int r = static_cast<int>(i / static_cast<std::size_t>(g.nx));
  const int c = static_cast<int>(i % static_cast<std::size_t>(g.nx));
  return {g.x(c) * 1e-3, g.y(r) * 1e-3, h};
}

void check(const PerpFieldJob& job, std::span<double> out) {
  if (out.size() != job.grid.size()) throw DomainError("output span does not match grid");
}

}  // namespace

namespace serial {

// Reference: segment-outer accumulation into a per-pixel field buffer.
void perpendicular_field(const PerpFieldJob& job, std::span<double> out) {
  check(job, out);
  std::vector<Vec3> acc(out.size());
  for (const Segment& s : job.segments) {
    for (std::size_t i = 0; i < out.size(); ++i) acc[i] += segment_field(s, pixel_point(job.grid, i, job.height_m), job.standoff_m);
  }
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = job.prefactor * perp_magnitude(acc[i], job.axis);
}

void poisson_shots(const PoissonShotJob& job, std::span<double> counts) {
  if (counts.size() != job.shots) throw DomainError("count span does not match shot count");
  const std::size_t streams = std::max<std::size_t>(job.streams, 1);
  const std::size_t block = (job.shots + streams - 1) / streams;
  for (std::size_t b = 0; b < streams; ++b) {
    auto eng = rng::make_stream(job.seed, b);
    const std::size_t end = std::min(job.shots, (b + 1) * block);
    for (std::size_t i = b * block; i < end; ++i) counts[i] = static_cast<double>(rng::poisson(eng, job.mean));
  }
}

}  // namespace serial

namespace omp {

void perpendicular_field(const PerpFieldJob& job, std::span<double> out) {
  check(job, out);
  const auto n = static_cast<std::ptrdiff_t>(out.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const Vec3 p = pixel_point(job.grid, static_cast<std::size_t>(i), job.height_m);
    Vec3 acc;
    for (const Segment& s : job.segments) acc += segment_field(s, p, job.standoff_m);
    out[static_cast<std::size_t>(i)] = job.prefactor * perp_magnitude(acc, job.axis);
  }
}

void poisson_shots(const PoissonShotJob& job, std::span<double> counts) {
  if (counts.size() != job.shots) throw DomainError("count span does not match shot count");
  const std::size_t streams = std::max<std::size_t>(job.streams, 1);
  const std::size_t block = (job.shots + streams - 1) / streams;
  const auto nb = static_cast<std::ptrdiff_t>(streams);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t b = 0; b < nb; ++b) {
    auto eng = rng::make_stream(job.seed, static_cast<std::uint64_t>(b));
    const std::size_t end = std::min(job.shots, (static_cast<std::size_t>(b) + 1) * block);
    for (std::size_t i = static_cast<std::size_t>(b) * block; i < end; ++i)
      counts[i] = static_cast<double>(rng::poisson(eng, job.mean));
  }
}

}  // namespace omp

}  // namespace nvens::kernels
