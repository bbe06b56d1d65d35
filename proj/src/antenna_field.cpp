#include "nvens/antenna_field.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <vector>

#include "nvens/error.hpp"
#include "nvens/kernels.hpp"

namespace nvens::antenna {

namespace {

constexpr double kMu0Over4Pi = 1e-7;  // T·m/A

std::vector<kernels::Segment> loop_segments(const AntennaSpec& spec) {
  const double a = spec.loop_radius_mm * 1e-3;
  const double gap = spec.feed_gap_mm / spec.loop_radius_mm;
  const double start = -0.5 * std::numbers::pi + 0.5 * gap;
  const double span = 2.0 * std::numbers::pi - gap;
  std::vector<kernels::Segment> segs;
  segs.reserve(static_cast<std::size_t>(spec.segments));
  auto vertex = [&](int k) {
    const double th = start + span * k / spec.segments;
    return Vec3{a * std::cos(th), a * std::sin(th), 0.0};
  };
  for (int k = 0; k < spec.segments; ++k) segs.push_back({vertex(k), vertex(k + 1)});
  return segs;
}

}  // namespace

void AntennaSpec::validate() const {
  if (!(loop_radius_mm > 0.0)) throw DomainError("loop_radius must be positive");
  if (!(trace_width_mm >= 0.0)) throw DomainError("trace_width must be non-negative");
  if (!(feed_gap_mm >= 0.0) || !(feed_gap_mm < 2.0 * std::numbers::pi * loop_radius_mm))
    throw DomainError("feed_gap must lie in [0, 2*pi*loop_radius)");
  if (!(evaluation_height_mm >= 0.0)) throw DomainError("evaluation_height must be non-negative");
  if (!std::isfinite(drive_current_A) || drive_current_A == 0.0) throw DomainError("drive_current must be finite and non-zero");
  if (segments < 3) throw DomainError("loop needs at least 3 segments");
}

void NVFrame::validate() const {
  if (std::fabs(norm(axis) - 1.0) > 1e-9) throw DomainError("NV quantization axis must be a unit vector");
}

Vec3 loop_field(const AntennaSpec& spec, const Vec3& point_mm) {
  spec.validate();
  const Vec3 p = 1e-3 * point_mm;
  const double standoff = 0.5 * spec.trace_width_mm * 1e-3;
  Vec3 b;
  for (const auto& s : loop_segments(spec)) b += kernels::segment_field(s, p, standoff);
  return (kMu0Over4Pi * spec.drive_current_A) * b;
}

ScalarField2D perpendicular_field_map(const AntennaSpec& spec, const GridSpec& grid, const NVFrame& frame, Exec exec) {
  spec.validate();
  grid.validate();
  frame.validate();
  const auto segs = loop_segments(spec);
  kernels::PerpFieldJob job{segs, grid, spec.evaluation_height_mm * 1e-3, frame.axis, 0.5 * spec.trace_width_mm * 1e-3,
                            kMu0Over4Pi * std::fabs(spec.drive_current_A)};
  ScalarField2D out(grid, "T");
  if (exec == Exec::serial)
    kernels::serial::perpendicular_field(job, out.values());
  else
    kernels::omp::perpendicular_field(job, out.values());
  return out;
}

ScalarField2D biot_savart_rabi_map(const AntennaSpec& spec, const GridSpec& grid, const NVFrame& frame,
                                   double center_value, Exec exec) {
  if (!(center_value > 0.0) || !std::isfinite(center_value)) throw DomainError("drive scale must be positive");
  ScalarField2D f = perpendicular_field_map(spec, grid, frame, exec);
  const double c = f.center();
  if (!(c > 0.0)) throw DomainError("perpendicular field vanishes at the grid centre; cannot normalise");
  const double k = center_value / c;
  for (double& v : f.values()) v *= k;
  f[grid.center_index()] = center_value;
  f.set_unit("rabi");
  return f;
}

ScalarField2D import_field_map(const std::filesystem::path& path) { return read_csv_grid(path); }

void export_field_map(const ScalarField2D& field, const std::filesystem::path& path) { write_csv_grid(field, path); }

ScalarField2D normalized_deviation(const ScalarField2D& field, double omega0) {
  if (!(omega0 > 0.0)) throw DomainError("reference Rabi frequency must be positive");
  ScalarField2D out(field.grid(), "relative");
  for (std::size_t i = 0; i < field.size(); ++i) out[i] = (field[i] - omega0) / omega0;
  return out;
}

double region_uniformity(const ScalarField2D& field, const Mask& mask, double omega0) {
  if (!(omega0 > 0.0)) throw DomainError("reference Rabi frequency must be positive");
  if (!(mask.grid() == field.grid())) throw DomainError("mask grid differs from field grid");
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < field.size(); ++i) {
    if (!mask[i]) continue;
    sum += std::fabs(field[i] - omega0);
    ++n;
  }
  if (n == 0) throw DomainError("uniformity mask is empty");
  return 1.0 - sum / static_cast<double>(n) / omega0;
}

UniformityDisk uniformity_region(const ScalarField2D& field, double omega0, double target) {
  if (!(target > 0.0) || target > 1.0) throw DomainError("uniformity target must lie in (0, 1]");
  if (!(omega0 > 0.0)) throw DomainError("reference Rabi frequency must be positive");
  const GridSpec& g = field.grid();
  const int cr = g.center_row();
  const int cc = g.center_col();
  const double x0 = g.x(cc);
  const double y0 = g.y(cr);
  // Largest disk around the centre pixel that stays inside the grid.
  const double r_max = std::min({x0 - g.x(0), g.x(g.nx - 1) - x0, g.y(0) - y0, y0 - g.y(g.ny - 1)});

  std::vector<double> dist2(field.size());
  for (int r = 0; r < g.ny; ++r)
    for (int c = 0; c < g.nx; ++c) {
      const double dx = g.x(c) - x0;
      const double dy = g.y(r) - y0;
      dist2[g.index(r, c)] = dx * dx + dy * dy;
    }
  std::vector<std::size_t> order(field.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return dist2[a] < dist2[b]; });

  const double limit2 = r_max * r_max * (1.0 + 1e-12);
  double sum = 0.0;
  std::size_t accepted = 0;
  double accepted_r2 = -1.0;
  double accepted_u = 1.0;
  std::size_t i = 0;
  while (i < order.size() && dist2[order[i]] <= limit2) {
    // One shell: all pixels at the same distance enter together.
    const double shell = dist2[order[i]];
    std::size_t j = i;
    double shell_sum = 0.0;
    while (j < order.size() && dist2[order[j]] <= shell * (1.0 + 1e-12) + 1e-300) {
      shell_sum += std::fabs(field[order[j]] - omega0);
      ++j;
    }
    const double u = 1.0 - (sum + shell_sum) / static_cast<double>(j) / omega0;
    if (u < target) break;
    sum += shell_sum;
    accepted = j;
    accepted_r2 = shell;
    accepted_u = u;
    i = j;
  }
  if (accepted == 0) throw DomainError("no pixel region satisfies the uniformity target");
  UniformityDisk out{Mask(g), std::sqrt(accepted_r2), accepted_u};
  for (std::size_t k = 0; k < accepted; ++k) out.mask.set(order[k], true);
  return out;
}

}  // namespace nvens::antenna
