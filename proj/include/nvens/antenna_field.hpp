#pragma once

#include <filesystem>

#include "nvens/exec.hpp"
#include "nvens/field.hpp"
#include "nvens/vec3.hpp"

namespace nvens::antenna {

/// Circular loop antenna in the z = 0 plane, centred on the origin. The feed gap is an
/// omitted arc centred on the −y direction.
struct AntennaSpec {
  double loop_radius_mm = 0.8;
  double trace_width_mm = 0.127;
  double feed_gap_mm = 0.2;
  double drive_current_A = 1.0;
  double evaluation_height_mm = 0.1;
  int segments = 360;

  void validate() const;
};

/// NV quantization axis in the antenna frame.
struct NVFrame {
  Vec3 axis{1.0 / 1.7320508075688772, 1.0 / 1.7320508075688772, 1.0 / 1.7320508075688772};

  void validate() const;
};

/// Quasi-static field (tesla) of the loop at `point_mm`.
Vec3 loop_field(const AntennaSpec& spec, const Vec3& point_mm);

/// |B⊥| (tesla) on the evaluation plane, B⊥ being the part of the loop field
/// perpendicular to the NV axis.
ScalarField2D perpendicular_field_map(const AntennaSpec& spec, const GridSpec& grid, const NVFrame& frame,
                                      Exec exec = Exec::parallel);

/// Rabi-frequency map Ω(x) ∝ |B⊥(x)|, scaled so the centre pixel equals `center_value`.
ScalarField2D biot_savart_rabi_map(const AntennaSpec& spec, const GridSpec& grid, const NVFrame& frame,
                                   double center_value = 1.0, Exec exec = Exec::parallel);

ScalarField2D import_field_map(const std::filesystem::path& path);
void export_field_map(const ScalarField2D& field, const std::filesystem::path& path);

/// (Ω(x) − Ω0)/Ω0 pointwise.
ScalarField2D normalized_deviation(const ScalarField2D& field, double omega0);

/// 1 − mean(|Ω − Ω0|)/Ω0 over the masked pixels.
double region_uniformity(const ScalarField2D& field, const Mask& mask, double omega0);

struct UniformityDisk {
  Mask mask;
  double radius_mm = 0.0;
  double uniformity = 1.0;
};

/// Largest disk centred on the antenna axis (the centre pixel) whose uniformity is at least
/// `target`, found by an outward scan over pixel shells. The radius never exceeds the
/// largest disk inscribed in the grid.
UniformityDisk uniformity_region(const ScalarField2D& field, double omega0, double target);

}  // namespace nvens::antenna
