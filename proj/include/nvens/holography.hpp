#pragma once

#include <complex>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <vector>

#include "nvens/field.hpp"

namespace nvens::holography {

using complex = std::complex<double>;

class ComplexField2D {
 public:
  ComplexField2D() = default;
  explicit ComplexField2D(GridSpec grid, complex fill = {});

  const GridSpec& grid() const { return grid_; }
  std::span<const complex> values() const { return values_; }
  std::span<complex> values() { return values_; }
  complex operator[](std::size_t i) const { return values_[i]; }
  complex& operator[](std::size_t i) { return values_[i]; }
  std::size_t size() const { return values_.size(); }
  double power() const;

 private:
  GridSpec grid_{};
  std::vector<complex> values_;
};

enum class Direction { forward, inverse };

/// Unitary, centred 2-D DFT (zero frequency at pixel (ny/2, nx/2)) backed by FFTW plans
/// reused across calls. Not thread-safe; one instance per synthesis job.
class Propagator {
 public:
  explicit Propagator(const GridSpec& grid);
  ~Propagator();
  Propagator(const Propagator&) = delete;
  Propagator& operator=(const Propagator&) = delete;

  void run(std::span<const complex> in, std::span<complex> out, Direction dir);
  const GridSpec& grid() const { return grid_; }

 private:
  struct Impl;
  GridSpec grid_;
  std::unique_ptr<Impl> impl_;
};

ComplexField2D propagate(const ComplexField2D& field, Direction direction);

/// Gaussian input amplitude exp(−r²/w²) (w = 1/e² intensity radius in pixels), unit power.
ScalarField2D gaussian_beam(const GridSpec& grid, double waist_px);

/// Defocus phase κr² (r in pixels from the grid centre) that maps the beam's 1/e² image
/// radius onto the target's bounding-circle radius.
ScalarField2D initial_phase(const Mask& target, double waist_px);
/// Curvature κ (rad/px²) for a target bounding radius in pixels on an N-pixel grid.
double defocus_curvature(double target_radius_px, double waist_px, int n);
/// Bounding-circle radius (px) of the target about the grid centre.
double bounding_radius(const Mask& target);

struct HologramPlan {
  ScalarField2D phase;   // SLM phase in [0, 2π)
  ScalarField2D beam;    // input amplitude
  ScalarField2D target;  // image-plane target amplitude (zero outside the mask)
  Mask target_mask;      // where the target is bright
  Mask signal;           // constrained region (target mask dilated by the guard band)
  Mask noise;            // free region = complement of `signal`
  double m = 0.55;
};

struct IterationMetrics {
  double nonuniformity = 0.0;
  double efficiency = 0.0;
};

using IterationLog = std::vector<IterationMetrics>;

/// Working state for repeated MRAF steps on one plan.
class MrafSolver {
 public:
  explicit MrafSolver(HologramPlan& plan);
  /// One MRAF iteration: constrain the current image, back-propagate, keep the phase,
  /// re-propagate. Returns metrics of the new image on the target mask.
  IterationMetrics step();
  /// Intensity of the current image.
  ScalarField2D intensity() const;
  /// Re-simulate after the plan's phase or target has been changed externally.
  void refresh();

 private:
  HologramPlan& plan_;
  Propagator prop_;
  std::vector<complex> slm_;
  std::vector<complex> image_;
};

/// One MRAF step on `plan` (convenience wrapper, updates plan.phase).
IterationMetrics mraf_step(HologramPlan& plan);

struct SynthesisConfig {
  int iterations = 300;
  double m = 0.55;
  double beam_waist_px = 200.0;
  double guard_px = 3.0;
};

struct SynthesisResult {
  HologramPlan plan;
  IterationLog log;
  IterationMetrics final_metrics;
};

/// Builds the plan from a target mask (uniform amplitude), applies the defocus initial
/// phase and runs `iterations` MRAF steps.
SynthesisResult synthesize(const Mask& target, const SynthesisConfig& config);

double nonuniformity(const ScalarField2D& intensity, const Mask& mask);
double power_efficiency(const ScalarField2D& intensity, const Mask& mask);

/// Image-plane intensity of the plan's hologram with an extra SLM-plane phase screen.
ScalarField2D simulate_intensity(const HologramPlan& plan, const ScalarField2D* aberration = nullptr);

/// Seeded polynomial phase screen (Legendre-like terms up to `order` in x, y over the unit
/// square), scaled to the given RMS in rad.
ScalarField2D aberration_screen(const GridSpec& grid, std::uint64_t seed, double rms_rad, int order = 3);

struct FeedbackConfig {
  int iterations = 19;
  double gain = 0.5;
  int mraf_steps = 20;
  double clamp_lo = 0.5;
  double clamp_hi = 2.0;
};

struct FeedbackResult {
  HologramPlan plan;
  IterationLog log;        // camera metrics after each feedback iteration
  IterationMetrics initial;  // camera metrics before feedback
};

FeedbackResult camera_feedback(const HologramPlan& plan, const ScalarField2D& aberration, const FeedbackConfig& config);

struct OpticsConfig {
  SynthesisConfig synthesis;
  FeedbackConfig feedback;
  int slm_pixels = 512;
  double map_fraction = 0.5;  // share of the image plane covered by the sensor map
  double aberration_rms_rad = 0.5;
};

struct SubsetHologram {
  SynthesisResult synthesis;
  FeedbackResult feedback;
  ScalarField2D intensity;  // final simulated camera image (with aberration)
};

/// Uniform-amplitude target on the resampled subset mask, synthesis, then camera feedback
/// against a seeded aberration screen.
SubsetHologram hologram_for_subset(const Mask& subset, const OpticsConfig& optics, std::uint64_t seed);

void write_iteration_log(const IterationLog& log, const std::filesystem::path& path);

}  // namespace nvens::holography
