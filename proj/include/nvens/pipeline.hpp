#pragma once

#include <array>
#include <vector>

#include "nvens/config.hpp"

namespace nvens::pipeline {

inline constexpr std::array<double, 4> kUniformityTargets{0.999, 0.99, 0.9, 0.51};

struct FieldStage {
  ScalarField2D omega;
  std::vector<antenna::UniformityDisk> disks;  // one per kUniformityTargets entry
};

struct OptimizeStage {
  ScalarField2D eta;
  ensemble::OptimalSubset optimum;
  ensemble::GainsReport report;
};

struct HologramStage {
  holography::SubsetHologram hologram;
};

struct ValidateStage {
  mc::PairedStats mc;
  double law_subset = 0.0;  // ensemble-law per-shot prediction for the subset
  double law_full = 0.0;
  photophysics::PenaltyResult synthetic_penalty;
  std::vector<std::pair<double, double>> penalty_scan;  // (non-uniformity, loss dB)
  std::optional<photophysics::PenaltyResult> hologram_penalty;
};

/// Ω map (analytic or imported) and the largest centred uniformity disks.
FieldStage field_stage(const RunConfig& cfg);
OptimizeStage optimize_stage(const RunConfig& cfg, const FieldStage& field);
HologramStage hologram_stage(const RunConfig& cfg, const Mask& subset);
/// `hologram_intensity` (SLM image plane) is optional; when given, the penalty of the simulated
/// illumination over the resampled subset is reported as well.
ValidateStage validate_stage(const RunConfig& cfg, const FieldStage& field, const Mask& subset,
                             const ScalarField2D* hologram_intensity = nullptr);

// Commands: run their stage and write its files into cfg.output_dir. Later stages reuse
// earlier outputs found there and recompute what is missing.
FieldStage cmd_fieldmap(const RunConfig& cfg);
OptimizeStage cmd_optimize(const RunConfig& cfg);
HologramStage cmd_hologram(const RunConfig& cfg);
ValidateStage cmd_validate(const RunConfig& cfg);
void cmd_run_all(const RunConfig& cfg);

void write_field_outputs(const RunConfig& cfg, const FieldStage& s);
void write_optimize_outputs(const RunConfig& cfg, const OptimizeStage& s);
void write_hologram_outputs(const RunConfig& cfg, const HologramStage& s);
void write_validate_outputs(const RunConfig& cfg, const ValidateStage& s);

}  // namespace nvens::pipeline
