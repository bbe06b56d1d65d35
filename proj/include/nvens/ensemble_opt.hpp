#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "nvens/field.hpp"
#include "nvens/protocols.hpp"

namespace nvens::ensemble {

enum class DbConvention { ten_log, twenty_log };

DbConvention parse_db_convention(const std::string& name);
std::string to_string(DbConvention c);
/// Sensitivity ratio expressed in dB under the chosen convention.
double to_db(double ratio, DbConvention c);

struct Sensor {
  std::size_t index = 0;
  double eta = 0.0;
};

/// Sensors with individual sensitivities; +∞ marks an excluded sensor.
struct SensorEnsemble {
  std::vector<Sensor> sensors;
  std::vector<double> weights;  // optional photon weights, empty = all 1

  static SensorEnsemble from_values(std::span<const double> eta);
  static SensorEnsemble from_map(const ScalarField2D& eta_map);
};

/// Sorted prefix curve of the ensemble law η_ens(N) = √W_N / S_N, S_N = Σ√wᵢ/ηᵢ.
struct EnsembleCurve {
  std::vector<Sensor> sorted;       // finite sensors only, ascending η (ties by index)
  std::vector<double> inverse_sum;  // S_N, N = 1..n
  std::vector<double> weight_sum;   // W_N
  std::vector<double> eta_ens;      // η_ens(N)
  std::size_t n_star = 0;           // argmin, 1-based
  std::size_t n_total = 0;          // including excluded sensors

  double eta_ens_at(std::size_t n) const { return eta_ens.at(n - 1); }
  double eta_star() const { return eta_ens_at(n_star); }
  double eta_threshold() const { return sorted.at(n_star - 1).eta; }
};

EnsembleCurve ensemble_sensitivity(const SensorEnsemble& ens);

/// Does adding a sensor of sensitivity `eta_next` strictly improve the ensemble?
bool marginal_gain_test(double inverse_sum, std::size_t n, double eta_next);

struct SubsetMask {
  Mask mask;
  double eta_th = 0.0;
  double eta_th_over_min = 0.0;
  std::size_t n_star = 0;
};

struct OptimalSubset {
  SubsetMask subset;
  EnsembleCurve curve;
};

OptimalSubset optimal_subset(const ScalarField2D& eta_map);

/// |η_{N*} − 2√N*·η_ens(N*)| / η_{N*}.
double threshold_consistency(const EnsembleCurve& curve);

/// Ensemble law restricted to the masked (finite) pixels.
double masked_ensemble_sensitivity(const ScalarField2D& eta_map, const Mask& mask);

/// Gain of the optimal subset over the baseline subset, in dB.
double metrology_gain(const ScalarField2D& eta_map, const Mask& baseline, const Mask& optimal,
                      DbConvention c = DbConvention::ten_log);

/// Σᵢ S(εᵢ; δB) of Ramsey signals for each δB in `dB`.
std::vector<double> ensemble_signal_scan(std::span<const double> eps, const protocols::RamseyParams& params,
                                         std::span<const double> dB, double phase = 0.0);

void write_curve_csv(const EnsembleCurve& curve, const std::filesystem::path& path);

struct GainRow {
  double uniformity_target = 0.0;
  double disk_radius_mm = 0.0;
  std::size_t baseline_pixels = 0;
  double achieved_uniformity = 0.0;
  double gain_db = 0.0;
};

struct GainsReport {
  std::string protocol;
  DbConvention convention = DbConvention::ten_log;
  std::size_t n_star = 0;
  std::size_t n_total = 0;
  double eta_th = 0.0;
  double eta_min = 0.0;
  double eta_center = 0.0;
  double eta_ens_optimal = 0.0;
  double threshold_residual = 0.0;
  std::vector<GainRow> rows;
};

void write_gains_report(const GainsReport& report, const std::filesystem::path& path);

}  // namespace nvens::ensemble
