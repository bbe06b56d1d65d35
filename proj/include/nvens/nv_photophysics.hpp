#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <vector>

#include "nvens/ensemble_opt.hpp"
#include "nvens/exec.hpp"
#include "nvens/protocols.hpp"

namespace nvens::photophysics {

/// Five-level NV⁻ rates in MHz (time in µs): ground ms=0 (N1), ms=±1 (N2), excited ms=0 (N3),
/// ms=±1 (N4), merged singlet (N5).
struct RateModelParams {
  double R = 41.07;
  double gamma = 67.4;
  double S0 = 9.9;
  double S1 = 91.6;
  double D0 = 4.83;
  double D1 = 2.11;

  void validate() const;
};

struct PopulationState {
  std::array<double, 5> N{1.0, 0.0, 0.0, 0.0, 0.0};
  double time_us = 0.0;

  double sum() const { return N[0] + N[1] + N[2] + N[3] + N[4]; }
  double excited() const { return N[2] + N[3]; }
};

struct ReadoutWindow {
  double t_readout_us = 0.3;
  double step_us = 1e-3;

  void validate() const;
};

/// Fixed-step RK4 trajectory, including the initial state.
std::vector<PopulationState> evolve_populations(const PopulationState& initial, const RateModelParams& params,
                                                double duration_us, double step_us);

struct StationaryPopulations {
  PopulationState state;
  bool degenerate = false;  // R = 0: any ground-state mixture is stationary
};

StationaryPopulations steady_state_populations(const RateModelParams& params);

/// Excited-triplet fraction in the high-pumping limit.
double excited_fraction_limit(const RateModelParams& params);
double saturation_pumping_rate(const RateModelParams& params);

enum class SpinState { ms0, ms1 };

/// n = ∫γ(N3+N4)dt over the window (trapezoid rule on the RK4 trajectory).
double mean_photons(SpinState spin, const RateModelParams& params, const ReadoutWindow& window);

struct Readout {
  double n0 = 0.0;
  double n1 = 0.0;
  double contrast() const { return (n0 - n1) / (n0 + n1); }
  double n_avg() const { return 0.5 * (n0 + n1); }
};

Readout readout(const RateModelParams& params, const ReadoutWindow& window);

void write_trajectory_csv(const std::vector<PopulationState>& traj, double rate_mhz, const std::filesystem::path& path);

struct PenaltyResult {
  double loss_db = 0.0;
  double nonuniformity = 0.0;
  double eta_ens_actual = 0.0;
  double eta_ens_target = 0.0;
  std::size_t sensors = 0;
  std::size_t excluded = 0;
};

struct PenaltyConfig {
  RateModelParams rates;
  ReadoutWindow window;
  double i_sat = 1.0;
  ensemble::DbConvention db = ensemble::DbConvention::ten_log;
};

/// Sensitivity loss of the sensor subset when illuminated with `intensity` instead of
/// `target`. Each sensor's pumping rate is R_sat·I/I_sat; contrast and photon number come
/// from the five-level readout; the Ramsey sensitivity (pulse errors `eps`, zero if empty)
/// enters the ensemble law. Pixels with non-positive intensity are excluded.
PenaltyResult illumination_penalty(std::span<const double> intensity, std::span<const double> target,
                                   const PenaltyConfig& config, const protocols::RamseyParams& ramsey,
                                   std::span<const double> eps = {}, Exec exec = Exec::parallel);

/// Multiplicative Gaussian intensity field I = mean·(1 + sd·z), truncated to positive
/// values (seeded).
std::vector<double> gaussian_intensity(std::size_t n, double mean, double relative_sd, std::uint64_t seed);

}  // namespace nvens::photophysics
