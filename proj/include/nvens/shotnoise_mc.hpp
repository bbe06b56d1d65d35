#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "nvens/exec.hpp"
#include "nvens/protocols.hpp"

namespace nvens::mc {

/// Poisson channel with mean count λ(δB) per shot. `period` is the δB period of the signal
/// (0 if not periodic); it sets the default finite-difference step.
struct PoissonChannel {
  std::function<double(double)> lambda;
  double period = 0.0;

  double lambda0() const { return lambda(0.0); }
};

PoissonChannel linear_channel(double lambda0, double slope_per_unit);
PoissonChannel ramsey_channel(double eps, const protocols::RamseyParams& params, double phase = 0.0);
PoissonChannel echo_channel(double eps, const protocols::EchoParams& params);

struct MCConfig {
  std::size_t shots = 100000;
  std::uint64_t seed = 1;
  double dB = 0.0;            // evaluation point of the linear estimator
  double fd_step = 0.0;       // absolute ∂λ step; 0 = fd_fraction × channel period
  double fd_fraction = 1e-4;
  std::size_t streams = 64;   // RNG streams (fixed, independent of thread count)

  void validate() const;
};

double fd_step_for(const PoissonChannel& ch, const MCConfig& cfg);
double channel_slope(const PoissonChannel& ch, double dB, double step);

/// F = (∂λ)²/λ at δB.
double fisher_information(const PoissonChannel& channel, double dB, const MCConfig& cfg = {});

/// F_ens = (Σ∂λᵢ)²/Σλᵢ for the pooled count.
double ensemble_fisher(std::span<const PoissonChannel> channels, double dB, const MCConfig& cfg = {});

struct EstimatorStats {
  std::string label;
  std::size_t shots = 0;
  double mean = 0.0;
  double std = 0.0;
  double se = 0.0;
  double fisher_pred = 0.0;  // 1/√F_ens
  double lambda_total = 0.0;
  double slope_total = 0.0;
};

/// Linear estimator δB̂ = (k − Λ(δB₀))/Λ′(δB₀) on pooled Poisson counts k ~ Poisson(Λ(true δB)).
EstimatorStats simulate_estimator(std::span<const PoissonChannel> channels, const MCConfig& cfg, double true_dB,
                                  Exec exec = Exec::parallel);

struct PairedStats {
  EstimatorStats subset;
  EstimatorStats full;
  double variance_ratio = 0.0;         // var(subset)/var(full)
  double predicted_fisher_ratio = 0.0; // F_full/F_subset
};

PairedStats subset_vs_full_mc(std::span<const PoissonChannel> channels, const std::vector<bool>& in_subset,
                              const MCConfig& cfg, Exec exec = Exec::parallel);

/// CSV with columns label,shots,mean,std,se,fisher_pred,ratio (ratio = std/fisher_pred).
void write_stats_csv(std::span<const EstimatorStats> stats, const std::filesystem::path& path);

}  // namespace nvens::mc
