#include "nvens/shotnoise_mc.hpp"

#include <cmath>
#include <fstream>
#include <numbers>

#include "nvens/error.hpp"
#include "nvens/format.hpp"
#include "nvens/kernels.hpp"

namespace nvens::mc {

PoissonChannel linear_channel(double lambda0, double slope) {
  if (!(lambda0 > 0.0)) throw DomainError("channel mean must be positive");
  return {[lambda0, slope](double b) { return lambda0 * (1.0 + slope * b); }, 0.0};
}

PoissonChannel ramsey_channel(double eps, const protocols::RamseyParams& params, double phase) {
  params.validate();
  const double period = 2.0 * std::numbers::pi / (params.gamma_e * params.tau);
  return {[eps, params, phase](double b) { return protocols::ramsey_signal({eps}, phase, b, params); }, period};
}

PoissonChannel echo_channel(double eps, const protocols::EchoParams& params) {
  params.validate();
  // φ0 = γδBτ/π; the slowest term sin φ0 has period 2π in φ0.
  const double period = 2.0 * std::numbers::pi * std::numbers::pi / (params.gamma_e * params.tau);
  return {[eps, params](double b) { return protocols::echo_signal({eps}, b, params); }, period};
}

void MCConfig::validate() const {
  if (shots < 1000) throw DomainError("Monte Carlo needs at least 1000 shots");
  if (!(fd_step >= 0.0) || !(fd_fraction > 0.0)) throw DomainError("finite-difference step must be positive");
  if (streams == 0) throw DomainError("need at least one RNG stream");
}

double fd_step_for(const PoissonChannel& ch, const MCConfig& cfg) {
  if (cfg.fd_step > 0.0) return cfg.fd_step;
  if (ch.period > 0.0) return cfg.fd_fraction * ch.period;
  return cfg.fd_fraction;
}

double channel_slope(const PoissonChannel& ch, double dB, double h) {
  return (ch.lambda(dB + h) - ch.lambda(dB - h)) / (2.0 * h);
}

double fisher_information(const PoissonChannel& ch, double dB, const MCConfig& cfg) {
  const double l = ch.lambda(dB);
  if (!(l > 0.0)) throw DomainError("Poisson mean must be positive");
  const double s = channel_slope(ch, dB, fd_step_for(ch, cfg));
  return s * s / l;
}

namespace {

struct Pooled {
  double lambda = 0.0;
  double slope = 0.0;
};

Pooled pool(std::span<const PoissonChannel> channels, double dB, const MCConfig& cfg) {
  Pooled p;
  for (const auto& ch : channels) {
    const double l = ch.lambda(dB);
    if (!(l > 0.0)) throw DomainError("Poisson mean must be positive");
    p.lambda += l;
    p.slope += channel_slope(ch, dB, fd_step_for(ch, cfg));
  }
  return p;
}

}  // namespace

double ensemble_fisher(std::span<const PoissonChannel> channels, double dB, const MCConfig& cfg) {
  if (channels.empty()) throw DomainError("no channels");
  const Pooled p = pool(channels, dB, cfg);
  return p.slope * p.slope / p.lambda;
}

EstimatorStats simulate_estimator(std::span<const PoissonChannel> channels, const MCConfig& cfg, double true_dB,
                                  Exec exec) {
  cfg.validate();
  if (channels.empty()) throw DomainError("no channels");
  const Pooled ref = pool(channels, cfg.dB, cfg);
  if (ref.slope == 0.0 || !std::isfinite(ref.slope)) throw DomainError("pooled signal has zero slope");
  double mean_true = 0.0;
  for (const auto& ch : channels) mean_true += ch.lambda(true_dB);

  std::vector<double> k(cfg.shots);
  const kernels::PoissonShotJob job{mean_true, cfg.seed, cfg.shots, cfg.streams};
  if (exec == Exec::serial)
    kernels::serial::poisson_shots(job, k);
  else
    kernels::omp::poisson_shots(job, k);

  // Two-pass moments of the estimate.
  double sum = 0.0;
  for (double& v : k) {
    v = cfg.dB + (v - ref.lambda) / ref.slope;
    sum += v;
  }
  const double n = static_cast<double>(cfg.shots);
  const double mean = sum / n;
  double ss = 0.0;
  for (double v : k) ss += (v - mean) * (v - mean);
  EstimatorStats st;
  st.shots = cfg.shots;
  st.mean = mean;
  st.std = std::sqrt(ss / (n - 1.0));
  st.se = st.std / std::sqrt(n);
  st.fisher_pred = std::sqrt(ref.lambda) / std::fabs(ref.slope);
  st.lambda_total = ref.lambda;
  st.slope_total = ref.slope;
  return st;
}

PairedStats subset_vs_full_mc(std::span<const PoissonChannel> channels, const std::vector<bool>& in_subset,
                              const MCConfig& cfg, Exec exec) {
  if (in_subset.size() != channels.size()) throw DomainError("subset membership size mismatch");
  std::vector<PoissonChannel> sub;
  for (std::size_t i = 0; i < channels.size(); ++i)
    if (in_subset[i]) sub.push_back(channels[i]);
  if (sub.empty()) throw DomainError("subset is empty");
  PairedStats out;
  out.subset = simulate_estimator(sub, cfg, cfg.dB, exec);
  out.subset.label = "subset";
  MCConfig full_cfg = cfg;
  full_cfg.seed = cfg.seed + 1;
  out.full = simulate_estimator(channels, full_cfg, cfg.dB, exec);
  out.full.label = "full";
  out.variance_ratio = (out.subset.std * out.subset.std) / (out.full.std * out.full.std);
  out.predicted_fisher_ratio = ensemble_fisher(channels, cfg.dB, cfg) / ensemble_fisher(sub, cfg.dB, cfg);
  return out;
}

void write_stats_csv(std::span<const EstimatorStats> stats, const std::filesystem::path& path) {
  std::ofstream f(path);
  if (!f) throw Error("cannot write " + path.string());
  f << "label,shots,mean,std,se,fisher_pred,ratio\n";
  for (const auto& s : stats)
    f << s.label << ',' << s.shots << ',' << fmt_double(s.mean) << ',' << fmt_double(s.std) << ',' << fmt_double(s.se)
      << ',' << fmt_double(s.fisher_pred) << ',' << fmt_double(s.std / s.fisher_pred) << '\n';
  if (!f) throw Error("write failed: " + path.string());
}

}  // namespace nvens::mc
