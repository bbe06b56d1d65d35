#include "nvens/nv_photophysics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "nvens/error.hpp"
#include "nvens/format.hpp"
#include "nvens/kernels.hpp"
#include "nvens/rng.hpp"

namespace nvens::photophysics {

namespace {

using State = std::array<double, 5>;

State derivative(const State& n, const RateModelParams& p) {
  return {p.gamma * n[2] + p.D0 * n[4] - p.R * n[0],
          p.gamma * n[3] + p.D1 * n[4] - p.R * n[1],
          -(p.gamma + p.S0) * n[2] + p.R * n[0],
          -(p.gamma + p.S1) * n[3] + p.R * n[1],
          p.S0 * n[2] + p.S1 * n[3] - (p.D0 + p.D1) * n[4]};
}

State axpy(const State& x, double h, const State& k) {
  State out;
  for (int i = 0; i < 5; ++i) out[i] = x[i] + h * k[i];
  return out;
}

}  // namespace

void RateModelParams::validate() const {
  for (double v : {R, gamma, S0, S1, D0, D1})
    if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError("transition rates must be finite and >= 0");
  if (!(gamma > 0.0)) throw DomainError("radiative decay rate must be positive");
}

void ReadoutWindow::validate() const {
  if (!(t_readout_us > 0.0)) throw DomainError("readout window must be positive");
  if (!(step_us > 0.0)) throw DomainError("time step must be positive");
}

std::vector<PopulationState> evolve_populations(const PopulationState& initial, const RateModelParams& p,
                                                double duration_us, double step_us) {
  p.validate();
  if (!(duration_us >= 0.0) || !(step_us > 0.0)) throw DomainError("duration must be >= 0 and step > 0");
  for (double v : initial.N)
    if (!(v >= 0.0) || v > 1.0) throw DomainError("initial populations must lie in [0, 1]");
  if (std::fabs(initial.sum() - 1.0) > 1e-9) throw DomainError("initial populations must sum to 1");
  const auto steps = static_cast<std::size_t>(std::ceil(duration_us / step_us - 1e-9));
  const double h = steps > 0 ? duration_us / static_cast<double>(steps) : 0.0;
  std::vector<PopulationState> out;
  out.reserve(steps + 1);
  out.push_back(initial);
  State x = initial.N;
  for (std::size_t k = 1; k <= steps; ++k) {
    const State k1 = derivative(x, p);
    const State k2 = derivative(axpy(x, 0.5 * h, k1), p);
    const State k3 = derivative(axpy(x, 0.5 * h, k2), p);
    const State k4 = derivative(axpy(x, h, k3), p);
    for (int i = 0; i < 5; ++i) x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    for (double v : x)
      if (v < -1e-6 || !std::isfinite(v))
        throw DomainError("rate-equation integration unstable (negative population); use a smaller step");
    out.push_back({x, initial.time_us + h * static_cast<double>(k)});
  }
  return out;
}

StationaryPopulations steady_state_populations(const RateModelParams& p) {
  p.validate();
  if (p.R == 0.0) return {PopulationState{{0.5, 0.5, 0.0, 0.0, 0.0}, 0.0}, true};
  if (!(p.S0 > 0.0) || !(p.S1 > 0.0) || !(p.D0 > 0.0) || !(p.D1 > 0.0))
    throw DomainError("closed-form steady state needs positive shelving and deshelving rates");
  // Per unit N5.
  State n{p.D0 * (p.gamma + p.S0) / (p.R * p.S0), p.D1 * (p.gamma + p.S1) / (p.R * p.S1), p.D0 / p.S0, p.D1 / p.S1, 1.0};
  const double total = n[0] + n[1] + n[2] + n[3] + n[4];
  for (double& v : n) v /= total;
  return {PopulationState{n, 0.0}, false};
}

double excited_fraction_limit(const RateModelParams& p) {
  p.validate();
  return (p.D0 * p.S1 + p.D1 * p.S0) / (p.S0 * p.S1 + p.D0 * p.S1 + p.D1 * p.S0);
}

double saturation_pumping_rate(const RateModelParams& p) {
  p.validate();
  const double den = p.S0 * p.S1 + p.D0 * p.S1 + p.D1 * p.S0;
  if (!(den > 0.0)) throw DomainError("saturation rate undefined for these shelving/deshelving rates");
  return (p.S0 * p.S1 * (p.D0 + p.D1) + p.gamma * (p.D0 * p.S1 + p.D1 * p.S0)) / den;
}

double mean_photons(SpinState spin, const RateModelParams& p, const ReadoutWindow& w) {
  w.validate();
  PopulationState init;
  init.N = spin == SpinState::ms0 ? State{1, 0, 0, 0, 0} : State{0, 1, 0, 0, 0};
  const auto traj = evolve_populations(init, p, w.t_readout_us, w.step_us);
  double n = 0.0;
  for (std::size_t k = 1; k < traj.size(); ++k)
    n += 0.5 * (traj[k].time_us - traj[k - 1].time_us) * (traj[k].excited() + traj[k - 1].excited());
  return p.gamma * n;
}

Readout readout(const RateModelParams& p, const ReadoutWindow& w) {
  return {mean_photons(SpinState::ms0, p, w), mean_photons(SpinState::ms1, p, w)};
}

void write_trajectory_csv(const std::vector<PopulationState>& traj, double rate_mhz, const std::filesystem::path& path) {
  std::ofstream f(path);
  if (!f) throw Error("cannot write " + path.string());
  f << "t_us,N1,N2,N3,N4,N5,rate_MHz\n";
  for (const auto& s : traj) {
    f << fmt_double(s.time_us);
    for (double v : s.N) f << ',' << fmt_double(v);
    f << ',' << fmt_double(rate_mhz) << '\n';
  }
  if (!f) throw Error("write failed: " + path.string());
}

PenaltyResult illumination_penalty(std::span<const double> intensity, std::span<const double> target,
                                   const PenaltyConfig& cfg, const protocols::RamseyParams& ramsey,
                                   std::span<const double> eps, Exec exec) {
  if (intensity.size() != target.size() || intensity.empty())
    throw DomainError("intensity and target must be non-empty and of equal length");
  if (!eps.empty() && eps.size() != intensity.size()) throw DomainError("pulse-error count does not match sensors");
  if (!(cfg.i_sat > 0.0)) throw DomainError("I_sat must be positive");
  cfg.window.validate();
  ramsey.validate();
  const double r_sat = saturation_pumping_rate(cfg.rates);

  // Figure of merit C·√n per sensor; the Ramsey sensitivity is inversely proportional to it.
  auto merit = [&](double i) {
    if (!(i > 0.0) || !std::isfinite(i)) return 0.0;
    RateModelParams r = cfg.rates;
    r.R = r_sat * i / cfg.i_sat;
    const Readout ro = readout(r, cfg.window);
    return ro.contrast() > 0.0 ? ro.contrast() * std::sqrt(ro.n_avg()) : 0.0;
  };
  std::vector<double> m_act(intensity.size());
  std::vector<double> m_tgt(target.size());
  const bool uniform_target = std::all_of(target.begin(), target.end(), [&](double t) { return t == target[0]; });
  if (exec == Exec::serial) {
    kernels::serial::transform(intensity, m_act, merit);
    if (!uniform_target) kernels::serial::transform(target, m_tgt, merit);
  } else {
    kernels::omp::transform(intensity, m_act, merit);
    if (!uniform_target) kernels::omp::transform(target, m_tgt, merit);
  }
  if (uniform_target) std::fill(m_tgt.begin(), m_tgt.end(), merit(target[0]));

  PenaltyResult out;
  out.sensors = intensity.size();
  double inv_act = 0.0;
  double inv_tgt = 0.0;
  double sum = 0.0;
  double sum2 = 0.0;
  std::size_t used = 0;
  for (std::size_t i = 0; i < intensity.size(); ++i) {
    if (!(m_act[i] > 0.0) || !(m_tgt[i] > 0.0)) {
      ++out.excluded;
      continue;
    }
    const double c2 = eps.empty() ? 1.0 : std::cos(eps[i]) * std::cos(eps[i]);
    protocols::RamseyParams pa = ramsey;
    pa.C = 1.0;
    pa.n_avg = 1.0;
    // η = η(C=1, n=1, ε) / (C√n); sum the inverses directly.
    const double base = protocols::ramsey_sensitivity({0.0}, pa) / c2;
    inv_act += m_act[i] / base;
    inv_tgt += m_tgt[i] / base;
    sum += intensity[i];
    sum2 += intensity[i] * intensity[i];
    ++used;
  }
  if (used == 0) throw DomainError("no illuminated sensors");
  const double n = static_cast<double>(used);
  out.eta_ens_actual = std::sqrt(n) / inv_act;
  out.eta_ens_target = std::sqrt(n) / inv_tgt;
  out.loss_db = ensemble::to_db(out.eta_ens_actual / out.eta_ens_target, cfg.db);
  const double mean = sum / n;
  out.nonuniformity = std::sqrt(std::max(0.0, sum2 / n - mean * mean)) / mean;
  return out;
}

std::vector<double> gaussian_intensity(std::size_t n, double mean, double relative_sd, std::uint64_t seed) {
  if (!(mean > 0.0) || !(relative_sd >= 0.0)) throw DomainError("intensity mean must be > 0 and sd >= 0");
  auto eng = rng::make_stream(seed, 0x1f);
  std::vector<double> out(n);
  for (double& v : out) {
    do {
      v = mean * (1.0 + relative_sd * rng::normal(eng));
    } while (!(v > 0.0));
  }
  return out;
}

}  // namespace nvens::photophysics
