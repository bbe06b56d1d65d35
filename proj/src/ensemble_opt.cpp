#include "nvens/ensemble_opt.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "nvens/error.hpp"
#include "nvens/format.hpp"

namespace nvens::ensemble {

DbConvention parse_db_convention(const std::string& name) {
  if (name == "10log") return DbConvention::ten_log;
  if (name == "20log") return DbConvention::twenty_log;
  throw ConfigError("unknown dB convention '" + name + "' (expected 10log|20log)");
}

std::string to_string(DbConvention c) { return c == DbConvention::ten_log ? "10log" : "20log"; }

double to_db(double ratio, DbConvention c) {
  if (!(ratio > 0.0)) throw DomainError("dB of a non-positive ratio");
  return (c == DbConvention::ten_log ? 10.0 : 20.0) * std::log10(ratio);
}

SensorEnsemble SensorEnsemble::from_values(std::span<const double> eta) {
  SensorEnsemble e;
  e.sensors.reserve(eta.size());
  for (std::size_t i = 0; i < eta.size(); ++i) e.sensors.push_back({i, eta[i]});
  return e;
}

SensorEnsemble SensorEnsemble::from_map(const ScalarField2D& eta_map) { return from_values(eta_map.values()); }

EnsembleCurve ensemble_sensitivity(const SensorEnsemble& ens) {
  if (ens.sensors.empty()) throw DomainError("ensemble is empty");
  if (!ens.weights.empty() && ens.weights.size() != ens.sensors.size())
    throw DomainError("weight count does not match sensor count");
  EnsembleCurve c;
  c.n_total = ens.sensors.size();
  std::vector<std::pair<Sensor, double>> finite;
  finite.reserve(ens.sensors.size());
  for (std::size_t i = 0; i < ens.sensors.size(); ++i) {
    const Sensor& s = ens.sensors[i];
    if (std::isnan(s.eta) || !(s.eta > 0.0)) throw DomainError("sensor sensitivities must be positive");
    const double w = ens.weights.empty() ? 1.0 : ens.weights[i];
    if (!(w > 0.0) || !std::isfinite(w)) throw DomainError("sensor weights must be positive");
    if (std::isfinite(s.eta)) finite.push_back({s, w});
  }
  if (finite.empty()) throw DomainError("all sensors have infinite sensitivity");
  std::sort(finite.begin(), finite.end(), [](const auto& a, const auto& b) {
    return a.first.eta < b.first.eta || (a.first.eta == b.first.eta && a.first.index < b.first.index);
  });
  const std::size_t n = finite.size();
  c.sorted.reserve(n);
  c.inverse_sum.reserve(n);
  c.weight_sum.reserve(n);
  c.eta_ens.reserve(n);
  double s = 0.0;
  double w = 0.0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < n; ++k) {
    const auto& [sensor, weight] = finite[k];
    s += std::sqrt(weight) / sensor.eta;
    w += weight;
    const double e = std::sqrt(w) / s;
    c.sorted.push_back(sensor);
    c.inverse_sum.push_back(s);
    c.weight_sum.push_back(w);
    c.eta_ens.push_back(e);
    if (e < best) {
      best = e;
      c.n_star = k + 1;
    }
  }
  return c;
}

bool marginal_gain_test(double inverse_sum, std::size_t n, double eta_next) {
  const double nn = static_cast<double>(n);
  return (inverse_sum + 1.0 / eta_next) / std::sqrt(nn + 1.0) > inverse_sum / std::sqrt(nn);
}

OptimalSubset optimal_subset(const ScalarField2D& eta_map) {
  OptimalSubset out{SubsetMask{Mask(eta_map.grid())}, ensemble_sensitivity(SensorEnsemble::from_map(eta_map))};
  const EnsembleCurve& c = out.curve;
  for (std::size_t k = 0; k < c.n_star; ++k) out.subset.mask.set(c.sorted[k].index, true);
  out.subset.n_star = c.n_star;
  out.subset.eta_th = c.eta_threshold();
  out.subset.eta_th_over_min = c.eta_threshold() / c.sorted.front().eta;
  return out;
}

double threshold_consistency(const EnsembleCurve& curve) {
  if (curve.n_star < 10) throw DomainError("threshold consistency needs N* >= 10");
  const double eta_n = curve.eta_threshold();
  return std::fabs(eta_n - 2.0 * std::sqrt(static_cast<double>(curve.n_star)) * curve.eta_star()) / eta_n;
}

double masked_ensemble_sensitivity(const ScalarField2D& eta_map, const Mask& mask) {
  if (!(mask.grid() == eta_map.grid())) throw DomainError("mask grid differs from map grid");
  double s = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < eta_map.size(); ++i) {
    if (!mask[i]) continue;
    ++n;
    if (std::isfinite(eta_map[i])) s += 1.0 / eta_map[i];
  }
  if (n == 0) throw DomainError("ensemble mask is empty");
  if (s == 0.0) return std::numeric_limits<double>::infinity();
  return std::sqrt(static_cast<double>(n)) / s;
}

double metrology_gain(const ScalarField2D& eta_map, const Mask& baseline, const Mask& optimal, DbConvention c) {
  return to_db(masked_ensemble_sensitivity(eta_map, baseline) / masked_ensemble_sensitivity(eta_map, optimal), c);
}

std::vector<double> ensemble_signal_scan(std::span<const double> eps, const protocols::RamseyParams& params,
                                         std::span<const double> dB, double phase) {
  params.validate();
  std::vector<double> out;
  out.reserve(dB.size());
  for (double b : dB) {
    double sum = 0.0;
    for (double e : eps) sum += protocols::ramsey_signal({e}, phase, b, params);
    out.push_back(sum);
  }
  return out;
}

void write_curve_csv(const EnsembleCurve& curve, const std::filesystem::path& path) {
  std::ofstream f(path);
  if (!f) throw Error("cannot write " + path.string());
  f << "N,eta_sensor,eta_ens\n";
  for (std::size_t k = 0; k < curve.eta_ens.size(); ++k)
    f << k + 1 << ',' << fmt_double(curve.sorted[k].eta) << ',' << fmt_double(curve.eta_ens[k]) << '\n';
  if (!f) throw Error("write failed: " + path.string());
}

void write_gains_report(const GainsReport& r, const std::filesystem::path& path) {
  std::ofstream f(path);
  if (!f) throw Error("cannot write " + path.string());
  f << "protocol: " << r.protocol << '\n'
    << "db_convention: " << to_string(r.convention) << '\n'
    << "sensors: " << r.n_total << '\n'
    << "n_star: " << r.n_star << '\n'
    << "eta_th: " << fmt_double(r.eta_th) << '\n'
    << "eta_th_over_min: " << fmt_double(r.eta_th / r.eta_min) << '\n'
    << "eta_th_over_center: " << fmt_double(r.eta_th / r.eta_center) << '\n'
    << "eta_ens_optimal: " << fmt_double(r.eta_ens_optimal) << '\n'
    << "threshold_residual: " << fmt_double(r.threshold_residual) << '\n'
    << '\n'
    << "uniformity_target,disk_radius_mm,baseline_pixels,achieved_uniformity,gain_db\n";
  for (const GainRow& g : r.rows)
    f << fmt_double(g.uniformity_target) << ',' << fmt_double(g.disk_radius_mm) << ',' << g.baseline_pixels << ','
      << fmt_double(g.achieved_uniformity) << ',' << fmt_double(g.gain_db) << '\n';
  if (!f) throw Error("write failed: " + path.string());
}

}  // namespace nvens::ensemble
