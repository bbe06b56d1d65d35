#include "nvens/pipeline.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include "nvens/error.hpp"
#include "nvens/format.hpp"

namespace nvens::pipeline {

namespace fs = std::filesystem;

namespace {

fs::path out_path(const RunConfig& cfg, const char* name) { return cfg.output_dir / name; }

void ensure_dir(const RunConfig& cfg) {
  std::error_code ec;
  fs::create_directories(cfg.output_dir, ec);
  if (ec) throw Error("cannot create output directory " + cfg.output_dir.string() + ": " + ec.message());
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream f(p);
  if (!f) throw Error("cannot write " + p.string());
  return f;
}

double reference_omega(const ScalarField2D& omega) {
  const double c = omega.center();
  if (!(c > 0.0)) throw DomainError("field map centre value must be positive");
  return c;
}

// Per-sensor Poisson channels for the selected protocol. CW has no pulsed signal model, so
// its sensors become linear channels with the slope implied by their sensitivity.
std::vector<mc::PoissonChannel> make_channels(const RunConfig& cfg, const ScalarField2D& omega,
                                              const ScalarField2D& eta, const std::vector<std::size_t>& pixels) {
  const double w0 = reference_omega(omega);
  const auto& pp = cfg.protocol;
  std::vector<mc::PoissonChannel> ch;
  ch.reserve(pixels.size());
  double eta_ref = std::numeric_limits<double>::infinity();
  for (std::size_t i : pixels) eta_ref = std::min(eta_ref, eta[i]);
  for (std::size_t i : pixels) {
    const double e = protocols::pulse_error(omega[i], w0).epsilon;
    switch (pp.protocol) {
      case protocols::Protocol::ramsey: ch.push_back(mc::ramsey_channel(e, pp.ramsey)); break;
      case protocols::Protocol::echo: ch.push_back(mc::echo_channel(e, pp.echo)); break;
      case protocols::Protocol::cw: {
        const double slope = std::isfinite(eta[i]) ? eta_ref / eta[i] / std::sqrt(pp.ramsey.n_avg) : 0.0;
        ch.push_back(mc::linear_channel(pp.ramsey.n_avg, slope));
        break;
      }
    }
  }
  return ch;
}

// Ensemble law with per-shot sensitivities ηᵢ = √λᵢ/|∂λᵢ| of each channel.
double law_prediction(std::span<const mc::PoissonChannel> ch, const mc::MCConfig& mcc) {
  double s = 0.0;
  for (const auto& c : ch) {
    const double slope = std::fabs(mc::channel_slope(c, mcc.dB, mc::fd_step_for(c, mcc)));
    s += slope / std::sqrt(c.lambda(mcc.dB));
  }
  return std::sqrt(static_cast<double>(ch.size())) / s;
}

Mask read_mask_csv(const fs::path& p) {
  const ScalarField2D f = read_csv_grid(p);
  Mask m(f.grid());
  for (std::size_t i = 0; i < f.size(); ++i) m.set(i, f[i] > 0.5);
  return m;
}

}  // namespace

FieldStage field_stage(const RunConfig& cfg) {
  cfg.validate();
  FieldStage s;
  if (cfg.field_import) {
    s.omega = antenna::import_field_map(*cfg.field_import);
  } else {
    s.omega = antenna::biot_savart_rabi_map(cfg.antenna, cfg.grid, cfg.frame, cfg.drive_scale);
  }
  const double w0 = reference_omega(s.omega);
  for (double t : kUniformityTargets) s.disks.push_back(antenna::uniformity_region(s.omega, w0, t));
  return s;
}

OptimizeStage optimize_stage(const RunConfig& cfg, const FieldStage& field) {
  OptimizeStage s;
  s.eta = protocols::sensitivity_map(field.omega, cfg.protocol);
  s.optimum = ensemble::optimal_subset(s.eta);
  const auto& curve = s.optimum.curve;
  auto& r = s.report;
  r.protocol = protocols::to_string(cfg.protocol.protocol);
  r.convention = cfg.db;
  r.n_star = curve.n_star;
  r.n_total = curve.n_total;
  r.eta_th = curve.eta_threshold();
  r.eta_min = curve.sorted.front().eta;
  r.eta_center = s.eta.center();
  r.eta_ens_optimal = curve.eta_star();
  r.threshold_residual = curve.n_star >= 10 ? ensemble::threshold_consistency(curve) : std::nan("");
  for (std::size_t k = 0; k < kUniformityTargets.size(); ++k) {
    const auto& d = field.disks.at(k);
    r.rows.push_back({kUniformityTargets[k], d.radius_mm, d.mask.count(), d.uniformity,
                      ensemble::metrology_gain(s.eta, d.mask, s.optimum.subset.mask, cfg.db)});
  }
  return s;
}

HologramStage hologram_stage(const RunConfig& cfg, const Mask& subset) {
  return {holography::hologram_for_subset(subset, cfg.optics, cfg.seed)};
}

ValidateStage validate_stage(const RunConfig& cfg, const FieldStage& field, const Mask& subset,
                             const ScalarField2D* hologram_intensity) {
  if (!(subset.grid() == field.omega.grid())) throw DomainError("subset mask grid differs from the field map");
  ValidateStage v;
  const ScalarField2D eta = protocols::sensitivity_map(field.omega, cfg.protocol);

  std::vector<std::size_t> all(field.omega.size());
  std::vector<bool> member(all.size());
  for (std::size_t i = 0; i < all.size(); ++i) {
    all[i] = i;
    member[i] = subset[i];
  }
  const auto channels = make_channels(cfg, field.omega, eta, all);
  mc::MCConfig mcc;
  mcc.shots = cfg.mc.shots;
  mcc.seed = cfg.seed;
  mcc.fd_fraction = cfg.mc.fd_fraction;
  mcc.streams = cfg.mc.streams;
  v.mc = mc::subset_vs_full_mc(channels, member, mcc);
  std::vector<mc::PoissonChannel> sub;
  for (std::size_t i = 0; i < channels.size(); ++i)
    if (member[i]) sub.push_back(channels[i]);
  v.law_subset = law_prediction(sub, mcc);
  v.law_full = law_prediction(channels, mcc);

  // Illumination penalty on the subset with a seeded multiplicative Gaussian field.
  photophysics::PenaltyConfig pc{cfg.rates, cfg.window, cfg.penalty.i_sat, cfg.db};
  const double i0 = cfg.penalty.mean_intensity * cfg.penalty.i_sat;
  std::vector<double> eps;
  const double w0 = reference_omega(field.omega);
  for (std::size_t i = 0; i < subset.size(); ++i)
    if (subset[i]) eps.push_back(protocols::pulse_error(field.omega[i], w0).epsilon);
  const std::vector<double> target(eps.size(), i0);
  auto penalty_at = [&](double sd) {
    const auto intensity = photophysics::gaussian_intensity(eps.size(), i0, sd, cfg.seed);
    return photophysics::illumination_penalty(intensity, target, pc, cfg.protocol.ramsey, eps);
  };
  v.synthetic_penalty = penalty_at(cfg.penalty.nonuniformity);
  for (double sd : {0.1, 0.2, 0.328, 0.5}) v.penalty_scan.emplace_back(sd, penalty_at(sd).loss_db);

  if (hologram_intensity) {
    const GridSpec slm{1.0, 1.0, cfg.optics.slm_pixels, cfg.optics.slm_pixels};
    if (!(hologram_intensity->grid() == slm)) throw DomainError("hologram intensity grid differs from the SLM grid");
    const Mask tgt = resample_nearest(subset, slm, cfg.optics.map_fraction);
    std::vector<double> vals;
    for (std::size_t i = 0; i < tgt.size(); ++i)
      if (tgt[i]) vals.push_back((*hologram_intensity)[i]);
    double mean = 0.0;
    for (double x : vals) mean += x;
    mean /= static_cast<double>(vals.size());
    if (mean > 0.0) {
      for (double& x : vals) x *= i0 / mean;
      const std::vector<double> tg(vals.size(), i0);
      v.hologram_penalty = photophysics::illumination_penalty(vals, tg, pc, cfg.protocol.ramsey);
    }
  }
  return v;
}

void write_field_outputs(const RunConfig& cfg, const FieldStage& s) {
  ensure_dir(cfg);
  antenna::export_field_map(s.omega, out_path(cfg, "omega_map.csv"));
  write_csv_grid(antenna::normalized_deviation(s.omega, reference_omega(s.omega)), out_path(cfg, "omega_deviation.csv"));
  auto f = open_out(out_path(cfg, "uniformity_contours.csv"));
  f << "uniformity_target,radius_mm,pixels,achieved_uniformity\n";
  for (std::size_t k = 0; k < s.disks.size(); ++k)
    f << fmt_double(kUniformityTargets[k]) << ',' << fmt_double(s.disks[k].radius_mm) << ',' << s.disks[k].mask.count()
      << ',' << fmt_double(s.disks[k].uniformity) << '\n';
}

void write_optimize_outputs(const RunConfig& cfg, const OptimizeStage& s) {
  ensure_dir(cfg);
  write_csv_grid(s.eta, out_path(cfg, "sensitivity_map.csv"));
  ScalarField2D mask = s.optimum.subset.mask.to_field();
  write_csv_grid(mask, out_path(cfg, "subset_mask.csv"));
  ensemble::write_curve_csv(s.optimum.curve, out_path(cfg, "ensemble_curve.csv"));
  ensemble::write_gains_report(s.report, out_path(cfg, "gains_report.txt"));
}

void write_hologram_outputs(const RunConfig& cfg, const HologramStage& s) {
  ensure_dir(cfg);
  const auto& plan = s.hologram.feedback.plan;
  write_csv_grid(plan.phase, out_path(cfg, "phase_map.csv"));
  write_pgm(plan.phase, 0.0, 2.0 * 3.14159265358979323846, out_path(cfg, "phase_map.pgm"));
  write_csv_grid(s.hologram.intensity, out_path(cfg, "intensity_sim.csv"));
  holography::write_iteration_log(s.hologram.synthesis.log, out_path(cfg, "iteration_log.csv"));
  holography::write_iteration_log(s.hologram.feedback.log, out_path(cfg, "feedback_log.csv"));
}

void write_validate_outputs(const RunConfig& cfg, const ValidateStage& v) {
  ensure_dir(cfg);
  const std::array<mc::EstimatorStats, 2> rows{v.mc.subset, v.mc.full};
  mc::write_stats_csv(rows, out_path(cfg, "mc_report.csv"));

  auto p = open_out(out_path(cfg, "penalty_report.txt"));
  p << "db_convention: " << ensemble::to_string(cfg.db) << '\n'
    << "mean_intensity_over_isat: " << fmt_double(cfg.penalty.mean_intensity) << '\n'
    << "synthetic_nonuniformity_percent: " << fmt_double(100.0 * v.synthetic_penalty.nonuniformity) << '\n'
    << "synthetic_loss_db: " << fmt_double(v.synthetic_penalty.loss_db) << '\n'
    << "sensors: " << v.synthetic_penalty.sensors << '\n'
    << "excluded: " << v.synthetic_penalty.excluded << '\n';
  if (v.hologram_penalty) {
    p << "hologram_nonuniformity_percent: " << fmt_double(100.0 * v.hologram_penalty->nonuniformity) << '\n'
      << "hologram_loss_db: " << fmt_double(v.hologram_penalty->loss_db) << '\n';
  }
  p << "\nnonuniformity_percent,loss_db\n";
  for (const auto& [sd, loss] : v.penalty_scan) p << fmt_double(100.0 * sd) << ',' << fmt_double(loss) << '\n';

  auto s = open_out(out_path(cfg, "validation_summary.txt"));
  auto line = [&](const char* label, const mc::EstimatorStats& st, double law) {
    s << label << ": mc_std=" << fmt_double(st.std) << " fisher_pred=" << fmt_double(st.fisher_pred)
      << " law_pred=" << fmt_double(law) << " mc_over_law=" << fmt_double(st.std / law) << '\n';
  };
  line("subset", v.mc.subset, v.law_subset);
  line("full", v.mc.full, v.law_full);
  s << "variance_ratio_mc: " << fmt_double(v.mc.variance_ratio) << '\n'
    << "variance_ratio_law: " << fmt_double((v.law_subset / v.law_full) * (v.law_subset / v.law_full)) << '\n'
    << "variance_ratio_fisher: " << fmt_double(v.mc.predicted_fisher_ratio) << '\n';
}

FieldStage cmd_fieldmap(const RunConfig& cfg) {
  FieldStage s = field_stage(cfg);
  write_field_outputs(cfg, s);
  return s;
}

OptimizeStage cmd_optimize(const RunConfig& cfg) {
  const FieldStage f = field_stage(cfg);
  OptimizeStage s = optimize_stage(cfg, f);
  write_optimize_outputs(cfg, s);
  return s;
}

HologramStage cmd_hologram(const RunConfig& cfg) {
  const fs::path mask_path = out_path(cfg, "subset_mask.csv");
  Mask subset = fs::exists(mask_path) ? read_mask_csv(mask_path) : cmd_optimize(cfg).optimum.subset.mask;
  HologramStage s = hologram_stage(cfg, subset);
  write_hologram_outputs(cfg, s);
  return s;
}

ValidateStage cmd_validate(const RunConfig& cfg) {
  const FieldStage f = field_stage(cfg);
  const fs::path mask_path = out_path(cfg, "subset_mask.csv");
  const Mask subset = fs::exists(mask_path) ? read_mask_csv(mask_path) : optimize_stage(cfg, f).optimum.subset.mask;
  const fs::path img_path = out_path(cfg, "intensity_sim.csv");
  std::optional<ScalarField2D> img;
  if (fs::exists(img_path)) img = read_csv_grid(img_path);
  ValidateStage v = validate_stage(cfg, f, subset, img ? &*img : nullptr);
  write_validate_outputs(cfg, v);
  return v;
}

void cmd_run_all(const RunConfig& cfg) {
  const FieldStage f = field_stage(cfg);
  write_field_outputs(cfg, f);
  const OptimizeStage o = optimize_stage(cfg, f);
  write_optimize_outputs(cfg, o);
  const HologramStage h = hologram_stage(cfg, o.optimum.subset.mask);
  write_hologram_outputs(cfg, h);
  const ValidateStage v = validate_stage(cfg, f, o.optimum.subset.mask, &h.hologram.intensity);
  write_validate_outputs(cfg, v);
}

}  // namespace nvens::pipeline
