#include "nvens/holography.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include "nvens/error.hpp"
#include "nvens/format.hpp"
#include "nvens/rng.hpp"

namespace nvens::holography {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap_phase(double phi) {
  double p = std::fmod(phi, kTwoPi);
  if (p < 0.0) p += kTwoPi;
  if (p >= kTwoPi) p = 0.0;
  return p;
}

IterationMetrics metrics(std::span<const complex> image, const Mask& mask) {
  double sum = 0.0;
  double sum2 = 0.0;
  double total = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < image.size(); ++i) {
    const double v = std::norm(image[i]);
    total += v;
    if (!mask[i]) continue;
    sum += v;
    sum2 += v * v;
    ++n;
  }
  IterationMetrics out;
  if (n == 0 || sum == 0.0) return out;
  const double mean = sum / static_cast<double>(n);
  out.nonuniformity = std::sqrt(std::max(0.0, sum2 / static_cast<double>(n) - mean * mean)) / mean;
  out.efficiency = total > 0.0 ? sum / total : 0.0;
  return out;
}

void slm_field(const HologramPlan& plan, const ScalarField2D* aberration, std::span<complex> out) {
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double phi = plan.phase[i] + (aberration ? (*aberration)[i] : 0.0);
    out[i] = std::polar(plan.beam[i], phi);
  }
}

}  // namespace

ComplexField2D::ComplexField2D(GridSpec grid, complex fill) : grid_(grid), values_(grid.size(), fill) {}

double ComplexField2D::power() const {
  double p = 0.0;
  for (const complex& z : values_) p += std::norm(z);
  return p;
}

struct Propagator::Impl {
  fftw_complex* buf = nullptr;
  fftw_plan fwd = nullptr;
  fftw_plan inv = nullptr;
};

Propagator::Propagator(const GridSpec& grid) : grid_(grid), impl_(std::make_unique<Impl>()) {
  grid.validate();
  impl_->buf = fftw_alloc_complex(grid.size());
  if (!impl_->buf) throw Error("FFTW allocation failed");
  impl_->fwd = fftw_plan_dft_2d(grid.ny, grid.nx, impl_->buf, impl_->buf, FFTW_FORWARD, FFTW_ESTIMATE);
  impl_->inv = fftw_plan_dft_2d(grid.ny, grid.nx, impl_->buf, impl_->buf, FFTW_BACKWARD, FFTW_ESTIMATE);
  if (!impl_->fwd || !impl_->inv) throw Error("FFTW planning failed");
}

Propagator::~Propagator() {
  if (impl_->fwd) fftw_destroy_plan(impl_->fwd);
  if (impl_->inv) fftw_destroy_plan(impl_->inv);
  if (impl_->buf) fftw_free(impl_->buf);
}

void Propagator::run(std::span<const complex> in, std::span<complex> out, Direction dir) {
  const int nx = grid_.nx;
  const int ny = grid_.ny;
  if (in.size() != grid_.size() || out.size() != grid_.size()) throw DomainError("propagator size mismatch");
  const int hx = nx / 2;
  const int hy = ny / 2;
  auto* buf = reinterpret_cast<complex*>(impl_->buf);
  // ifftshift in, transform, fftshift out.
  for (int r = 0; r < ny; ++r) {
    const int sr = (r + hy) % ny;
    for (int c = 0; c < nx; ++c) buf[grid_.index(r, c)] = in[grid_.index(sr, (c + hx) % nx)];
  }
  fftw_execute(dir == Direction::forward ? impl_->fwd : impl_->inv);
  const double scale = 1.0 / std::sqrt(static_cast<double>(grid_.size()));
  for (int r = 0; r < ny; ++r) {
    const int sr = (r + ny - hy) % ny;
    for (int c = 0; c < nx; ++c) out[grid_.index(r, c)] = scale * buf[grid_.index(sr, (c + nx - hx) % nx)];
  }
}

ComplexField2D propagate(const ComplexField2D& field, Direction direction) {
  Propagator p(field.grid());
  ComplexField2D out(field.grid());
  p.run(field.values(), out.values(), direction);
  return out;
}

ScalarField2D gaussian_beam(const GridSpec& grid, double waist_px) {
  if (!(waist_px > 0.0)) throw DomainError("beam waist must be positive");
  ScalarField2D b(grid, "amplitude");
  double p = 0.0;
  for (int r = 0; r < grid.ny; ++r)
    for (int c = 0; c < grid.nx; ++c) {
      const double dr = r - grid.center_row();
      const double dc = c - grid.center_col();
      const double v = std::exp(-(dr * dr + dc * dc) / (waist_px * waist_px));
      b.at(r, c) = v;
      p += v * v;
    }
  const double k = 1.0 / std::sqrt(p);
  for (double& v : b.values()) v *= k;
  return b;
}

double defocus_curvature(double target_radius_px, double waist_px, int n) {
  if (!(waist_px > 0.0) || n <= 0) throw DomainError("invalid beam or grid for defocus");
  // A beam exp(−r²/w²)·exp(iκr²) images to a Gaussian of 1/e² radius sqrt(R_dl² + (κNw/π)²).
  const double r_dl = n / (std::numbers::pi * waist_px);
  if (target_radius_px <= r_dl) return 0.0;
  return std::numbers::pi * std::sqrt(target_radius_px * target_radius_px - r_dl * r_dl) / (n * waist_px);
}

double bounding_radius(const Mask& target) {
  const GridSpec& g = target.grid();
  double r2 = -1.0;
  for (int r = 0; r < g.ny; ++r)
    for (int c = 0; c < g.nx; ++c) {
      if (!target.at(r, c)) continue;
      const double dr = r - g.center_row();
      const double dc = c - g.center_col();
      r2 = std::max(r2, dr * dr + dc * dc);
    }
  if (r2 < 0.0) throw DomainError("target mask is empty");
  return std::sqrt(r2);
}

ScalarField2D initial_phase(const Mask& target, double waist_px) {
  const GridSpec& g = target.grid();
  if (g.nx != g.ny) throw DomainError("holography needs a square grid");
  ScalarField2D phase(g, "rad");
  if (target.count() <= 1) return phase;
  const double kappa = defocus_curvature(bounding_radius(target), waist_px, g.nx);
  for (int r = 0; r < g.ny; ++r)
    for (int c = 0; c < g.nx; ++c) {
      const double dr = r - g.center_row();
      const double dc = c - g.center_col();
      phase.at(r, c) = wrap_phase(kappa * (dr * dr + dc * dc));
    }
  return phase;
}

MrafSolver::MrafSolver(HologramPlan& plan)
    : plan_(plan), prop_(plan.phase.grid()), slm_(plan.phase.size()), image_(plan.phase.size()) {
  const GridSpec& g = plan.phase.grid();
  if (!(plan.beam.grid() == g) || !(plan.target.grid() == g) || !(plan.signal.grid() == g) ||
      !(plan.noise.grid() == g) || !(plan.target_mask.grid() == g))
    throw DomainError("hologram plan grids differ");
  if (!(plan.m > 0.0) || plan.m > 1.0) throw DomainError("mixing parameter m must lie in (0, 1]");
  if (!(plan.signal & plan.noise).empty()) throw DomainError("signal and noise regions overlap");
  double t = 0.0;
  for (std::size_t i = 0; i < plan.target.size(); ++i)
    if (plan.signal[i]) t += plan.target[i] * plan.target[i];
  if (!(t > 0.0)) throw DomainError("target amplitude is zero");
  refresh();
}

void MrafSolver::refresh() {
  slm_field(plan_, nullptr, slm_);
  prop_.run(slm_, image_, Direction::forward);
}

IterationMetrics MrafSolver::step() {
  const double m = plan_.m;
  double p_in = 0.0;
  double p_t = 0.0;
  double p_nr = 0.0;
  for (std::size_t i = 0; i < image_.size(); ++i) {
    p_in += plan_.beam[i] * plan_.beam[i];
    if (plan_.signal[i]) p_t += plan_.target[i] * plan_.target[i];
    if (plan_.noise[i]) p_nr += std::norm(image_[i]);
  }
  if (!(p_t > 0.0)) throw DomainError("target amplitude is zero");
  // Signal region carries m² of the input power with the target shape; the noise region
  // keeps its computed shape with (1−m)² of the power. Then the whole image is rescaled to
  // the input power. m = 1 with a full-grid signal region is a Gerchberg–Saxton step.
  const double k_sr = m * std::sqrt(p_in / p_t);
  const double k_nr = p_nr > 0.0 ? (1.0 - m) * std::sqrt(p_in / p_nr) : 0.0;
  double p_new = 0.0;
  for (std::size_t i = 0; i < image_.size(); ++i) {
    double amp = 0.0;
    if (plan_.signal[i])
      amp = k_sr * plan_.target[i];
    else if (plan_.noise[i])
      amp = k_nr * std::abs(image_[i]);
    const double ph = image_[i] == complex{} ? 0.0 : std::arg(image_[i]);
    image_[i] = std::polar(amp, ph);
    p_new += amp * amp;
  }
  if (p_new > 0.0) {
    const double k = std::sqrt(p_in / p_new);
    for (complex& z : image_) z *= k;
  }
  prop_.run(image_, slm_, Direction::inverse);
  for (std::size_t i = 0; i < slm_.size(); ++i) {
    const double ph = slm_[i] == complex{} ? 0.0 : std::arg(slm_[i]);
    plan_.phase[i] = wrap_phase(ph);
  }
  refresh();
  return metrics(image_, plan_.target_mask);
}

ScalarField2D MrafSolver::intensity() const {
  ScalarField2D out(plan_.phase.grid(), "intensity");
  for (std::size_t i = 0; i < image_.size(); ++i) out[i] = std::norm(image_[i]);
  return out;
}

IterationMetrics mraf_step(HologramPlan& plan) {
  MrafSolver s(plan);
  return s.step();
}

SynthesisResult synthesize(const Mask& target, const SynthesisConfig& cfg) {
  const GridSpec& g = target.grid();
  if (g.nx != g.ny) throw DomainError("holography needs a square grid");
  if (target.empty()) throw DomainError("target mask is empty");
  if (cfg.iterations < 0) throw DomainError("iteration count must be >= 0");
  SynthesisResult res;
  HologramPlan& plan = res.plan;
  plan.m = cfg.m;
  plan.beam = gaussian_beam(g, cfg.beam_waist_px);
  plan.target_mask = target;
  plan.target = target.to_field();
  plan.target.set_unit("amplitude");
  plan.signal = cfg.guard_px > 0.0 ? dilate(target, cfg.guard_px) : target;
  plan.noise = ~plan.signal;
  plan.phase = initial_phase(target, cfg.beam_waist_px);
  MrafSolver solver(plan);
  res.log.reserve(static_cast<std::size_t>(cfg.iterations));
  for (int k = 0; k < cfg.iterations; ++k) res.log.push_back(solver.step());
  res.final_metrics = res.log.empty() ? IterationMetrics{nonuniformity(solver.intensity(), target),
                                                         power_efficiency(solver.intensity(), target)}
                                      : res.log.back();
  return res;
}

double nonuniformity(const ScalarField2D& intensity, const Mask& mask) {
  if (!(mask.grid() == intensity.grid())) throw DomainError("mask grid differs from intensity grid");
  double sum = 0.0;
  double sum2 = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < intensity.size(); ++i) {
    if (!mask[i]) continue;
    sum += intensity[i];
    sum2 += intensity[i] * intensity[i];
    ++n;
  }
  if (n == 0) throw DomainError("non-uniformity mask is empty");
  const double mean = sum / static_cast<double>(n);
  if (mean == 0.0) throw DomainError("zero mean intensity on mask");
  return std::sqrt(std::max(0.0, sum2 / static_cast<double>(n) - mean * mean)) / mean;
}

double power_efficiency(const ScalarField2D& intensity, const Mask& mask) {
  if (!(mask.grid() == intensity.grid())) throw DomainError("mask grid differs from intensity grid");
  double in = 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < intensity.size(); ++i) {
    total += intensity[i];
    if (mask[i]) in += intensity[i];
  }
  if (!(total > 0.0)) throw DomainError("total power is zero");
  return in / total;
}

ScalarField2D simulate_intensity(const HologramPlan& plan, const ScalarField2D* aberration) {
  const GridSpec& g = plan.phase.grid();
  if (aberration && !(aberration->grid() == g)) throw DomainError("aberration grid differs from SLM grid");
  std::vector<complex> slm(g.size());
  std::vector<complex> img(g.size());
  slm_field(plan, aberration, slm);
  Propagator p(g);
  p.run(slm, img, Direction::forward);
  ScalarField2D out(g, "intensity");
  for (std::size_t i = 0; i < img.size(); ++i) out[i] = std::norm(img[i]);
  return out;
}

ScalarField2D aberration_screen(const GridSpec& grid, std::uint64_t seed, double rms_rad, int order) {
  if (!(rms_rad >= 0.0) || order < 2) throw DomainError("aberration needs rms >= 0 and order >= 2");
  auto eng = rng::make_stream(seed, 0xab);
  struct Term {
    int i, j;
    double c;
  };
  std::vector<Term> terms;
  // Piston and tilt are left out: they only shift the image.
  for (int total = 2; total <= order; ++total)
    for (int i = 0; i <= total; ++i) terms.push_back({i, total - i, rng::normal(eng)});
  ScalarField2D s(grid, "rad");
  double sum = 0.0;
  double sum2 = 0.0;
  for (int r = 0; r < grid.ny; ++r)
    for (int c = 0; c < grid.nx; ++c) {
      const double u = 2.0 * (c + 0.5) / grid.nx - 1.0;
      const double v = 1.0 - 2.0 * (r + 0.5) / grid.ny;
      double val = 0.0;
      for (const Term& t : terms) val += t.c * std::pow(u, t.i) * std::pow(v, t.j);
      s.at(r, c) = val;
      sum += val;
      sum2 += val * val;
    }
  const double n = static_cast<double>(grid.size());
  const double mean = sum / n;
  const double sd = std::sqrt(std::max(0.0, sum2 / n - mean * mean));
  const double k = sd > 0.0 ? rms_rad / sd : 0.0;
  for (double& v : s.values()) v = (v - mean) * k;
  return s;
}

FeedbackResult camera_feedback(const HologramPlan& plan, const ScalarField2D& aberration, const FeedbackConfig& cfg) {
  if (!(aberration.grid() == plan.phase.grid())) throw DomainError("aberration grid differs from SLM grid");
  if (cfg.iterations < 0 || cfg.mraf_steps < 0) throw DomainError("feedback iteration counts must be >= 0");
  if (!(cfg.clamp_lo > 0.0) || !(cfg.clamp_hi >= cfg.clamp_lo)) throw DomainError("invalid feedback clamp");
  FeedbackResult res{plan, {}, {}};
  HologramPlan& p = res.plan;
  const Mask& mask = p.target_mask;
  auto camera = [&] {
    ScalarField2D i = simulate_intensity(p, &aberration);
    return std::pair{i, IterationMetrics{nonuniformity(i, mask), power_efficiency(i, mask)}};
  };
  auto [img, m0] = camera();
  res.initial = m0;
  MrafSolver solver(p);
  res.log.reserve(static_cast<std::size_t>(cfg.iterations));
  for (int k = 0; k < cfg.iterations; ++k) {
    double mean = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < img.size(); ++i)
      if (mask[i]) {
        mean += img[i];
        ++n;
      }
    mean /= static_cast<double>(n);
    for (std::size_t i = 0; i < img.size(); ++i) {
      if (!mask[i]) continue;
      const double f = img[i] > 0.0 ? std::pow(mean / img[i], cfg.gain) : cfg.clamp_hi;
      p.target[i] *= std::clamp(f, cfg.clamp_lo, cfg.clamp_hi);
    }
    solver.refresh();
    for (int s = 0; s < cfg.mraf_steps; ++s) solver.step();
    auto [next, mk] = camera();
    img = std::move(next);
    res.log.push_back(mk);
  }
  return res;
}

SubsetHologram hologram_for_subset(const Mask& subset, const OpticsConfig& optics, std::uint64_t seed) {
  if (subset.empty()) throw DomainError("subset mask is empty");
  const GridSpec slm{1.0, 1.0, optics.slm_pixels, optics.slm_pixels};
  const Mask target = resample_nearest(subset, slm, optics.map_fraction);
  if (target.empty()) throw DomainError("subset vanishes after resampling to the SLM grid");
  SubsetHologram out;
  out.synthesis = synthesize(target, optics.synthesis);
  const ScalarField2D ab = aberration_screen(slm, seed, optics.aberration_rms_rad);
  out.feedback = camera_feedback(out.synthesis.plan, ab, optics.feedback);
  out.intensity = simulate_intensity(out.feedback.plan, &ab);
  return out;
}

void write_iteration_log(const IterationLog& log, const std::filesystem::path& path) {
  std::ofstream f(path);
  if (!f) throw Error("cannot write " + path.string());
  f << "iter,nonuniformity,efficiency\n";
  for (std::size_t k = 0; k < log.size(); ++k)
    f << k + 1 << ',' << fmt_double(log[k].nonuniformity) << ',' << fmt_double(log[k].efficiency) << '\n';
  if (!f) throw Error("write failed: " + path.string());
}

}  // namespace nvens::holography
