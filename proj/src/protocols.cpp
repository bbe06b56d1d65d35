#include "nvens/protocols.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <numbers>

#include "nvens/error.hpp"
#include "nvens/kernels.hpp"
#include "nvens/nv_photophysics.hpp"

namespace nvens::protocols {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// cos²ε below this counts as a pulse error of ±π/2 (cos(π/2) is not exactly zero in floating point).
constexpr double kMinCos2 = 1e-12;

void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) throw DomainError(std::string(name) + " must be positive and finite");
}

double sq(double x) { return x * x; }

}  // namespace

void RamseyParams::validate() const {
  require_positive(gamma_e, "gamma_e");
  require_positive(T2_star, "T2_star");
  require_positive(tau, "tau");
  require_positive(C, "C");
  require_positive(n_avg, "n_avg");
  if (!(p >= 1.0)) throw DomainError("dephasing exponent p must be >= 1");
  if (C > 1.0) throw DomainError("contrast C must be <= 1");
}

void EchoParams::validate() const {
  require_positive(gamma_e, "gamma_e");
  require_positive(T2_star, "T2_star");
  require_positive(T2, "T2");
  require_positive(tau, "tau");
  require_positive(C, "C");
  require_positive(n_avg, "n_avg");
  if (!(p >= 1.0)) throw DomainError("dephasing exponent p must be >= 1");
  if (C > 1.0) throw DomainError("contrast C must be <= 1");
  if (T2 < T2_star) throw DomainError("T2 must be >= T2_star");
}

double default_gamma_p_max() {
  const photophysics::RateModelParams r;
  return photophysics::excited_fraction_limit(r) * photophysics::saturation_pumping_rate(r) * 1e6;
}

double default_gamma_c_max() { return photophysics::saturation_pumping_rate(photophysics::RateModelParams{}) * 1e6; }

void CWParams::validate() const {
  require_positive(gamma_e, "gamma_e");
  require_positive(Gamma1, "Gamma1");
  require_positive(Gamma2_star, "Gamma2_star");
  require_positive(Gamma_p_max, "Gamma_p_max");
  require_positive(Gamma_c_max, "Gamma_c_max");
  require_positive(R_max, "R_max");
  require_positive(omega_center, "omega_center");
  if (!(a_over_b > 1.0)) throw DomainError("a_over_b must exceed 1");
}

PulseError pulse_error(double omega_local, double omega0) {
  if (!(omega0 > 0.0)) throw DomainError("omega0 must be positive");
  return {std::numbers::pi * (omega_local - omega0) / (2.0 * omega0)};
}

double ramsey_sensitivity(PulseError eps, const RamseyParams& p) {
  p.validate();
  const double c2 = sq(std::cos(eps.epsilon));
  if (!(c2 > kMinCos2) || !std::isfinite(eps.epsilon)) throw InfiniteSensitivity("Ramsey pulse error at +-pi/2");
  return std::exp(std::pow(p.tau / p.T2_star, p.p)) / (p.gamma_e * std::sqrt(p.tau) * p.C * std::sqrt(p.n_avg) * c2);
}

double echo_denominator(double eps, const EchoParams& p) {
  return std::fabs(0.5 * std::exp(-p.tau / (2.0 * p.T2_star)) * sq(std::sin(2.0 * eps)) -
                   2.0 * std::exp(-p.tau / p.T2) * sq(sq(std::cos(eps))));
}

double echo_sensitivity(PulseError eps, const EchoParams& p) {
  p.validate();
  if (!std::isfinite(eps.epsilon)) throw InfiniteSensitivity("non-finite pulse error");
  const double d = echo_denominator(eps.epsilon, p);
  const double d0 = 2.0 * std::exp(-p.tau / p.T2);
  if (!(d > 1e-12 * d0)) throw InfiniteSensitivity("spin-echo dead point");
  return std::numbers::pi / (p.gamma_e * std::sqrt(p.tau) * p.C * std::sqrt(p.n_avg) * d);
}

double echo_sensitivity_perfect_pi(PulseError eps, const EchoParams& p) {
  p.validate();
  const double c2 = sq(std::cos(eps.epsilon));
  if (!(c2 > kMinCos2) || !std::isfinite(eps.epsilon)) throw InfiniteSensitivity("pulse error at +-pi/2");
  return std::numbers::pi * std::exp(p.tau / p.T2) /
         (2.0 * p.gamma_e * std::sqrt(p.tau) * p.C * std::sqrt(p.n_avg) * c2);
}

double ramsey_signal(PulseError eps, double phase, double dB, const RamseyParams& p) {
  p.validate();
  const double a = p.a();
  const double b = p.b();
  const double e = eps.epsilon;
  return 0.5 * (a + b) + 0.5 * (a - b) * sq(std::sin(e)) -
         0.5 * (a - b) * std::exp(-std::pow(p.tau / p.T2_star, p.p)) * sq(std::cos(e)) *
             std::sin(p.gamma_e * dB * p.tau + phase);
}

double ramsey_signal_slope(PulseError eps, double phase, double dB, const RamseyParams& p) {
  p.validate();
  const double e = eps.epsilon;
  return -0.5 * (p.a() - p.b()) * std::exp(-std::pow(p.tau / p.T2_star, p.p)) * sq(std::cos(e)) * p.gamma_e * p.tau *
         std::cos(p.gamma_e * dB * p.tau + phase);
}

double echo_signal(PulseError eps, double dB, const EchoParams& p) {
  p.validate();
  const double a = p.a();
  const double b = p.b();
  const double e = eps.epsilon;
  const double phi0 = p.gamma_e * dB * p.tau / std::numbers::pi;
  return 0.5 * (a + b) - sq(std::sin(e)) * std::cos(2.0 * e) * 0.5 * (a - b) +
         0.25 * (a - b) * std::exp(-p.tau / (2.0 * p.T2_star)) * sq(std::sin(2.0 * e)) * (std::sin(phi0) - std::cos(phi0)) -
         0.5 * (a - b) * std::exp(-p.tau / p.T2) * sq(sq(std::cos(e))) * std::sin(2.0 * phi0);
}

double echo_signal_slope(PulseError eps, double dB, const EchoParams& p) {
  p.validate();
  const double ab = p.a() - p.b();
  const double e = eps.epsilon;
  const double k = p.gamma_e * p.tau / std::numbers::pi;
  const double phi0 = k * dB;
  return k * (0.25 * ab * std::exp(-p.tau / (2.0 * p.T2_star)) * sq(std::sin(2.0 * e)) * (std::cos(phi0) + std::sin(phi0)) -
              ab * std::exp(-p.tau / p.T2) * sq(sq(std::cos(e))) * std::cos(2.0 * phi0));
}

CWSteadyState cw_steady_state(double omega, double detuning, double s, const CWParams& p) {
  p.validate();
  if (!(s >= 0.0) || !std::isfinite(s)) throw DomainError("saturation parameter must be >= 0");
  if (!std::isfinite(omega) || !std::isfinite(detuning)) throw DomainError("non-finite drive");
  const double f = s / (1.0 + s);
  const double gp = p.Gamma_p_max * f;
  const double g2 = p.Gamma2_star + p.Gamma_c_max * f;
  const double g1 = p.Gamma1;

  // Unknowns (σ11, u, v) with σ01 = u + i v and σ00 = 1 − σ11:
  //   dσ11/dt = Γ1(1 − 2σ11) − Γp σ11 − Ω v
  //   du/dt   = −Γ2 u + Δ v
  //   dv/dt   = −Γ2 v − Δ u + (Ω/2)(2σ11 − 1)
  Eigen::Matrix3d m;
  m << -(2.0 * g1 + gp), 0.0, -omega, 0.0, -g2, detuning, omega, -detuning, -g2;
  const Eigen::Vector3d rhs(-g1, 0.0, 0.5 * omega);
  Eigen::FullPivLU<Eigen::Matrix3d> lu(m);
  if (!lu.isInvertible()) throw DomainError("singular CW stationary system");
  const Eigen::Vector3d x = lu.solve(rhs);

  CWSteadyState out;
  out.sigma11 = x(0);
  out.sigma00 = 1.0 - x(0);
  out.coherence = {x(1), x(2)};

  const double b = 1.0;
  const double a = p.a_over_b;
  const double s11_off = g1 / (2.0 * g1 + gp);
  const double big_a = 0.5 * omega * omega * g2;
  const double d = 2.0 * g1 + gp;
  const double dip = big_a * gp / (d * (d * g2 * g2 + 2.0 * big_a));
  const double s_off = a * (1.0 - s11_off) + b * s11_off;
  out.contrast = (a - b) * dip / s_off;
  out.linewidth_hz = 2.0 * std::sqrt(g2 * g2 + omega * omega * g2 / d) / (2.0 * std::numbers::pi);
  out.photon_rate = p.R_max * f;
  return out;
}

double cw_sensitivity(double omega, double s, const CWParams& p) {
  const CWSteadyState st = cw_steady_state(omega, 0.0, s, p);
  if (!(st.contrast > 0.0) || !(st.photon_rate > 0.0)) throw InfiniteSensitivity("zero CW contrast or photon rate");
  return kCWPrefactor * st.linewidth_hz / (p.gamma_e * st.contrast * std::sqrt(st.photon_rate));
}

SaturationOptimum optimal_saturation(double omega, const CWParams& p, double lo, double hi) {
  if (!(omega > 0.0)) throw DomainError("omega must be positive");
  if (!(hi > lo)) throw DomainError("empty saturation bracket");
  auto f = [&](double ls) { return cw_sensitivity(omega, std::pow(10.0, ls), p); };
  const double invphi = 0.5 * (std::sqrt(5.0) - 1.0);
  const double tol = std::log10(1.0 + 1e-3);
  double a = lo;
  double b = hi;
  double c = b - invphi * (b - a);
  double d = a + invphi * (b - a);
  double fc = f(c);
  double fd = f(d);
  while (b - a > tol) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = f(d);
    }
  }
  double x = 0.5 * (a + b);
  double fx = f(x);
  SaturationOptimum out{std::pow(10.0, x), fx, false};
  // A minimum pinned to the bracket edge is reported with the edge value.
  for (double edge : {lo, hi}) {
    if (std::fabs(x - edge) <= 2.0 * tol) {
      const double fe = f(edge);
      out = {std::pow(10.0, edge), std::min(fe, fx), true};
    }
  }
  return out;
}

Protocol parse_protocol(const std::string& name) {
  if (name == "ramsey") return Protocol::ramsey;
  if (name == "echo") return Protocol::echo;
  if (name == "cw") return Protocol::cw;
  throw ConfigError("unknown protocol '" + name + "' (expected ramsey|echo|cw)");
}

std::string to_string(Protocol p) {
  switch (p) {
    case Protocol::ramsey: return "ramsey";
    case Protocol::echo: return "echo";
    case Protocol::cw: return "cw";
  }
  return "?";
}

double local_sensitivity(double omega, double omega0, const ProtocolParams& params) {
  try {
    switch (params.protocol) {
      case Protocol::ramsey: return ramsey_sensitivity(pulse_error(omega, omega0), params.ramsey);
      case Protocol::echo: return echo_sensitivity(pulse_error(omega, omega0), params.echo);
      case Protocol::cw: {
        if (!(omega > 0.0)) return kInf;
        return optimal_saturation(params.cw.omega_center * omega / omega0, params.cw).eta;
      }
    }
  } catch (const InfiniteSensitivity&) {
    return kInf;
  }
  return kInf;
}

ScalarField2D sensitivity_map(const ScalarField2D& omega, const ProtocolParams& params, std::optional<double> omega0,
                              Exec exec) {
  const double ref = omega0.value_or(omega.center());
  if (!(ref > 0.0)) throw DomainError("reference Rabi frequency must be positive");
  switch (params.protocol) {
    case Protocol::ramsey: params.ramsey.validate(); break;
    case Protocol::echo: params.echo.validate(); break;
    case Protocol::cw: params.cw.validate(); break;
  }
  ScalarField2D out(omega.grid(), "T_per_sqrtHz");
  auto f = [&](double w) { return local_sensitivity(w, ref, params); };
  if (exec == Exec::serial)
    kernels::serial::transform(omega.values(), out.values(), f);
  else
    kernels::omp::transform(omega.values(), out.values(), f);
  return out;
}

}  // namespace nvens::protocols
