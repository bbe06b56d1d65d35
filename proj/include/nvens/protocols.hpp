#pragma once

#include <complex>
#include <optional>

#include "nvens/exec.hpp"
#include "nvens/field.hpp"

namespace nvens::protocols {

inline constexpr double kGammaE = 2.0 * 3.14159265358979323846 * 28.024e9;  // rad s^-1 T^-1

struct PulseError {
  double epsilon = 0.0;
};

/// Ramsey interrogation. `n_avg` is the mean photon number per readout (one readout per τ).
struct RamseyParams {
  double gamma_e = kGammaE;
  double T2_star = 1e-6;
  double p = 1.0;
  double tau = 0.5e-6;
  double C = 0.02;
  double n_avg = 1e4;

  void validate() const;
  // Bright/dark fluorescence levels a = n(1+C), b = n(1−C).
  double a() const { return n_avg * (1.0 + C); }
  double b() const { return n_avg * (1.0 - C); }
};

struct EchoParams {
  double gamma_e = kGammaE;
  double T2_star = 1e-6;
  double T2 = 10e-6;
  double p = 1.0;
  double tau = 5e-6;
  double C = 0.02;
  double n_avg = 1e4;

  void validate() const;
  double a() const { return n_avg * (1.0 + C); }
  double b() const { return n_avg * (1.0 - C); }
};

// Default optical rates follow the five-level model: Γp_max = P_e·R_sat, Γc_max = R_sat.
double default_gamma_p_max();
double default_gamma_c_max();

/// CW-ODMR rates (s^-1). `omega_center` is the Rabi frequency (rad/s) that the reference
/// value Ω0 of a sensitivity map corresponds to.
struct CWParams {
  double gamma_e = kGammaE;
  double Gamma1 = 1e3;
  double Gamma2_star = 2.0 * 3.14159265358979323846 * 1e6;
  double Gamma_p_max = default_gamma_p_max();
  double Gamma_c_max = default_gamma_c_max();
  double R_max = 1e6;
  double a_over_b = 1.4;
  double omega_center = 2.0 * 3.14159265358979323846 * 0.25e6;

  void validate() const;
};

struct CWSteadyState {
  double sigma00 = 1.0;
  double sigma11 = 0.0;
  std::complex<double> coherence;
  double contrast = 0.0;     // on-resonance fluorescence dip C_CW
  double linewidth_hz = 0.0; // FWHM Δν of σ11(Δ)
  double photon_rate = 0.0;  // R(s)
};

PulseError pulse_error(double omega_local, double omega0);

double ramsey_sensitivity(PulseError eps, const RamseyParams& params);
double echo_sensitivity(PulseError eps, const EchoParams& params);
double echo_sensitivity_perfect_pi(PulseError eps, const EchoParams& params);

/// Denominator |½e^{−τ/2T2*}sin²2ε − 2e^{−τ/T2}cos⁴ε| of the echo sensitivity.
double echo_denominator(double eps, const EchoParams& params);

double ramsey_signal(PulseError eps, double phase, double dB, const RamseyParams& params);
double ramsey_signal_slope(PulseError eps, double phase, double dB, const RamseyParams& params);
double echo_signal(PulseError eps, double dB, const EchoParams& params);
double echo_signal_slope(PulseError eps, double dB, const EchoParams& params);

inline constexpr double kCWPrefactor = 8.0 * 3.14159265358979323846 / (3.0 * 1.7320508075688772);

/// Stationary solution of the driven two-level Bloch equations with optical pumping.
CWSteadyState cw_steady_state(double omega, double detuning, double s, const CWParams& params);
double cw_sensitivity(double omega, double s, const CWParams& params);

struct SaturationOptimum {
  double s = 0.0;
  double eta = 0.0;
  bool at_boundary = false;
};

/// Golden-section search over log10 s in [lo, hi].
SaturationOptimum optimal_saturation(double omega, const CWParams& params, double log10_lo = -3.0,
                                     double log10_hi = 3.0);

enum class Protocol { ramsey, echo, cw };

Protocol parse_protocol(const std::string& name);
std::string to_string(Protocol p);

struct ProtocolParams {
  Protocol protocol = Protocol::ramsey;
  RamseyParams ramsey;
  EchoParams echo;
  CWParams cw;
};

/// Per-sensor sensitivity at Rabi frequency `omega` (same units as `omega0`); +∞ where the
/// sensor is excluded.
double local_sensitivity(double omega, double omega0, const ProtocolParams& params);

/// η(x) for every pixel of an Ω map. Ω0 defaults to the centre pixel. Excluded pixels hold +∞.
ScalarField2D sensitivity_map(const ScalarField2D& omega, const ProtocolParams& params,
                              std::optional<double> omega0 = std::nullopt, Exec exec = Exec::parallel);

}  // namespace nvens::protocols
