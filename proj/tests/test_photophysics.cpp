#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "nvens/error.hpp"
#include "nvens/nv_photophysics.hpp"

using namespace nvens;
using namespace nvens::photophysics;

namespace {

Eigen::Matrix<double, 5, 5> rate_matrix(const RateModelParams& p) {
  Eigen::Matrix<double, 5, 5> m;
  m << -p.R, 0, p.gamma, 0, p.D0,        //
      0, -p.R, 0, p.gamma, p.D1,         //
      p.R, 0, -(p.gamma + p.S0), 0, 0,   //
      0, p.R, 0, -(p.gamma + p.S1), 0,   //
      0, 0, p.S0, p.S1, -(p.D0 + p.D1);
  return m;
}

PopulationState in_state(int level) {
  PopulationState s;
  s.N = {0, 0, 0, 0, 0};
  s.N[static_cast<std::size_t>(level)] = 1.0;
  return s;
}

}  // namespace

TEST_SUITE("photophysics") {
  TEST_CASE("no drive keeps the ground state") {
    RateModelParams p;
    p.R = 0.0;
    const auto traj = evolve_populations(in_state(0), p, 2.0, 1e-3);
    for (const auto& s : traj) {
      CHECK(s.N[0] == 1.0);
      CHECK(s.excited() == 0.0);
    }
    const StationaryPopulations st = steady_state_populations(p);
    CHECK(st.degenerate);
  }

  TEST_CASE("closed-form steady state equals the null space of the rate matrix") {
    for (double r : {0.5, 10.0, 27.3845, 41.07, 300.0}) {
      RateModelParams p;
      p.R = r;
      const StationaryPopulations st = steady_state_populations(p);
      CHECK_FALSE(st.degenerate);
      // Replace one balance row by the normalisation condition.
      Eigen::Matrix<double, 5, 5> a = rate_matrix(p);
      a.row(4).setOnes();
      Eigen::Matrix<double, 5, 1> rhs = Eigen::Matrix<double, 5, 1>::Zero();
      rhs(4) = 1.0;
      const Eigen::Matrix<double, 5, 1> x = a.fullPivLu().solve(rhs);
      for (int i = 0; i < 5; ++i) CHECK(st.state.N[static_cast<std::size_t>(i)] == doctest::Approx(x(i)).epsilon(1e-10));
      CHECK(st.state.sum() == doctest::Approx(1.0).epsilon(1e-15));
    }
  }

  TEST_CASE("trajectories conserve population and converge") {
    RateModelParams p;
    const StationaryPopulations st = steady_state_populations(p);
    for (int level : {0, 1, 4}) {
      const auto traj = evolve_populations(in_state(level), p, 20.0, 1e-3);
      for (const auto& s : traj) {
        CHECK(std::fabs(s.sum() - 1.0) <= 1e-9 * std::max(1.0, s.time_us));
        for (double v : s.N) {
          CHECK(v >= -1e-6);
          CHECK(v <= 1.0 + 1e-6);
        }
      }
      for (std::size_t i = 0; i < 5; ++i) CHECK(std::fabs(traj.back().N[i] - st.state.N[i]) < 1e-6);
    }
  }

  TEST_CASE("fourth-order step halving") {
    const RateModelParams p;
    const auto a = evolve_populations(in_state(0), p, 0.3, 1e-3).back();
    const auto b = evolve_populations(in_state(0), p, 0.3, 5e-4).back();
    const auto c = evolve_populations(in_state(0), p, 0.3, 2e-3).back();
    double dab = 0.0, dca = 0.0;
    for (std::size_t i = 0; i < 5; ++i) {
      dab = std::max(dab, std::fabs(a.N[i] - b.N[i]));
      dca = std::max(dca, std::fabs(c.N[i] - a.N[i]));
    }
    CHECK(dab < 1e-8);
    // Error ratio of about 16 for a fourth-order scheme.
    CHECK(dca / dab == doctest::Approx(16.0).epsilon(0.1));
  }

  TEST_CASE("unstable step is reported") {
    const RateModelParams p;
    CHECK_THROWS_AS(evolve_populations(in_state(0), p, 1.0, 0.05), DomainError);
  }

  TEST_CASE("saturation rate and excited fraction") {
    const RateModelParams p;
    CHECK(saturation_pumping_rate(p) == doctest::Approx(27.384).epsilon(1e-3 / 27.384));
    CHECK(excited_fraction_limit(p) == doctest::Approx(0.3381).epsilon(1e-4 / 0.3381));
    CHECK(p.R == doctest::Approx(1.5 * saturation_pumping_rate(p)).epsilon(1e-3));
    RateModelParams q = p;
    for (double* v : {&q.R, &q.gamma, &q.S0, &q.S1, &q.D0, &q.D1}) *v *= 3.0;
    CHECK(saturation_pumping_rate(q) == doctest::Approx(3.0 * saturation_pumping_rate(p)).epsilon(1e-14));
    for (double ratio : {0.1, 0.5, 1.0, 1.5, 4.0, 50.0}) {
      RateModelParams r = p;
      r.R = ratio * saturation_pumping_rate(p);
      const double pe = excited_fraction_limit(p);
      CHECK(steady_state_populations(r).state.excited() == doctest::Approx(pe * ratio / (1.0 + ratio)).epsilon(1e-12));
    }
  }

  TEST_CASE("spin-dependent photon yield") {
    const RateModelParams p;
    const Readout ro = readout(p, ReadoutWindow{});
    CHECK(ro.n0 > ro.n1);
    CHECK(ro.contrast() > 0.0);
    CHECK(ro.n_avg() == doctest::Approx(0.5 * (ro.n0 + ro.n1)));
    // Short windows: n ≈ γ R t²/2 from the ms=0 ground state.
    for (double t : {1e-3, 2e-3, 4e-3}) {
      const double n = mean_photons(SpinState::ms0, p, ReadoutWindow{t, t / 100});
      CHECK(n == doctest::Approx(0.5 * p.gamma * p.R * t * t).epsilon(0.05));
    }
    double prev = 0.0;
    for (int k = 1; k <= 20; ++k) {
      const double n = mean_photons(SpinState::ms1, p, ReadoutWindow{0.05 * k, 1e-3});
      CHECK(n >= prev);
      prev = n;
    }
  }

  TEST_CASE("illumination penalty") {
    PenaltyConfig cfg;
    const protocols::RamseyParams ramsey;
    const std::vector<double> target(2000, 1.5);
    CHECK(illumination_penalty(target, target, cfg, ramsey).loss_db == 0.0);

    double prev = -1.0;
    for (double sd : {0.1, 0.2, 0.328, 0.5}) {
      const std::vector<double> i = gaussian_intensity(2000, 1.5, sd, 7);
      const PenaltyResult r = illumination_penalty(i, target, cfg, ramsey);
      CHECK(r.loss_db >= prev);
      CHECK(r.loss_db < 1.0);
      CHECK(r.nonuniformity == doctest::Approx(sd).epsilon(0.1));
      prev = r.loss_db;
    }
    const std::vector<double> i = gaussian_intensity(500, 1.5, 0.3, 3);
    const std::vector<double> t(500, 1.4);
    const PenaltyResult a = illumination_penalty(i, t, cfg, ramsey, {}, Exec::serial);
    const PenaltyResult b = illumination_penalty(i, t, cfg, ramsey, {}, Exec::parallel);
    CHECK(a.loss_db == b.loss_db);
    std::vector<double> z = i;
    z[4] = 0.0;
    CHECK(illumination_penalty(z, t, cfg, ramsey).excluded == 1);
    CHECK_THROWS_AS(illumination_penalty(std::vector<double>{1.0}, t, cfg, ramsey), DomainError);
  }

  TEST_CASE("gaussian intensity is positive and reproducible") {
    const auto a = gaussian_intensity(10000, 1.5, 0.8, 11);
    const auto b = gaussian_intensity(10000, 1.5, 0.8, 11);
    CHECK(a == b);
    for (double v : a) CHECK(v > 0.0);
  }
}
