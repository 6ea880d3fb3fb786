#include "doctest.h"

#include <cmath>
#include <sstream>

#include "oracles.hpp"
#include "shaken/errors.hpp"
#include "shaken/few_level.hpp"

using namespace shaken;

namespace {

const WellSpectrum& spectrum3() {
  static const WellSpectrum s = compute_spectrum(build_config(3.0));
  return s;
}

double final_fidelity(LevelModel m, const PulseSchedule& s, double detuning = 0.0) {
  const auto& sp = spectrum3();
  return populations_and_fidelity(run_level_model(m, s, sp, -sp.omega_d + detuning, 4).final_state())
      .fidelity;
}

}  // namespace

TEST_CASE("basis states") {
  CHECK(ground_level_state(6).amplitudes.size() == 6);
  CHECK(ground_level_state(4).amplitudes(level::k00) == cd(1.0));
  const Eigen::VectorXcd m = minus_state(4);
  CHECK(m(level::k10).real() == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK(m(level::k01).imag() == doctest::Approx(-1.0 / std::sqrt(2.0)));
  CHECK(std::abs(plus_state(4).dot(m)) < 1e-15);
}

TEST_CASE("Hamiltonians are Hermitian") {
  const PulseSchedule s = polynomial_scheme(100.0);
  const auto& sp = spectrum3();
  for (double t : {5.0, 37.0, 80.0}) {
    const Eigen::Matrix4cd a = h4l_rwa(0.3, -0.2, 0.1);
    CHECK((a - a.adjoint()).norm() < 1e-15);
    const Eigen::Matrix4cd b = h4l_detuned(t, s, sp, -sp.omega_d + 0.01);
    CHECK((b - b.adjoint()).norm() < 1e-14);
    const Matrix6cd c = h6l(t, s, sp, -sp.omega_d);
    CHECK((c - c.adjoint()).norm() < 1e-14);
  }
}

TEST_CASE("six-level matrix contains the detuned four-level block") {
  const PulseSchedule s = polynomial_scheme(100.0);
  const auto& sp = spectrum3();
  for (double d : {-0.02, 0.0, 0.015})
    for (double t : {3.0, 51.0}) {
      const Matrix6cd six = h6l(t, s, sp, -sp.omega_d + d);
      const Eigen::Matrix4cd four = h4l_detuned(t, s, sp, -sp.omega_d + d);
      CHECK((six.topLeftCorner<4, 4>() - four).norm() < 1e-14);
    }
}

TEST_CASE("constant drive gives Rabi oscillation") {
  const double omega = 0.2;
  EvolveOptions opt;
  opt.dt = 0.01;
  for (int i = 0; i <= 60; ++i) opt.sample_times.push_back(i);
  const auto traj = evolve_levels([&](double) -> Eigen::MatrixXcd { return h4l_rwa(omega, 0.0); },
                                  ground_level_state(4), 60.0, opt);
  for (const LevelState& s : traj.samples)
    CHECK(std::abs(std::norm(s.amplitudes(level::k10)) - oracle::rabi_p10(omega, s.time)) < 1e-8);
}

TEST_CASE("norm drift stays below 1e-9 for all three models") {
  const PulseSchedule s = piecewise_scheme(100.0);
  const auto& sp = spectrum3();
  for (LevelModel m : {LevelModel::rwa4, LevelModel::detuned4, LevelModel::six}) {
    const auto traj = run_level_model(m, s, sp, -sp.omega_d, 20);
    CHECK(traj.max_norm_drift < 1e-9);
    for (const auto& sample : traj.samples)
      CHECK(std::abs(sample.amplitudes.norm() - 1.0) < 1e-9);
  }
}

TEST_CASE("piecewise scheme never populates |11> in the RWA model") {
  const auto& sp = spectrum3();
  const auto traj = run_level_model(LevelModel::rwa4, piecewise_scheme(300.0), sp, -sp.omega_d, 300);
  double worst = 0.0;
  for (const auto& s : traj.samples) worst = std::max(worst, std::norm(s.amplitudes(level::k11)));
  CHECK(worst < 1e-6);
}

TEST_CASE("detuned model approaches the RWA value as T grows") {
  for (bool poly : {true, false}) {
    const auto s100 = poly ? polynomial_scheme(100.0) : piecewise_scheme(100.0);
    const auto s500 = poly ? polynomial_scheme(500.0) : piecewise_scheme(500.0);
    const double d100 = std::abs(final_fidelity(LevelModel::detuned4, s100) -
                                 final_fidelity(LevelModel::rwa4, s100));
    const double d500 = std::abs(final_fidelity(LevelModel::detuned4, s500) -
                                 final_fidelity(LevelModel::rwa4, s500));
    CHECK(d100 < 0.05);
    CHECK(d500 < 0.01);
    CHECK(d500 <= d100);
  }
}

TEST_CASE("time-reversed controls return to |00>") {
  const PulseSchedule s = polynomial_scheme(100.0);
  auto forward = [&](double t) -> Eigen::MatrixXcd {
    const Couplings c = s.at(t);
    return h4l_rwa(c.omega_x, c.omega_rho);
  };
  EvolveOptions opt;
  opt.dt = 0.01;
  const LevelState mid = evolve_levels(forward, ground_level_state(4), 100.0, opt).final_state();
  // -H(T - t) generates U(T)^-1.
  const LevelState back = evolve_levels(
      [&](double t) -> Eigen::MatrixXcd { return -forward(100.0 - t); }, {mid.amplitudes, 0.0},
      100.0, opt).final_state();
  CHECK(std::norm(back.amplitudes(level::k00)) >= 1.0 - 1e-6);
}

TEST_CASE("six-level resonance peak sits at negative detuning, four-level at zero") {
  const PulseSchedule s = polynomial_scheme(300.0);
  const double f0 = final_fidelity(LevelModel::six, s, 0.0);
  const double fm = final_fidelity(LevelModel::six, s, -0.0025);
  const double fp = final_fidelity(LevelModel::six, s, 0.0025);
  CHECK(fm > f0);
  CHECK(f0 > fp);
  const double g0 = final_fidelity(LevelModel::detuned4, s, 0.0);
  CHECK(g0 > final_fidelity(LevelModel::detuned4, s, 0.0025));
  CHECK(g0 > final_fidelity(LevelModel::detuned4, s, -0.0025));
}

TEST_CASE("trajectory CSV columns") {
  const auto& sp = spectrum3();
  std::ostringstream four, six;
  write_trajectory_csv(four, run_level_model(LevelModel::rwa4, piecewise_scheme(50.0), sp, -sp.omega_d, 5));
  write_trajectory_csv(six, run_level_model(LevelModel::six, piecewise_scheme(50.0), sp, -sp.omega_d, 5));
  CHECK(four.str().rfind("t,P10,P00,P01,P11,fidelity\n", 0) == 0);
  CHECK(six.str().rfind("t,P10,P00,P01,P11,P20,P02,fidelity\n", 0) == 0);
}

TEST_CASE("bad inputs") {
  EvolveOptions opt;
  opt.dt = 0.0;
  auto h = [](double) -> Eigen::MatrixXcd { return h4l_rwa(0.1, 0.0); };
  CHECK_THROWS_AS(evolve_levels(h, ground_level_state(4), 1.0, opt), InvalidParameter);
  opt.dt = 0.01;
  LevelState unnormalized{Eigen::VectorXcd::Constant(4, 1.0), 0.0};
  CHECK_THROWS_AS(evolve_levels(h, unnormalized, 1.0, opt), InvalidParameter);
}
