#include "doctest.h"

#include <cmath>
#include <numbers>

#include "shaken/errors.hpp"
#include "shaken/few_level.hpp"
#include "shaken/schemes.hpp"

using namespace shaken;

namespace {

double rwa_fidelity(const PulseSchedule& s) {
  const WellSpectrum spectrum = compute_spectrum(build_config(3.0));
  const LevelTrajectory traj = run_level_model(LevelModel::rwa4, s, spectrum, -spectrum.omega_d, 4);
  return populations_and_fidelity(traj.final_state()).fidelity;
}

}  // namespace

TEST_CASE("scheme names round-trip") {
  for (SchemeKind k : {SchemeKind::polynomial, SchemeKind::piecewise})
    CHECK(scheme_from_string(to_string(k)) == k);
  CHECK_THROWS_AS(scheme_from_string("sawtooth"), InvalidParameter);
}

TEST_CASE("polynomial W root is near -2.74 and excludes zero") {
  WRootReport report;
  const double w = solve_polynomial_w(10.0, 11.0, &report);
  CHECK(w >= -2.75);
  CHECK(w <= -2.73);
  CHECK(w == report.chosen);
  CHECK(std::abs(report.residual) < 1e-7);
  CHECK_FALSE(report.roots.empty());
}

TEST_CASE("boundary conditions hold for both schemes") {
  for (double T : {100.0, 500.0}) {
    CHECK(boundary_check(polynomial_scheme(T)).all_passed());
    CHECK(boundary_check(piecewise_scheme(T)).all_passed());
  }
}

TEST_CASE("piecewise pulse areas and supports") {
  const double T = 300.0, tS = 0.75 * T;
  const PulseSchedule s = piecewise_scheme(T);
  CHECK(std::abs(pulse_area(s, 0) - std::numbers::pi) < 1e-10);
  CHECK(std::abs(pulse_area(s, 1) - std::numbers::pi / 2) < 1e-10);
  CHECK(*s.switch_time == doctest::Approx(tS));
  for (double t : {0.1 * tS, 0.5 * tS, 0.99 * tS}) CHECK(s.at(t).omega_rho == 0.0);
  for (double t : {1.01 * tS, 0.9 * T}) CHECK(s.at(t).omega_x == 0.0);
  CHECK(s.at(0.5 * tS).omega_x > 0.0);
  CHECK(s.at(0.9 * T).omega_rho != 0.0);
}

TEST_CASE("couplings vanish outside [0, T]") {
  const PulseSchedule s = polynomial_scheme(100.0);
  CHECK(s.at(-1.0).omega_x == 0.0);
  CHECK(s.at(101.0).omega_rho == 0.0);
}

TEST_CASE("in-model transfer is exact for any T") {
  for (double T : {50.0, 200.0, 1000.0}) {
    CHECK(rwa_fidelity(polynomial_scheme(T)) >= 1.0 - 1e-6);
    CHECK(rwa_fidelity(piecewise_scheme(T)) >= 1.0 - 1e-6);
  }
}

TEST_CASE("doubling T halves the couplings at rescaled times") {
  const double T = 150.0;
  const double w = solve_polynomial_w();
  for (bool poly : {true, false}) {
    const PulseSchedule a = poly ? polynomial_scheme_with_w(T, w) : piecewise_scheme(T);
    const PulseSchedule b = poly ? polynomial_scheme_with_w(2 * T, w) : piecewise_scheme(2 * T);
    for (double s : {0.1, 0.3, 0.5, 0.7, 0.9}) {
      const double t = s * 2 * T;
      CHECK(b.at(t).omega_x == doctest::Approx(0.5 * a.at(t / 2).omega_x).epsilon(1e-10));
      CHECK(b.at(t).omega_rho == doctest::Approx(0.5 * a.at(t / 2).omega_rho).epsilon(1e-10));
    }
  }
}

TEST_CASE("analytic derivatives match finite differences") {
  for (const PulseSchedule& s : {polynomial_scheme(100.0), piecewise_scheme(100.0)})
    for (double t : {13.0, 42.0, 61.0, 88.0}) {
      const double h = 1e-4;
      const CouplingJet j = s.jet(t);
      const CouplingJet jp = s.jet(t + h), jm = s.jet(t - h);
      CHECK(j.omega_x(1) == doctest::Approx((jp.omega_x(0) - jm.omega_x(0)) / (2 * h)).epsilon(1e-6));
      CHECK(j.omega_x(2) == doctest::Approx((jp.omega_x(1) - jm.omega_x(1)) / (2 * h)).epsilon(1e-6));
      CHECK(j.omega_rho(1) ==
            doctest::Approx((jp.omega_rho(0) - jm.omega_rho(0)) / (2 * h)).epsilon(1e-6));
    }
}

TEST_CASE("transform_schedule keeps duration and applies the map") {
  const PulseSchedule base = polynomial_scheme(100.0);
  const PulseSchedule half = transform_schedule(base, [](double, const CouplingJet& j) {
    CouplingJet out = j;
    out.omega_x *= 0.5;
    return out;
  });
  CHECK(half.total_time() == 100.0);
  CHECK(half.at(30.0).omega_x == doctest::Approx(0.5 * base.at(30.0).omega_x));
  CHECK(half.at(30.0).omega_rho == doctest::Approx(base.at(30.0).omega_rho));
}

TEST_CASE("invalid schedule parameters") {
  CHECK_THROWS_AS(piecewise_scheme(100.0, 0.0), InvalidParameter);
  CHECK_THROWS_AS(piecewise_scheme(100.0, 120.0), InvalidParameter);
  CHECK_THROWS_AS(polynomial_scheme_with_w(-5.0, -2.7), InvalidParameter);
}
