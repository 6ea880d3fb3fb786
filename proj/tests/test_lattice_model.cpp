#include "doctest.h"

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "shaken/errors.hpp"
#include "shaken/lattice_model.hpp"

using namespace shaken;

TEST_CASE("build_config fixes k and ell from the depth") {
  const LatticeConfig c = build_config(3.0);
  CHECK(c.k == doctest::Approx(1.0 / std::sqrt(6.0)));
  CHECK(c.ell == doctest::Approx(std::numbers::pi / (2.0 * c.k)));
  CHECK_THROWS_AS(build_config(0.0), InvalidParameter);
  CHECK_THROWS_AS(build_config(-1.0), InvalidParameter);
}

TEST_CASE("well energies agree with the shooting oracle") {
  for (double V0 : {2.0, 3.0, 3.5}) {
    const WellSpectrum s = compute_spectrum(build_config(V0));
    for (int n = 0; n < 3; ++n) {
      const auto ref = oracle::shooting_state(V0, n);
      CHECK(std::abs(s.energies(n) - ref.energy) < 1e-7);
    }
  }
}

TEST_CASE("well states agree with the shooting oracle pointwise and in gamma_1") {
  const double V0 = 3.0;
  const WellSpectrum s = compute_spectrum(build_config(V0));
  const auto g0 = oracle::shooting_state(V0, 0);
  const auto g1 = oracle::shooting_state(V0, 1);
  const auto g2 = oracle::shooting_state(V0, 2);
  for (const auto* ref : {&g0, &g1, &g2}) {
    const int level = ref == &g0 ? 0 : ref == &g1 ? 1 : 2;
    const Eigen::ArrayXd mine = s.evaluate(level, ref->x);
    CHECK((mine - ref->psi).abs().maxCoeff() < 1e-5);
  }
  const double h = g0.x(1) - g0.x(0);
  const double gamma1 = simpson(g0.x * g0.psi * g1.psi, h);
  const double d1 = simpson(g2.x * g2.psi * g1.psi, h);
  CHECK(std::abs(s.gamma1 - gamma1) < 1e-6);
  CHECK(std::abs(s.d1_integral - d1) < 1e-6);
}

TEST_CASE("eigen residuals are small") {
  const WellSpectrum s = compute_spectrum(build_config(3.0));
  for (int n = 0; n < 3; ++n) CHECK(s.residuals(n) < 1e-8);
}

TEST_CASE("512 to 1024 points changes energies and gammas by < 1e-6") {
  const LatticeConfig c = build_config(3.0);
  const WellSpectrum a = compute_spectrum(c, 512);
  const WellSpectrum b = compute_spectrum(c, 1024);
  CHECK((a.energies - b.energies).cwiseAbs().maxCoeff() < 1e-6);
  CHECK(std::abs(a.gamma1 - b.gamma1) < 1e-6);
  CHECK(std::abs(a.gamma2 - b.gamma2) < 1e-6);
}

TEST_CASE("two-dimensional level table is separable") {
  const WellSpectrum s = compute_spectrum(build_config(3.0));
  CHECK(s.omega11 - (2.0 * s.omega10 - s.omega00) == 0.0);
  CHECK(s.omega_d == doctest::Approx(s.energies(1) - s.energies(0)));
}

TEST_CASE("omega_d grows with depth and stays below omega") {
  double previous = 0.0;
  for (double V0 : {2.0, 2.5, 3.0, 3.5}) {
    const double wd = compute_spectrum(build_config(V0)).omega_d;
    CHECK(wd > previous);
    CHECK(wd < 1.0);
    previous = wd;
  }
}

TEST_CASE("deep wells approach the harmonic oscillator") {
  const WellSpectrum s = compute_spectrum(build_config(30.0));
  CHECK(std::abs(s.omega_d - 1.0) < 0.02);
  CHECK(std::abs(s.gamma1 - oracle::kHarmonicGamma1) / oracle::kHarmonicGamma1 < 0.03);
  CHECK(std::abs(s.d1_integral - oracle::kHarmonicD1) < 0.05);
}

TEST_CASE("sign convention") {
  const WellSpectrum s = compute_spectrum(build_config(3.0));
  CHECK(s.evaluate(0, 0.0) > 0.0);
  CHECK(s.derivative(1, 0.0) > 0.0);
  CHECK(s.evaluate(2, 0.0) < 0.0);
  CHECK(s.gamma1 > 0.0);
  CHECK(s.evaluate(0, 2.0 * s.ell) == 0.0);
}

TEST_CASE("regression values at V0 = 3") {
  const WellSpectrum s = compute_spectrum(build_config(3.0));
  CHECK(s.omega_d == doctest::Approx(0.908571).epsilon(1e-5));
  CHECK(s.gamma1 == doctest::Approx(0.741263).epsilon(1e-5));
  CHECK(s.gamma2 == doctest::Approx(0.083135).epsilon(1e-5));
  CHECK(s.d1_integral == doctest::Approx(1.108063).epsilon(1e-5));
  CHECK(s.d2_integral == doctest::Approx(0.407543).epsilon(1e-5));
}

TEST_CASE("simpson integrates cubics exactly") {
  const Eigen::ArrayXd x = Eigen::ArrayXd::LinSpaced(11, 0.0, 1.0);
  CHECK(simpson(x.cube(), 0.1) == doctest::Approx(0.25).epsilon(1e-14));
}
