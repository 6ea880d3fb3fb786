#include "doctest.h"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <limits>
#include <numbers>

#include "oracles.hpp"
#include "shaken/errors.hpp"
#include "shaken/grid.hpp"
#include "shaken/io.hpp"
#include "shaken/snapshot.hpp"

using namespace shaken;

namespace {

struct Setup {
  LatticeConfig config;
  WellSpectrum spectrum;
  explicit Setup(double V0) : config(build_config(V0)), spectrum(compute_spectrum(config)) {}
};

const Setup& setup3() {
  static const Setup s(3.0);
  return s;
}

PulseSchedule constant_schedule(double T, double omega_x, double omega_rho) {
  return PulseSchedule(SchemeKind::custom, T, [=](double) {
    CouplingJet j;
    j.omega_x(0) = omega_x;
    j.omega_rho(0) = omega_rho;
    return j;
  });
}

/// Gamma_a(x) Gamma_b(y) sampled on the grid.
Eigen::ArrayXXcd product_state(const GridSpec& spec, const WellSpectrum& s, int a, int b) {
  const Eigen::ArrayXd gx = s.evaluate(a, spec.x());
  const Eigen::ArrayXd gy = s.evaluate(b, spec.y());
  return (gx.matrix() * gy.matrix().transpose()).array().cast<cd>();
}

double overlap2(const GridState& a, const GridState& b) {
  return std::norm((a.psi.conjugate() * b.psi).sum() * a.spec.dx() * a.spec.dy());
}

}  // namespace

TEST_CASE("grid validation") {
  const auto& s = setup3();
  CHECK_THROWS_AS(make_grid(100, 64, 1, s.config), InvalidParameter);
  CHECK_THROWS_AS(make_grid(64, 64, 2, s.config), InvalidParameter);
  const GridSpec g = make_grid(64, 64, 3, s.config);
  CHECK(g.half_width_x() == doctest::Approx(3.0 * s.config.ell));
  CHECK(g.dx() <= s.config.ell / 10.0);
  CHECK(g.x()(0) == doctest::Approx(-g.half_width_x()));
}

TEST_CASE("static lattice potential and its interference term") {
  const auto& s = setup3();
  const GridSpec g = make_grid(64, 64, 1, s.config);
  const Eigen::ArrayXXd v = lattice_frame_potential(0.0, g, nullptr, s.config);
  const double k = s.config.k;
  const Eigen::ArrayXd x = g.x(), y = g.y();
  CHECK(v(5, 17) == doctest::Approx(3.0 * (std::pow(std::sin(k * x(5)), 2) +
                                           std::pow(std::sin(k * y(17)), 2))));

  // Omega_rho at its maximum gives rho = pi/2 and V_rho = 2 V0
  const double max_rho = 4.0 * s.config.V0 * s.spectrum.gamma2;
  const ControlSignals c =
      map_controls(constant_schedule(10.0, 0.0, max_rho), s.spectrum, s.config);
  CHECK(c.rho(5.0) == doctest::Approx(std::numbers::pi / 2));
  CHECK(c.v_rho(5.0) == doctest::Approx(2.0 * s.config.V0));
  // at kx = ky = pi/4 the interference term is V0
  const Eigen::ArrayXXd w = lattice_frame_potential(5.0, g, &c, s.config);
  CHECK(x(48) == doctest::Approx(s.config.ell / 2));
  CHECK(w(48, 48) - v(48, 48) == doctest::Approx(s.config.V0));

  // the term flips sign one lattice period (2 ell) away
  GridSpec wide = g;
  wide.nx = wide.ny = 96;  // 32 points per period
  wide.wells_x = wide.wells_y = 3;
  const Eigen::ArrayXXd a = lattice_frame_potential(5.0, wide, &c, s.config) -
                            lattice_frame_potential(0.0, wide, nullptr, s.config);
  for (int i : {3, 20, 50}) CHECK(a(i + 32, 40) == doctest::Approx(-a(i, 40)));
}

TEST_CASE("control mapping") {
  const auto& s = setup3();
  const ControlSignals none = map_controls(constant_schedule(10.0, 0.0, 0.0), s.spectrum, s.config);
  CHECK(none.r_x(3.3) == 0.0);
  CHECK(none.omega_x == doctest::Approx(-s.spectrum.omega_d));

  const double too_big = 1.5 * 4.0 * s.config.V0 * s.spectrum.gamma2;
  try {
    map_controls(constant_schedule(10.0, 0.0, too_big), s.spectrum, s.config);
    FAIL("expected ControlInfeasible");
  } catch (const ControlInfeasible& e) {
    CHECK(e.required_v0() == doctest::Approx(1.5 * s.config.V0));
  }

  for (const PulseSchedule& p : {polynomial_scheme(500.0), piecewise_scheme(500.0)}) {
    const ControlSignals c = map_controls(p, s.spectrum, s.config);
    CHECK(std::abs(c.r_x(0.0)) < 1e-12);
    CHECK(std::abs(c.r_x(500.0)) < 1e-12);
    CHECK(std::abs(c.r_x_dot(0.0)) < 1e-12);
    CHECK(std::abs(c.r_x_dot(500.0)) < 1e-12);
    const double h = 1e-3;
    for (double t : {77.0, 123.4, 260.0, 401.0}) {
      const double fd = (c.r_x(t + h) - 2 * c.r_x(t) + c.r_x(t - h)) / (h * h);
      CHECK(c.r_x_ddot(t) == doctest::Approx(fd).epsilon(1e-4).scale(1e-6));
      CHECK(c.r_x_dot(t) ==
            doctest::Approx((c.r_x(t + h) - c.r_x(t - h)) / (2 * h)).epsilon(1e-6).scale(1e-8));
    }
  }

  // shaking amplitude is a small fraction of the lattice constant
  const ControlSignals pw = map_controls(piecewise_scheme(500.0), s.spectrum, s.config);
  double max_r = 0.0;
  for (int i = 0; i <= 20000; ++i) max_r = std::max(max_r, std::abs(pw.r_x(500.0 * i / 20000)));
  CHECK(max_r / (2.0 * s.config.ell) <= 0.1);
}

TEST_CASE("periodic ground state matches the finite-difference oracle") {
  const auto& s = setup3();
  const GridSpec g = make_grid(64, 64, 1, s.config);
  const GroundStateResult gs = imaginary_time_ground_state(g, s.config);
  CHECK(gs.energy == doctest::Approx(2.0 * oracle::periodic_ground_energy(3.0)).epsilon(1e-5));
  CHECK(gs.state.norm() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(project_populations(gs.state, s.spectrum).P(0, 0) > 0.999);
  CHECK(static_energy(gs.state, s.config) == doctest::Approx(gs.energy).epsilon(1e-10));
}

TEST_CASE("deep-well ground energy is close to the harmonic zero point") {
  const LatticeConfig c = build_config(30.0);
  const GroundStateResult gs = imaginary_time_ground_state(make_grid(64, 64, 1, c), c);
  CHECK(gs.energy < 1.0);
  CHECK(gs.energy > 0.95);
  CHECK(gs.energy == doctest::Approx(2.0 * oracle::periodic_ground_energy(30.0)).epsilon(1e-5));
}

TEST_CASE("hard-wall grid reproduces the one-dimensional well energies") {
  const auto& s = setup3();
  const GridSpec g = make_grid(64, 64, 1, s.config, Boundary::dirichlet);
  const GroundStateResult gs = imaginary_time_ground_state(g, s.config);
  CHECK(std::abs(gs.energy - 2.0 * s.spectrum.energies(0)) < 1e-7);
}

TEST_CASE("ground state is stationary under zero controls") {
  const auto& s = setup3();
  const GridSpec g = make_grid(64, 64, 1, s.config);
  const GridState psi0 = imaginary_time_ground_state(g, s.config).state;
  const SplitStepReport run =
      split_step_evolve(psi0, zero_controls(20.0, s.spectrum, s.config), s.config, 20.0, 2.5e-3, {});
  CHECK(overlap2(psi0, run.final_state) > 1.0 - 1e-8);
  CHECK(run.final_state.time == doctest::Approx(20.0));
}

TEST_CASE("driven evolution conserves the norm and keeps P01 at zero without V_rho") {
  const auto& s = setup3();
  const GridSpec g = make_grid(64, 64, 1, s.config);
  const GridState psi0 = imaginary_time_ground_state(g, s.config).state;
  const PulseSchedule x_only = transform_schedule(polynomial_scheme(50.0), [](double, const CouplingJet& j) {
    CouplingJet out = j;
    out.omega_rho.setZero();
    return out;
  });
  std::vector<double> times;
  for (int i = 0; i <= 50; ++i) times.push_back(i);
  double max_p01 = 0.0, max_p10 = 0.0;
  const SplitStepReport run = split_step_evolve(
      psi0, map_controls(x_only, s.spectrum, s.config), s.config, 50.0, 2.5e-3, times,
      [&](const GridState& st) {
        const Populations p = project_populations(st, s.spectrum);
        max_p01 = std::max(max_p01, p.P(0, 1));
        max_p10 = std::max(max_p10, p.P(1, 0));
      });
  CHECK(run.max_norm_drift < 1e-9);
  CHECK(max_p01 < 1e-4);
  CHECK(max_p10 > 0.5);  // the x drive alone is a pi pulse
}

TEST_CASE("non-finite fields abort the evolution") {
  const auto& s = setup3();
  GridState bad{Eigen::ArrayXXcd::Constant(16, 16, cd(std::numeric_limits<double>::quiet_NaN())),
                make_grid(16, 16, 1, s.config), 0.0};
  CHECK_THROWS_AS(
      split_step_evolve(bad, zero_controls(1.0, s.spectrum, s.config), s.config, 1.0, 0.01, {}),
      NumericalFailure);
}

TEST_CASE("population projection of product states") {
  const auto& s = setup3();
  const GridSpec g = make_grid(128, 128, 1, s.config);
  GridState ground{product_state(g, s.spectrum, 0, 0), g, 0.0};
  const Populations p0 = project_populations(ground, s.spectrum);
  CHECK(p0.P(0, 0) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(p0.leakage == doctest::Approx(0.0).scale(1.0).epsilon(1e-6));

  const cd i(0.0, 1.0);
  GridState minus{(product_state(g, s.spectrum, 1, 0) - i * product_state(g, s.spectrum, 0, 1)) /
                      std::sqrt(2.0),
                  g, 0.0};
  const Populations pm = project_populations(minus, s.spectrum);
  CHECK(pm.P(1, 0) == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(pm.P(0, 1) == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(pm.fidelity == doctest::Approx(1.0).epsilon(1e-6));

  // anharmonic well states: L_z of the target is close to -1
  const AngularMomentum lz = angular_momentum(minus);
  CHECK(lz.lz < -0.9);
  CHECK(lz.lz > -1.1);
  CHECK_FALSE(lz.warning);
}

TEST_CASE("angular momentum of real and vortex states") {
  const LatticeConfig c = build_config(30.0);
  const GridSpec g = make_grid(64, 64, 1, c);
  const Eigen::ArrayXd x = g.x(), y = g.y();
  GridState real{Eigen::ArrayXXcd(64, 64), g, 0.0};
  GridState vortex = real;
  for (int j = 0; j < 64; ++j)
    for (int i = 0; i < 64; ++i) {
      const double gauss = std::exp(-0.5 * (x(i) * x(i) + y(j) * y(j)));
      real.psi(i, j) = (1.0 + x(i)) * gauss;
      vortex.psi(i, j) = cd(x(i), -y(j)) * gauss;  // harmonic (|10> - i|01>)
    }
  CHECK(std::abs(angular_momentum(real).lz) < 1e-12);
  CHECK(angular_momentum(vortex).lz == doctest::Approx(-1.0).epsilon(1e-9));

  GridState empty = vortex;
  empty.psi *= 1e-3;
  CHECK(angular_momentum(empty).warning.has_value());
}

TEST_CASE("checkerboard rule") {
  std::vector<WellReport> wells;
  for (int iy = -1; iy <= 1; ++iy)
    for (int ix = -1; ix <= 1; ++ix) wells.push_back({ix, iy, 1.0, 1.0, (ix + iy) % 2 ? 1.0 : -1.0});
  CHECK(checkerboard_signs(wells));
  wells[4].lz = 1.0;
  CHECK_FALSE(checkerboard_signs(wells));
  CHECK_FALSE(checkerboard_signs({}));
}

TEST_CASE("spectral shift translates band-limited fields") {
  const auto& s = setup3();
  const GridSpec g = make_grid(32, 32, 1, s.config);
  Eigen::ArrayXXcd f(32, 32);
  const Eigen::ArrayXd x = g.x(), y = g.y();
  const double kk = std::numbers::pi / g.half_width_x();
  for (int j = 0; j < 32; ++j)
    for (int i = 0; i < 32; ++i) f(i, j) = std::cos(kk * x(i)) + cd(0, 1) * std::sin(2 * kk * y(j));
  const Eigen::ArrayXXcd full = spectral_shift(f, g, 2 * g.half_width_x(), 0.0);
  CHECK((full - f).abs().maxCoeff() < 1e-12);
  const Eigen::ArrayXXcd one = spectral_shift(f, g, g.dx(), 0.0);
  for (int i = 1; i < 32; ++i) CHECK(std::abs(one(i, 7) - f(i - 1, 7)) < 1e-12);
}

TEST_CASE("localized state stays put in a static 3x3 lattice") {
  const auto& s = setup3();
  const MultiWellResult r = multi_well_run(zero_controls(300.0, s.spectrum, s.config), s.spectrum,
                                           s.config, InitialMode::localized, 64, 3, 2.5e-3);
  CHECK(r.leakage < 1e-4);
  CHECK(r.wells.size() == 9);
}

TEST_CASE("snapshot round trip and byte layout") {
  const auto& s = setup3();
  const GridSpec g = make_grid(16, 8, 1, s.config);
  GridState st{Eigen::ArrayXXcd::Random(16, 8), g, 12.5};
  const auto dir = std::filesystem::temp_directory_path() / "shaken_snapshot_test";
  std::filesystem::remove_all(dir);
  const auto path = dir / "field.bin";
  write_snapshot(path, st, R"({"scheme": "polynomial"})");

  const std::string bytes = read_file(path);
  REQUIRE(bytes.size() == kSnapshotHeaderBytes + 16 * 16 * 8);
  CHECK(bytes.substr(0, 4) == "SHKL");
  CHECK(static_cast<unsigned char>(bytes[4]) == 16);
  CHECK(static_cast<unsigned char>(bytes[8]) == 8);
  double second_re;
  std::memcpy(&second_re, bytes.data() + 32 + 16, 8);
  CHECK(second_re == st.psi(1, 0).real());  // x runs fastest

  const SnapshotHeader h = read_snapshot_header(path);
  CHECK(h.nx == 16);
  CHECK(h.ny == 8);
  CHECK(h.half_width_x == g.half_width_x());
  CHECK(h.time == 12.5);
  const GridState back = read_snapshot(path);
  CHECK((back.psi - st.psi).abs().maxCoeff() == 0.0);

  const std::string sidecar = read_file(dir / "field.bin.json");
  CHECK(sidecar.find("\"scheme\": \"polynomial\"") != std::string::npos);
  CHECK(sidecar.find("\"half_width_y\"") != std::string::npos);
  CHECK_FALSE(std::filesystem::exists(dir / "field.bin.tmp"));
  std::filesystem::remove_all(dir);
}
