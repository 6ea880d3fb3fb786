#include "doctest.h"

#include <cmath>
#include <memory>
#include <random>

#include "oracles.hpp"
#include "shaken/errors.hpp"
#include "shaken/few_level.hpp"
#include "shaken/invariant.hpp"
#include "shaken/schemes.hpp"

using namespace shaken;

namespace {

std::shared_ptr<const InvariantTrajectory> poly_traj(double T = 300.0) {
  return polynomial_scheme(T).trajectory;
}

}  // namespace

TEST_CASE("Q and constants") {
  InvariantConstants c;
  CHECK(c.Q() == doctest::Approx(std::sqrt(188.0)));
  CHECK_THROWS(InvariantConstants::make(1.0, -1.0, 1));
  CHECK_THROWS(InvariantConstants::make(10.0, 11.0, 0));
}

TEST_CASE("generators close under commutation") {
  // every commutator lies in the span of G_1..G_4 (no identity component)
  Eigen::MatrixXcd basis(16, 4);
  for (int i = 0; i < 4; ++i) basis.col(i) = generator(i + 1).reshaped();
  for (int a = 1; a <= 4; ++a)
    for (int b = 1; b <= 4; ++b) {
      const Eigen::VectorXcd c = commutator(generator(a), generator(b)).reshaped();
      const Eigen::VectorXcd coeffs = basis.colPivHouseholderQr().solve(c);
      CHECK((basis * coeffs - c).norm() < 1e-12);
    }
}

TEST_CASE("eigenvalues are constant and eigenvectors unit-norm") {
  auto traj = poly_traj();
  const double T = traj->total_time();
  const auto e0 = invariant_eigensystem(*traj, 0.0);
  const auto eT = invariant_eigensystem(*traj, T);
  CHECK((e0.kappas - eT.kappas).cwiseAbs().maxCoeff() < 1e-12);
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(0.0, T);
  double worst_norm = 0.0, worst_residual = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double t = u(rng);
    const auto e = invariant_eigensystem(*traj, t);
    const Eigen::Matrix4cd I = invariant_matrix(*traj, t);
    for (int n = 0; n < 4; ++n) {
      worst_norm = std::max(worst_norm, std::abs(e.phis.col(n).norm() - 1.0));
      worst_residual =
          std::max(worst_residual, (I * e.phis.col(n) - e.kappas(n) * e.phis.col(n)).norm());
    }
  }
  CHECK(worst_norm < 1e-12);
  CHECK(worst_residual < 1e-10);
}

TEST_CASE("invariant equation holds along both schedules") {
  for (const PulseSchedule& s : {polynomial_scheme(300.0), piecewise_scheme(300.0)})
    CHECK(verify_invariant(s, *s.trajectory, 1000) < 1e-8);
}

TEST_CASE("LR phase integrand matches the undivided quotient") {
  auto traj = poly_traj();
  const double T = traj->total_time();
  // the undivided form cancels near the ends, where alpha_2 approaches a band edge
  for (double s : {0.05, 0.2, 0.4, 0.5, 0.6, 0.8, 0.95})
    for (int sign : {+1, -1}) {
      const double mine = chi_integrand(*traj, s * T, sign);
      const double ref = oracle::raw_chi_integrand(*traj, s * T, sign);
      const double tol = s >= 0.2 && s <= 0.8 ? 1e-12 : 1e-6;
      CHECK(std::abs(mine - ref) <= tol * std::abs(ref));
    }
}

TEST_CASE("invariant superposition solves the Schrodinger equation") {
  const PulseSchedule schedule = polynomial_scheme(200.0);
  const LrPhases phases = lr_phases(schedule.trajectory);
  LevelState psi0{invariant_superposition(phases, 0.0), 0.0};
  EvolveOptions opt;
  opt.dt = 0.01;
  for (int i = 0; i <= 40; ++i) opt.sample_times.push_back(5.0 * i);
  const LevelTrajectory traj = evolve_levels(
      [&](double t) -> Eigen::MatrixXcd {
        const Couplings c = schedule.at(t);
        return invariant_hamiltonian(c.omega_x, c.omega_rho);
      },
      psi0, 200.0, opt);
  double worst = 0.0;
  for (const LevelState& s : traj.samples)
    worst = std::max(worst, (s.amplitudes - invariant_superposition(phases, s.time)).norm());
  CHECK(worst < 1e-5);
}

TEST_CASE("invariant superposition starts at |00> and ends on |->") {
  const LrPhases phases = lr_phases(poly_traj());
  const Eigen::Vector4cd start = invariant_superposition(phases, 0.0);
  CHECK(std::abs(start(level::k00)) == doctest::Approx(1.0).epsilon(1e-10));
  const Eigen::Vector4cd end = invariant_superposition(phases, 300.0);
  CHECK(std::norm(minus_state(4).dot(end)) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("complex alpha_3 is a domain error") {
  FunctionTrajectory bad(InvariantConstants{}, 10.0, [](double) {
    AlphaJet j;
    j.a1(0) = 100.0;  // far outside the allowed ellipse
    j.a2(0) = 5.0;
    return j;
  });
  CHECK_THROWS_AS(bad.validate(11), DomainError);
}
