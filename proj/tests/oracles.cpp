#include "oracles.hpp"

#include <cmath>
#include <numbers>

namespace oracle {

namespace {

struct Shot {
  Eigen::ArrayXd psi;
  int crossings = 0;
};

Shot shoot(double V0, double E, int steps) {
  const double k = 1.0 / std::sqrt(2.0 * V0);
  const double ell = std::numbers::pi / (2.0 * k);
  const double h = 2.0 * ell / steps;
  auto accel = [&](double x, double u) {
    const double s = std::sin(k * x);
    return 2.0 * (V0 * s * s - E) * u;
  };
  Shot shot;
  shot.psi.resize(steps + 1);
  double x = -ell, u = 0.0, v = 1.0;
  shot.psi(0) = u;
  for (int i = 0; i < steps; ++i) {
    const double k1u = v, k1v = accel(x, u);
    const double k2u = v + 0.5 * h * k1v, k2v = accel(x + 0.5 * h, u + 0.5 * h * k1u);
    const double k3u = v + 0.5 * h * k2v, k3v = accel(x + 0.5 * h, u + 0.5 * h * k2u);
    const double k4u = v + h * k3v, k4v = accel(x + h, u + h * k3u);
    u += h / 6.0 * (k1u + 2 * k2u + 2 * k3u + k4u);
    v += h / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v);
    x += h;
    shot.psi(i + 1) = u;
    if (i > 0 && (shot.psi(i) > 0) != (u > 0)) ++shot.crossings;
  }
  return shot;
}

}  // namespace

ShootingState shooting_state(double V0, int level, int steps) {
  double lo = 0.0, hi = 2.0 * V0 + 20.0;
  for (int it = 0; it < 200 && hi - lo > 1e-13; ++it) {
    const double mid = 0.5 * (lo + hi);
    (shoot(V0, mid, steps).crossings > level ? hi : lo) = mid;
  }
  const double k = 1.0 / std::sqrt(2.0 * V0);
  const double ell = std::numbers::pi / (2.0 * k);
  ShootingState out;
  out.energy = 0.5 * (lo + hi);
  out.x = Eigen::ArrayXd::LinSpaced(steps + 1, -ell, ell);
  out.psi = shoot(V0, out.energy, steps).psi;
  out.psi(steps) = 0.0;
  const double h = 2.0 * ell / steps;
  out.psi /= std::sqrt(out.psi.square().sum() * h);
  // Library convention: Gamma_0(0) > 0, Gamma_1'(0) > 0, Gamma_2(0) < 0.
  const int mid = steps / 2;
  const double probe = level == 1 ? out.psi(mid + 1) - out.psi(mid - 1) : out.psi(mid);
  if ((level == 2) == (probe > 0)) out.psi = -out.psi;
  return out;
}

double periodic_ground_energy(double V0, int n) {
  auto fd = [&](int m) {
    const double k = 1.0 / std::sqrt(2.0 * V0);
    const double L = std::numbers::pi / k;
    const double h = L / m;
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i) {
      const double s = std::sin(k * (-0.5 * L + i * h));
      H(i, i) = 1.0 / (h * h) + V0 * s * s;
      H(i, (i + 1) % m) += -0.5 / (h * h);
      H(i, (i + m - 1) % m) += -0.5 / (h * h);
    }
    return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(H, Eigen::EigenvaluesOnly)
        .eigenvalues()(0);
  };
  return (4.0 * fd(n) - fd(n / 2)) / 3.0;
}

double raw_chi_integrand(const shaken::InvariantTrajectory& traj, double t, int sign) {
  const auto& c = traj.constants();
  const double Q = std::sqrt(c.C1 * c.C1 + 8.0 * c.C2);
  const shaken::AlphaJet j = traj.alphas(t);
  const double a1 = j.a1(0), a2 = j.a2(0), a2dot = j.a2(1);
  const double s = sign > 0 ? 1.0 : -1.0;
  const double bracket = c.C1 * c.C1 + 4.0 * c.C2 + s * c.C1 * Q -
                         2.0 * s * (s * c.C1 + Q) * a2 + 2.0 * a2 * a2;
  const double denom = std::pow(c.C1 + s * Q - 2.0 * a2, 3) * c.xi *
                       std::sqrt(2.0 * c.C2 + (c.C1 - a2) * a2 - a1 * a1);
  return 2.0 * a1 * bracket * a2dot / denom;
}

double rabi_p10(double omega, double t) {
  const double s = std::sin(0.5 * omega * t);
  return s * s;
}

}  // namespace oracle
