#include "shaken/lattice_model.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "shaken/errors.hpp"

namespace shaken {

using std::numbers::pi;

LatticeConfig build_config(double V0) {
  if (!(V0 > 0.0) || !std::isfinite(V0)) {
    throw InvalidParameter("lattice depth V0 must be positive, got " + std::to_string(V0));
  }
  LatticeConfig c;
  c.V0 = V0;
  c.k = 1.0 / std::sqrt(2.0 * V0);
  c.ell = pi / (2.0 * c.k);
  return c;
}

double simpson(const Eigen::Ref<const Eigen::ArrayXd>& f, double h) {
  const Eigen::Index n = f.size();
  if (n < 3 || n % 2 == 0) {
    throw InvalidParameter("simpson: need an odd number (>= 3) of samples");
  }
  double odd = 0.0, even = 0.0;
  for (Eigen::Index i = 1; i < n - 1; ++i) {
    (i % 2 ? odd : even) += f(i);
  }
  return h / 3.0 * (f(0) + f(n - 1) + 4.0 * odd + 2.0 * even);
}

namespace {

// Sine mode n (1-based) of the cell [-ell, ell], unit-normalised.
inline double sine_mode(int n, double x, double ell) {
  return std::sin(n * pi * (x + ell) / (2.0 * ell)) / std::sqrt(ell);
}

inline double sine_mode_dx(int n, double x, double ell) {
  const double q = n * pi / (2.0 * ell);
  return q * std::cos(q * (x + ell)) / std::sqrt(ell);
}

struct ParityBlock {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;  // coefficients over modes first_mode, first_mode+2, ...
  Eigen::VectorXd residuals;
};

// In the sine basis V0 sin^2(kx) = V0/2 (1 + cos 2 pi u) only couples modes
// n and n +- 2, so each parity sector is tridiagonal.
ParityBlock solve_parity_block(const LatticeConfig& c, int first_mode, int size, int wanted) {
  Eigen::VectorXd diag(size);
  Eigen::VectorXd sub = Eigen::VectorXd::Constant(size - 1, c.V0 / 4.0);
  for (int j = 0; j < size; ++j) {
    const int n = first_mode + 2 * j;
    const double q = n * pi / (2.0 * c.ell);
    diag(j) = 0.5 * q * q + 0.5 * c.V0;
  }
  if (first_mode == 1) diag(0) -= c.V0 / 4.0;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) {
    throw NumericalFailure("well eigensolver did not converge");
  }
  ParityBlock out;
  out.values = solver.eigenvalues().head(wanted);
  out.vectors = solver.eigenvectors().leftCols(wanted);
  out.residuals.resize(wanted);
  for (int w = 0; w < wanted; ++w) {
    const Eigen::VectorXd& v = out.vectors.col(w);
    Eigen::VectorXd hv = diag.cwiseProduct(v);
    hv.head(size - 1) += sub.cwiseProduct(v.tail(size - 1));
    hv.tail(size - 1) += sub.cwiseProduct(v.head(size - 1));
    out.residuals(w) = (hv - out.values(w) * v).norm() / v.norm();
  }
  return out;
}

}  // namespace

double WellSpectrum::evaluate(int level, double x) const {
  if (x < -ell || x > ell) return 0.0;
  const Eigen::VectorXd c = coefficients.col(level);
  double acc = 0.0;
  for (Eigen::Index n = 0; n < c.size(); ++n) {
    if (c(n) != 0.0) acc += c(n) * sine_mode(static_cast<int>(n) + 1, x, ell);
  }
  return acc;
}

Eigen::ArrayXd WellSpectrum::evaluate(int level, const Eigen::ArrayXd& xs) const {
  Eigen::ArrayXd out(xs.size());
  for (Eigen::Index i = 0; i < xs.size(); ++i) out(i) = evaluate(level, xs(i));
  return out;
}

double WellSpectrum::derivative(int level, double x) const {
  if (x < -ell || x > ell) return 0.0;
  const Eigen::VectorXd c = coefficients.col(level);
  double acc = 0.0;
  for (Eigen::Index n = 0; n < c.size(); ++n) {
    if (c(n) != 0.0) acc += c(n) * sine_mode_dx(static_cast<int>(n) + 1, x, ell);
  }
  return acc;
}

WellSpectrum solve_well_eigenstates(const LatticeConfig& config, int n_points) {
  if (n_points < 256) {
    throw InvalidParameter("solve_well_eigenstates: n_points must be >= 256");
  }
  if (!(config.V0 > 0.0)) throw InvalidParameter("solve_well_eigenstates: V0 must be positive");

  const int modes = n_points / 4;
  const int half = modes / 2;
  const ParityBlock even = solve_parity_block(config, 1, half, 2);  // Gamma_0, Gamma_2
  const ParityBlock odd = solve_parity_block(config, 2, half, 1);   // Gamma_1

  WellSpectrum s;
  s.ell = config.ell;
  s.coefficients = Eigen::MatrixXd::Zero(2 * half, 3);
  for (int j = 0; j < half; ++j) {
    s.coefficients(2 * j, 0) = even.vectors(j, 0);
    s.coefficients(2 * j + 1, 1) = odd.vectors(j, 0);
    s.coefficients(2 * j, 2) = even.vectors(j, 1);
  }
  s.energies << even.values(0), odd.values(0), even.values(1);
  s.residuals << even.residuals(0), odd.residuals(0), even.residuals(1);
  if (!(s.energies(0) < s.energies(1) && s.energies(1) < s.energies(2))) {
    throw NumericalFailure("well spectrum is not strictly ordered",
                           {s.energies(0), s.energies(1), s.energies(2)});
  }
  if (s.residuals.maxCoeff() > 1e-8) {
    throw NumericalFailure("well eigenpairs exceed residual tolerance",
                           {s.residuals(0), s.residuals(1), s.residuals(2)});
  }

  // Gamma_0(0) > 0, Gamma_1'(0) > 0, Gamma_2(0) < 0.
  if (s.evaluate(0, 0.0) < 0.0) s.coefficients.col(0) *= -1.0;
  if (s.derivative(1, 0.0) < 0.0) s.coefficients.col(1) *= -1.0;
  if (s.evaluate(2, 0.0) > 0.0) s.coefficients.col(2) *= -1.0;

  s.x = Eigen::VectorXd::LinSpaced(n_points + 1, -config.ell, config.ell);
  s.gamma_fns.resize(s.x.size(), 3);
  for (int level = 0; level < 3; ++level) {
    s.gamma_fns.col(level) = s.evaluate(level, s.x.array()).matrix();
  }
  return s;
}

void matrix_elements(WellSpectrum& s, const LatticeConfig& config) {
  const double h = s.x(1) - s.x(0);
  const Eigen::ArrayXd x = s.x.array();
  const Eigen::ArrayXd sinkx = (config.k * x).sin();
  const Eigen::ArrayXd g0 = s.gamma_fns.col(0).array();
  const Eigen::ArrayXd g1 = s.gamma_fns.col(1).array();
  const Eigen::ArrayXd g2 = s.gamma_fns.col(2).array();

  s.gamma1 = simpson(g0 * x * g1, h);
  s.sin01 = simpson(g0 * sinkx * g1, h);
  s.gamma2 = s.sin01 * s.sin01;
  s.d1_integral = simpson(g2 * x * g1, h);
  s.d2_integral = simpson(g2 * sinkx * g1, h);

  const Eigen::Vector3d& e = s.energies;
  s.omega00 = 2.0 * e(0);
  s.omega10 = e(1) + e(0);
  s.omega20 = e(2) + e(0);
  s.omega11 = 2.0 * s.omega10 - s.omega00;
  s.omega_d = s.omega10 - s.omega00;
}

WellSpectrum compute_spectrum(const LatticeConfig& config, int n_points) {
  WellSpectrum s = solve_well_eigenstates(config, n_points);
  matrix_elements(s, config);
  return s;
}

}  // namespace shaken
