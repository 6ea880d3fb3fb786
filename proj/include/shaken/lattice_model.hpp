#pragma once

#include <Eigen/Dense>

namespace shaken {

/// Dimensionless lattice setup. Units: hbar = m = omega = 1, so V0 is in
/// units of hbar*omega, lengths in sqrt(hbar/(m*omega)), times in 1/omega.
struct LatticeConfig {
  double V0 = 3.0;
  double k = 0.0;    ///< lattice wavenumber, k = 1/sqrt(2 V0)
  double ell = 0.0;  ///< half lattice period, pi/(2k)
  double omega = 1.0;
  double hbar = 1.0;
  double mass = 1.0;
};

/// Builds the config for a given depth with the trap frequency pinned to 1.
LatticeConfig build_config(double V0);

/// Lowest three states of a single lattice site, restricted to [-ell, ell]
/// with Dirichlet walls, plus the matrix elements used by the level models.
///
/// States are expanded in the Dirichlet sine basis of the cell, in which
/// V0 sin^2(kx) is an exact band matrix; `coefficients` holds that expansion,
/// `gamma_fns` the states sampled on `x`.
struct WellSpectrum {
  double ell = 0.0;
  Eigen::VectorXd x;          ///< sample nodes over [-ell, ell], inclusive
  Eigen::MatrixXd gamma_fns;  ///< x.size() x 3, columns Gamma_0..Gamma_2
  Eigen::MatrixXd coefficients;
  Eigen::Vector3d energies = Eigen::Vector3d::Zero();
  Eigen::Vector3d residuals = Eigen::Vector3d::Zero();

  // two-dimensional level frequencies, E_ij = E_i + E_j
  double omega00 = 0.0;
  double omega10 = 0.0;
  double omega11 = 0.0;
  double omega20 = 0.0;
  double omega_d = 0.0;

  double gamma1 = 0.0;       ///< <0|x|1>
  double sin01 = 0.0;        ///< <0|sin kx|1>
  double gamma2 = 0.0;       ///< sin01^2
  double d1_integral = 0.0;  ///< <2|x|1>
  double d2_integral = 0.0;  ///< <2|sin kx|1>

  /// Gamma_level at position x relative to the well centre; zero outside the cell.
  double evaluate(int level, double x) const;
  Eigen::ArrayXd evaluate(int level, const Eigen::ArrayXd& x) const;
  /// d Gamma_level / dx.
  double derivative(int level, double x) const;
};

/// Solves the single-well problem; n_points sets both the sample grid and the
/// size of the sine basis (n_points / 4 modes).
WellSpectrum solve_well_eigenstates(const LatticeConfig& config, int n_points = 1024);

/// Fills the gamma/delta integrals and the omega_ij table.
void matrix_elements(WellSpectrum& spectrum, const LatticeConfig& config);

/// solve_well_eigenstates followed by matrix_elements.
WellSpectrum compute_spectrum(const LatticeConfig& config, int n_points = 1024);

/// Composite Simpson rule over uniformly spaced samples (odd count).
double simpson(const Eigen::Ref<const Eigen::ArrayXd>& f, double h);

}  // namespace shaken
