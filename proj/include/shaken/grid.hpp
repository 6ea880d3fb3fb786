#pragma once

#include <array>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "shaken/lattice_model.hpp"
#include "shaken/schemes.hpp"

namespace shaken {

enum class Boundary { periodic, dirichlet };

/// Box covering wells_x by wells_y lattice periods, centred on a well
/// minimum: [-wells_x ell, wells_x ell] x [-wells_y ell, wells_y ell].
/// Periodic grids sample x_i = -W + i dx; Dirichlet grids put hard walls at
/// +-W and sample the cell midpoints x_i = -W + (i + 1/2) dx.
struct GridSpec {
  int nx = 128;
  int ny = 128;
  int wells_x = 1;
  int wells_y = 1;
  double ell = 0.0;
  Boundary boundary = Boundary::periodic;

  double half_width_x() const { return wells_x * ell; }
  double half_width_y() const { return wells_y * ell; }
  double dx() const { return 2.0 * half_width_x() / nx; }
  double dy() const { return 2.0 * half_width_y() / ny; }
  Eigen::ArrayXd x() const;
  Eigen::ArrayXd y() const;
  /// Angular wavenumbers in transform order (FFT order, or the sine modes
  /// m pi / 2W, m = 1..n, for Dirichlet grids).
  Eigen::ArrayXd kx() const;
  Eigen::ArrayXd ky() const;
};

/// Validates sizes (powers of two, odd well counts) and fills ell.
GridSpec make_grid(int nx, int ny, int wells, const LatticeConfig& config,
                   Boundary boundary = Boundary::periodic);

/// psi(i, j) is the value at (x_i, y_j); column-major storage, so x runs fastest.
struct GridState {
  Eigen::ArrayXXcd psi;
  GridSpec spec;
  double time = 0.0;

  double norm() const;
};

/// Lab controls realising a pulse schedule on the lattice.
struct ControlSignals {
  PulseSchedule schedule;
  double omega_x = 0.0;  ///< carrier angular frequency
  double omega_d = 0.0;
  double gamma1 = 0.0;
  double gamma2 = 0.0;
  double V0 = 0.0;

  /// r_x(t) = -Omega_x(t) cos(omega_x t) / (omega_d^2 gamma1).
  double r_x(double t) const;
  double r_x_dot(double t) const;
  /// Exact second derivative including the envelope terms.
  double r_x_ddot(double t) const;
  /// Envelope g_x = Omega_x / (omega_d^2 gamma1).
  double g_x(double t) const;
  double rho(double t) const;
  /// V_rho = 2 V0 sin(rho) = Omega_rho / (2 gamma2).
  double v_rho(double t) const;
};

/// Throws ControlInfeasible if |Omega_rho / (4 V0 gamma2)| exceeds 1 anywhere.
ControlSignals map_controls(const PulseSchedule& schedule, const WellSpectrum& spectrum,
                            const LatticeConfig& config, std::optional<double> omega_x = {});

/// Controls that keep the lattice static for the given duration.
ControlSignals zero_controls(double total_time, const WellSpectrum& spectrum,
                             const LatticeConfig& config);

/// V0 sin^2(kx) + V0 sin^2(ky) + r_x''(t) x + V_rho(t) sin(kx) sin(ky).
Eigen::ArrayXXd lattice_frame_potential(double t, const GridSpec& spec,
                                        const ControlSignals* controls,
                                        const LatticeConfig& config);

struct ImaginaryTimeOptions {
  std::vector<double> dtau_stages{0.05, 0.01, 0.002};
  int check_every = 50;
  int max_iterations = 200000;
  double tolerance = 1e-10;
};

struct GroundStateResult {
  GridState state;
  double energy = 0.0;
  int iterations = 0;
  std::vector<double> energy_history;
};

/// Ground state of the static lattice on the whole domain. On multi-well
/// domains this is the state delocalised over every well.
GroundStateResult imaginary_time_ground_state(const GridSpec& spec, const LatticeConfig& config,
                                              const ImaginaryTimeOptions& options = {});

/// Ground state confined to the well at (xc, yc) by a super-Gaussian window
/// of half-width 0.9 ell applied after every imaginary-time step.
GroundStateResult windowed_ground_state(const GridSpec& spec, const LatticeConfig& config,
                                        double xc, double yc,
                                        const ImaginaryTimeOptions& options = {});

/// Windowed ground state followed by unwindowed imaginary-time evolution for
/// a time tau. The second stage damps the higher-band admixture the window
/// leaves behind (by exp(-gap tau)) while the lowest-band content, whose
/// energy spread is set by tunnelling, is barely touched, so the result is
/// close to the lowest-band Wannier state of the well.
GridState localized_ground_state(const GridSpec& spec, const LatticeConfig& config, double xc,
                                 double yc, double tau = 20.0, double dtau = 0.01);

/// <psi|H|psi> / <psi|psi> for the static lattice.
double static_energy(const GridState& state, const LatticeConfig& config);

using GridObserver = std::function<void(const GridState&)>;

struct SplitStepReport {
  std::vector<GridState> samples;
  GridState final_state;
  long steps = 0;
  double dt = 0.0;
  double max_norm_drift = 0.0;
};

/// Strang-split evolution to T with the potential taken at each step
/// midpoint. The step is shrunk so it divides T. The observer sees the state
/// at every sample time; copies are kept only when keep_samples is set.
SplitStepReport split_step_evolve(const GridState& initial, const ControlSignals& controls,
                                  const LatticeConfig& config, double T, double dt,
                                  const std::vector<double>& sample_times,
                                  const GridObserver& observer = {}, bool keep_samples = false);

struct Populations {
  /// p(i, j) = |<Gamma_i(x) Gamma_j(y)|psi>|^2 for i, j in {0, 1, 2}
  Eigen::Matrix3d p = Eigen::Matrix3d::Zero();
  std::complex<double> c10, c01;
  double leakage = 0.0;   ///< 1 - sum over i, j in {0, 1}
  double fidelity = 0.0;  ///< |<-|psi>|^2
  double P(int i, int j) const { return p(i, j); }
};

/// Overlaps with the well states of the cell centred at (xc, yc).
Populations project_populations(const GridState& state, const WellSpectrum& spectrum,
                                double xc = 0.0, double yc = 0.0);

struct AngularMomentum {
  double lz = 0.0;
  double window_norm = 0.0;
  std::optional<std::string> warning;
};

/// <L_z> about (xc, yc) over the cell [xc - ell, xc + ell) x [yc - ell, yc + ell),
/// normalised by the cell population; derivatives are spectral.
AngularMomentum angular_momentum(const GridState& state, double xc = 0.0, double yc = 0.0);

/// Probability inside the cell centred at (xc, yc).
double cell_population(const GridState& state, double xc, double yc);

/// |psi| arg(psi) with the global phase rotated so the branch cut through
/// the well at (xc, yc) runs horizontally (phase zero just right of centre).
Eigen::ArrayXXd phase_map(const GridState& state, double xc = 0.0, double yc = 0.0);

/// Band-limited translation of a periodic field by (sx, sy).
Eigen::ArrayXXcd spectral_shift(const Eigen::ArrayXXcd& field, const GridSpec& spec, double sx,
                                double sy);

enum class InitialMode { localized, delocalized };

struct WellReport {
  int ix = 0;  ///< well index along x, -wells/2 .. wells/2
  int iy = 0;
  double population = 0.0;
  double fidelity = 0.0;
  double lz = 0.0;
};

struct MultiWellResult {
  InitialMode mode = InitialMode::localized;
  std::vector<WellReport> wells;
  double leakage = 0.0;  ///< 1 - population left in the initially occupied cells
  bool checkerboard = false;
  GridState final_state;
  Eigen::ArrayXXd phase_map;
};

MultiWellResult multi_well_run(const ControlSignals& controls, const WellSpectrum& spectrum,
                               const LatticeConfig& config, InitialMode mode, int n_points = 256,
                               int wells = 3, double dt = 2.5e-3);

/// Whether each well's L_z sign differs from all of its 4-neighbours.
bool checkerboard_signs(const std::vector<WellReport>& wells);

struct GridSample {
  double t = 0.0;
  Populations populations;
  double lz = 0.0;
};

struct SingleWellRun {
  std::vector<GridSample> samples;
  GridState final_state;
  Populations final_populations;
  AngularMomentum final_lz;
  double max_norm_drift = 0.0;
};

/// Ground state preparation plus evolution on a single periodic cell with n
/// points per axis, sampling observables n_samples + 1 times.
SingleWellRun single_well_run(const ControlSignals& controls, const WellSpectrum& spectrum,
                              const LatticeConfig& config, int n_points = 128,
                              double dt = 2.5e-3, int n_samples = 100,
                              Boundary boundary = Boundary::periodic);

}  // namespace shaken
