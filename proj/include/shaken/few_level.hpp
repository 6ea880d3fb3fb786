#pragma once

#include <functional>
#include <iosfwd>
#include <vector>

#include <Eigen/Dense>

#include "shaken/invariant.hpp"
#include "shaken/lattice_model.hpp"
#include "shaken/schemes.hpp"

namespace shaken {

/// Basis order (|10>, |00>, |01>, |11>[, |20>, |02>]).
namespace level {
inline constexpr int k10 = 0;
inline constexpr int k00 = 1;
inline constexpr int k01 = 2;
inline constexpr int k11 = 3;
inline constexpr int k20 = 4;
inline constexpr int k02 = 5;
}  // namespace level

struct LevelState {
  Eigen::VectorXcd amplitudes;
  double time = 0.0;
};

/// |00> embedded in a space of the given dimension (4 or 6).
LevelState ground_level_state(int dimension = 4);
/// (|10> -+ i|01>)/sqrt 2 for sign = -1 / +1.
Eigen::VectorXcd minus_state(int dimension = 4);
Eigen::VectorXcd plus_state(int dimension = 4);

Eigen::Matrix4cd h4l_rwa(double omega_x, double omega_rho, double omega_y = 0.0);

/// Four-level Hamiltonian before the rotating-wave approximation, with the
/// carrier at omega_x = omega_y and the envelope g_x held at its resonant
/// calibration.
Eigen::Matrix4cd h4l_detuned(double t, const PulseSchedule& schedule,
                             const WellSpectrum& spectrum, double omega_x);

using Matrix6cd = Eigen::Matrix<cd, 6, 6>;

/// Six-level Hamiltonian adding |20> and |02>; same frame as h4l_detuned.
Matrix6cd h6l(double t, const PulseSchedule& schedule, const WellSpectrum& spectrum,
              double omega_x);

/// Resonant (omega_x = -omega_d), time-averaged six-level matrix assuming
/// omega_20 - omega_10 = omega_d and omega_20 = omega_11.
Matrix6cd h6l_rwa(double omega_x, double omega_rho, const WellSpectrum& spectrum);

using HamiltonianFn = std::function<Eigen::MatrixXcd(double)>;

struct EvolveOptions {
  double dt = 0.01;
  /// Times at which to record the state; the final time is always recorded.
  std::vector<double> sample_times;
  double norm_tolerance = 1e-9;
  double failure_tolerance = 1e-6;
  int max_halvings = 6;
};

struct LevelTrajectory {
  std::vector<LevelState> samples;
  double dt_used = 0.0;
  double max_norm_drift = 0.0;
  const LevelState& final_state() const { return samples.back(); }
};

/// Fixed-step RK4 on [psi0.time, T]; the step is halved until the norm drift
/// stays below norm_tolerance. Throws NumericalFailure if it never gets below
/// failure_tolerance.
LevelTrajectory evolve_levels(const HamiltonianFn& hamiltonian, const LevelState& psi0,
                              double T, const EvolveOptions& options);

/// 0.01 min(1/omega_d, 1/max|Omega|) sampled over the schedule.
double recommended_dt(const PulseSchedule& schedule, double omega_d);

struct LevelObservables {
  Eigen::VectorXd populations;
  double fidelity = 0.0;  ///< |<-|psi>|^2
};

LevelObservables populations_and_fidelity(const LevelState& state);

/// Columns t, P10, P00, P01, P11[, P20, P02], fidelity.
void write_trajectory_csv(std::ostream& out, const LevelTrajectory& trajectory);

enum class LevelModel { rwa4, detuned4, six };

/// Evolves |00> under the chosen model and returns the trajectory sampled at
/// n_samples + 1 evenly spaced times.
LevelTrajectory run_level_model(LevelModel model, const PulseSchedule& schedule,
                                const WellSpectrum& spectrum, double omega_x, int n_samples = 200);

}  // namespace shaken
