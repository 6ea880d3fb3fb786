#include "shaken/few_level.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

#include "shaken/errors.hpp"

namespace shaken {

namespace {

const cd I(0.0, 1.0);
const double kInvSqrt2 = 1.0 / std::numbers::sqrt2;

cd phase(double angle) { return {std::cos(angle), std::sin(angle)}; }

template <typename Matrix>
void fill_lower(Matrix& h) {
  for (Eigen::Index r = 0; r < h.rows(); ++r) {
    for (Eigen::Index c = 0; c < r; ++c) h(r, c) = std::conj(h(c, r));
  }
}

}  // namespace

LevelState ground_level_state(int dimension) {
  if (dimension != 4 && dimension != 6) throw InvalidParameter("level dimension must be 4 or 6");
  LevelState s;
  s.amplitudes = Eigen::VectorXcd::Zero(dimension);
  s.amplitudes(level::k00) = 1.0;
  return s;
}

Eigen::VectorXcd minus_state(int dimension) {
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(dimension);
  v(level::k10) = kInvSqrt2;
  v(level::k01) = -I * kInvSqrt2;
  return v;
}

Eigen::VectorXcd plus_state(int dimension) {
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(dimension);
  v(level::k10) = kInvSqrt2;
  v(level::k01) = I * kInvSqrt2;
  return v;
}

Eigen::Matrix4cd h4l_rwa(double omega_x, double omega_rho, double omega_y) {
  Eigen::Matrix4cd h;
  h << 0.0, omega_x, omega_rho, -I * omega_y,
       omega_x, 0.0, -I * omega_y, 0.0,
       omega_rho, I * omega_y, 0.0, omega_x,
       I * omega_y, 0.0, omega_x, 0.0;
  return 0.5 * h;
}

Eigen::Matrix4cd h4l_detuned(double t, const PulseSchedule& schedule,
                             const WellSpectrum& spectrum, double omega_x) {
  const Couplings c = schedule.at(t);
  const double wd = spectrum.omega_d;
  const double ratio = (omega_x / wd) * (omega_x / wd);
  // gamma_1 f_x(t) with g_x calibrated from Omega_x at resonance
  const double drive = c.omega_x * ratio * std::cos(omega_x * t);
  Eigen::Matrix4cd h = Eigen::Matrix4cd::Zero();
  h(level::k00, level::k00) = -(wd + omega_x);
  h(level::k10, level::k00) = drive * phase(-omega_x * t);
  h(level::k10, level::k01) = 0.5 * c.omega_rho;
  h(level::k01, level::k11) = drive * phase(-wd * t);
  h(level::k00, level::k11) = 0.5 * c.omega_rho * phase((omega_x - wd) * t);
  fill_lower(h);
  return h;
}

Matrix6cd h6l(double t, const PulseSchedule& schedule, const WellSpectrum& spectrum,
              double omega_x) {
  Matrix6cd h = Matrix6cd::Zero();
  h.topLeftCorner<4, 4>() = h4l_detuned(t, schedule, spectrum, omega_x);
  const Couplings c = schedule.at(t);
  const double wd = spectrum.omega_d;
  const double ratio = (omega_x / wd) * (omega_x / wd);
  const double drive = c.omega_x * ratio * std::cos(omega_x * t);
  const double r1 = spectrum.d1_integral / spectrum.gamma1;
  const double r2 = spectrum.d2_integral / std::sqrt(spectrum.gamma2);
  h(level::k10, level::k20) = r1 * drive * phase((spectrum.omega10 - spectrum.omega20) * t);
  const cd rho = 0.5 * c.omega_rho * r2 * phase(-(spectrum.omega20 - spectrum.omega11) * t);
  h(level::k11, level::k20) = rho;
  h(level::k11, level::k02) = rho;
  fill_lower(h);
  return h;
}

Matrix6cd h6l_rwa(double omega_x, double omega_rho, const WellSpectrum& spectrum) {
  Matrix6cd h = Matrix6cd::Zero();
  h.topLeftCorner<4, 4>() = h4l_rwa(omega_x, omega_rho);
  const double r1 = spectrum.d1_integral / spectrum.gamma1;
  const double r2 = spectrum.d2_integral / std::sqrt(spectrum.gamma2);
  h(level::k10, level::k20) = 0.5 * r1 * omega_x;
  h(level::k11, level::k20) = 0.5 * r2 * omega_rho;
  h(level::k11, level::k02) = 0.5 * r2 * omega_rho;
  fill_lower(h);
  return h;
}

namespace {

struct Run {
  std::vector<LevelState> samples;
  double drift = 0.0;
};

Run integrate(const HamiltonianFn& hamiltonian, const LevelState& psi0, double dt,
              const std::vector<double>& times) {
  Run run;
  Eigen::VectorXcd psi = psi0.amplitudes;
  double t = psi0.time;
  const double norm0 = psi.norm();
  auto rhs = [&](double tau, const Eigen::VectorXcd& v) -> Eigen::VectorXcd {
    return -I * (hamiltonian(tau) * v);
  };
  for (double target : times) {
    while (t < target) {
      const double h = std::min(dt, target - t);
      const Eigen::VectorXcd k1 = rhs(t, psi);
      const Eigen::VectorXcd k2 = rhs(t + 0.5 * h, psi + 0.5 * h * k1);
      const Eigen::VectorXcd k3 = rhs(t + 0.5 * h, psi + 0.5 * h * k2);
      const Eigen::VectorXcd k4 = rhs(t + h, psi + h * k3);
      psi += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      // Land exactly on the sample time when the remainder is a rounding sliver.
      t = target - t - h < 1e-12 * dt ? target : t + h;
      run.drift = std::max(run.drift, std::abs(psi.norm() - norm0));
    }
    run.samples.push_back({psi, t});
  }
  return run;
}

}  // namespace

LevelTrajectory evolve_levels(const HamiltonianFn& hamiltonian, const LevelState& psi0, double T,
                              const EvolveOptions& options) {
  if (!(options.dt > 0.0)) throw InvalidParameter("dt must be positive");
  if (!(T >= psi0.time)) throw InvalidParameter("final time precedes the initial state");
  if (std::abs(psi0.amplitudes.norm() - 1.0) > 1e-12) {
    throw InvalidParameter("initial level state must have unit norm");
  }
  std::vector<double> times;
  for (double s : options.sample_times) {
    if (s >= psi0.time && s <= T) times.push_back(s);
  }
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  if (times.empty() || times.back() < T) times.push_back(T);

  double dt = options.dt;
  for (int attempt = 0;; ++attempt) {
    Run run = integrate(hamiltonian, psi0, dt, times);
    if (run.drift <= options.norm_tolerance || attempt >= options.max_halvings) {
      if (run.drift > options.failure_tolerance) {
        throw NumericalFailure("level integrator norm drift " + std::to_string(run.drift) +
                                   " exceeds tolerance; reduce dt",
                               {dt, run.drift});
      }
      return {std::move(run.samples), dt, run.drift};
    }
    dt *= 0.5;
  }
}

double recommended_dt(const PulseSchedule& schedule, double omega_d) {
  const double T = schedule.total_time();
  double peak = 0.0;
  for (int i = 0; i <= 2000; ++i) {
    const Couplings c = schedule.at(T * i / 2000.0);
    peak = std::max({peak, std::abs(c.omega_x), std::abs(c.omega_rho)});
  }
  double scale = 1.0 / omega_d;
  if (peak > 0.0) scale = std::min(scale, 1.0 / peak);
  return 0.01 * scale;
}

LevelObservables populations_and_fidelity(const LevelState& state) {
  LevelObservables obs;
  obs.populations = state.amplitudes.cwiseAbs2();
  obs.fidelity = std::norm(minus_state(static_cast<int>(state.amplitudes.size()))
                               .dot(state.amplitudes));
  return obs;
}

void write_trajectory_csv(std::ostream& out, const LevelTrajectory& trajectory) {
  if (trajectory.samples.empty()) return;
  const bool six = trajectory.samples.front().amplitudes.size() == 6;
  out << "t,P10,P00,P01,P11" << (six ? ",P20,P02" : "") << ",fidelity\n";
  out.precision(12);
  for (const LevelState& s : trajectory.samples) {
    const LevelObservables obs = populations_and_fidelity(s);
    out << s.time;
    for (Eigen::Index i = 0; i < obs.populations.size(); ++i) out << ',' << obs.populations(i);
    out << ',' << obs.fidelity << '\n';
  }
}

LevelTrajectory run_level_model(LevelModel model, const PulseSchedule& schedule,
                                const WellSpectrum& spectrum, double omega_x, int n_samples) {
  const double T = schedule.total_time();
  EvolveOptions options;
  options.dt = recommended_dt(schedule, spectrum.omega_d);
  for (int i = 0; i <= n_samples; ++i) options.sample_times.push_back(T * i / n_samples);
  switch (model) {
    case LevelModel::rwa4:
      return evolve_levels(
          [&](double t) -> Eigen::MatrixXcd {
            const Couplings c = schedule.at(t);
            return h4l_rwa(c.omega_x, c.omega_rho);
          },
          ground_level_state(4), T, options);
    case LevelModel::detuned4:
      return evolve_levels(
          [&](double t) -> Eigen::MatrixXcd { return h4l_detuned(t, schedule, spectrum, omega_x); },
          ground_level_state(4), T, options);
    case LevelModel::six:
      return evolve_levels(
          [&](double t) -> Eigen::MatrixXcd { return h6l(t, schedule, spectrum, omega_x); },
          ground_level_state(6), T, options);
  }
  throw InvalidParameter("unknown level model");
}

}  // namespace shaken
