#include "shaken/grid.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>
#include <mutex>
#include <numbers>
#include <sstream>

#include <fftw3.h>

#include "shaken/errors.hpp"

namespace shaken {

namespace {

using std::numbers::pi;
const cd I(0.0, 1.0);

bool power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

// The FFTW planner is not thread-safe; execution on distinct plans is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

// In-place 2D spectral transform on an FFTW-owned buffer viewed as an
// nx x ny column-major Eigen array (x fastest, which is FFTW's last
// dimension). Periodic grids use the complex DFT; Dirichlet grids use the
// DST-II / DST-III pair on the real and imaginary parts, whose modes are
// sin(m pi (x + W) / 2W) sampled at cell midpoints.
class Spectral2d {
public:
  Spectral2d(int nx, int ny, Boundary boundary) : nx_(nx), ny_(ny), boundary_(boundary) {
    buffer_ = fftw_alloc_complex(static_cast<std::size_t>(nx) * ny);
    if (!buffer_) throw NumericalFailure("FFTW buffer allocation failed");
    std::lock_guard lock(planner_mutex());
    if (boundary == Boundary::periodic) {
      forward_ = fftw_plan_dft_2d(ny, nx, buffer_, buffer_, FFTW_FORWARD, FFTW_ESTIMATE);
      backward_ = fftw_plan_dft_2d(ny, nx, buffer_, buffer_, FFTW_BACKWARD, FFTW_ESTIMATE);
    } else {
      forward_ = real_plan(FFTW_RODFT10, FFTW_RODFT10);
      backward_ = real_plan(FFTW_RODFT01, FFTW_RODFT01);
      cos_x_ = real_plan(FFTW_RODFT01, FFTW_REDFT01);
      cos_y_ = real_plan(FFTW_REDFT01, FFTW_RODFT01);
    }
  }
  ~Spectral2d() {
    std::lock_guard lock(planner_mutex());
    for (fftw_plan p : {forward_, backward_, cos_x_, cos_y_}) {
      if (p) fftw_destroy_plan(p);
    }
    fftw_free(buffer_);
  }
  Spectral2d(const Spectral2d&) = delete;
  Spectral2d& operator=(const Spectral2d&) = delete;

  Eigen::Map<Eigen::ArrayXXcd> field() {
    return {reinterpret_cast<cd*>(buffer_), nx_, ny_};
  }
  void forward() { fftw_execute(forward_); }
  void backward() { fftw_execute(backward_); }
  /// Inverse transforms producing d/dx (cos_x) or d/dy (cos_y) from
  /// prepared Dirichlet coefficients.
  void backward_cos_x() { fftw_execute(cos_x_); }
  void backward_cos_y() { fftw_execute(cos_y_); }
  /// forward() followed by backward() multiplies by 1/scale().
  double scale() const {
    const double n = static_cast<double>(nx_) * ny_;
    return boundary_ == Boundary::periodic ? 1.0 / n : 0.25 / n;
  }

private:
  // kinds in FFTW dimension order: y (slow), x (fast)
  fftw_plan real_plan(fftw_r2r_kind ky, fftw_r2r_kind kx) {
    const int dims[2] = {ny_, nx_};
    const fftw_r2r_kind kinds[2] = {ky, kx};
    double* data = reinterpret_cast<double*>(buffer_);
    return fftw_plan_many_r2r(2, dims, 2, data, nullptr, 2, 1, data, nullptr, 2, 1, kinds,
                              FFTW_ESTIMATE);
  }

  int nx_, ny_;
  Boundary boundary_;
  fftw_complex* buffer_ = nullptr;
  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
  fftw_plan cos_x_ = nullptr;
  fftw_plan cos_y_ = nullptr;
};

// Per-thread cache for the analysis transforms.
Spectral2d& scratch_transform(const GridSpec& spec) {
  thread_local std::map<std::tuple<int, int, Boundary>, std::unique_ptr<Spectral2d>> cache;
  auto& slot = cache[{spec.nx, spec.ny, spec.boundary}];
  if (!slot) slot = std::make_unique<Spectral2d>(spec.nx, spec.ny, spec.boundary);
  return *slot;
}

Eigen::ArrayXd wavenumbers(int n, double length, Boundary boundary) {
  Eigen::ArrayXd k(n);
  for (int m = 0; m < n; ++m) {
    k(m) = boundary == Boundary::periodic ? 2.0 * pi / length * (m < n / 2 ? m : m - n)
                                          : pi / length * (m + 1);
  }
  return k;
}

Eigen::ArrayXXd kinetic_energy(const GridSpec& spec) {
  const Eigen::ArrayXd kx = spec.kx();
  const Eigen::ArrayXd ky = spec.ky();
  Eigen::ArrayXXd kin(spec.nx, spec.ny);
  for (int j = 0; j < spec.ny; ++j) kin.col(j) = 0.5 * (kx.square() + ky(j) * ky(j));
  return kin;
}

Eigen::ArrayXXd static_potential(const GridSpec& spec, const LatticeConfig& config) {
  const Eigen::ArrayXd sx = (config.k * spec.x()).sin().square() * config.V0;
  const Eigen::ArrayXd sy = (config.k * spec.y()).sin().square() * config.V0;
  Eigen::ArrayXXd v(spec.nx, spec.ny);
  for (int j = 0; j < spec.ny; ++j) v.col(j) = sx + sy(j);
  return v;
}

Eigen::ArrayXXd interference_shape(const GridSpec& spec, const LatticeConfig& config) {
  const Eigen::ArrayXd sx = (config.k * spec.x()).sin();
  const Eigen::ArrayXd sy = (config.k * spec.y()).sin();
  Eigen::ArrayXXd s(spec.nx, spec.ny);
  for (int j = 0; j < spec.ny; ++j) s.col(j) = sx * sy(j);
  return s;
}

double grid_norm(const Eigen::Ref<const Eigen::ArrayXXcd>& psi, const GridSpec& spec) {
  return psi.abs2().sum() * spec.dx() * spec.dy();
}

// Minimum-image distance on the periodic axis.
double wrap(double d, double length) { return d - length * std::round(d / length); }

Eigen::ArrayXXd super_gaussian_window(const GridSpec& spec, double xc, double yc,
                                      double half_width) {
  const Eigen::ArrayXd x = spec.x();
  const Eigen::ArrayXd y = spec.y();
  Eigen::ArrayXd wx(spec.nx), wy(spec.ny);
  for (int i = 0; i < spec.nx; ++i) {
    wx(i) = std::exp(-std::pow(wrap(x(i) - xc, 2.0 * spec.half_width_x()) / half_width, 16));
  }
  for (int j = 0; j < spec.ny; ++j) {
    wy(j) = std::exp(-std::pow(wrap(y(j) - yc, 2.0 * spec.half_width_y()) / half_width, 16));
  }
  Eigen::ArrayXXd w(spec.nx, spec.ny);
  for (int j = 0; j < spec.ny; ++j) w.col(j) = wx * wy(j);
  return w;
}

Eigen::ArrayXXcd gaussian_guess(const GridSpec& spec, double xc, double yc) {
  const Eigen::ArrayXd x = spec.x();
  const Eigen::ArrayXd y = spec.y();
  Eigen::ArrayXXcd g(spec.nx, spec.ny);
  for (int j = 0; j < spec.ny; ++j) {
    const double dy = wrap(y(j) - yc, 2.0 * spec.half_width_y());
    for (int i = 0; i < spec.nx; ++i) {
      const double dx = wrap(x(i) - xc, 2.0 * spec.half_width_x());
      g(i, j) = std::exp(-0.5 * (dx * dx + dy * dy));
    }
  }
  return g;
}

GroundStateResult relax(const GridSpec& spec, const LatticeConfig& config,
                        Eigen::ArrayXXcd guess, const Eigen::ArrayXXd* window,
                        const std::vector<double>& stages, const ImaginaryTimeOptions& options) {
  Spectral2d fft(spec.nx, spec.ny, spec.boundary);
  auto psi = fft.field();
  psi = guess;
  const Eigen::ArrayXXd v = static_potential(spec, config);
  const Eigen::ArrayXXd kin = kinetic_energy(spec);

  GroundStateResult result;
  result.state.spec = spec;
  auto renormalize = [&] { psi /= std::sqrt(grid_norm(psi, spec)); };
  renormalize();

  int total = 0;
  for (std::size_t stage = 0; stage < stages.size(); ++stage) {
    const double dtau = stages[stage];
    const bool last = stage + 1 == stages.size();
    const Eigen::ArrayXXd half_v = (-0.5 * dtau * v).exp();
    const Eigen::ArrayXXd kick_k = (-dtau * kin).exp() * fft.scale();
    double previous = std::numeric_limits<double>::infinity();
    bool converged = false;
    while (!converged) {
      for (int s = 0; s < options.check_every; ++s) {
        psi *= half_v;
        fft.forward();
        psi *= kick_k;
        fft.backward();
        psi *= half_v;
        if (window) psi *= *window;
        renormalize();
      }
      total += options.check_every;
      result.state.psi = psi;
      const double e = static_energy(result.state, config);
      result.energy_history.push_back(e);
      if (!std::isfinite(e)) {
        throw NumericalFailure("imaginary-time evolution produced a non-finite energy",
                               result.energy_history);
      }
      // Earlier stages only need to get close; the last one sets the precision.
      const double tol = last ? options.tolerance : 1e3 * options.tolerance;
      converged = std::abs(e - previous) < tol;
      previous = e;
      if (!converged && total >= options.max_iterations) {
        throw NumericalFailure("imaginary-time evolution did not converge within " +
                                   std::to_string(options.max_iterations) + " iterations",
                               result.energy_history);
      }
    }
  }
  result.state.psi = psi;
  result.state.time = 0.0;
  result.energy = result.energy_history.back();
  result.iterations = total;
  return result;
}

}  // namespace

// ---------------------------------------------------------------------------

Eigen::ArrayXd GridSpec::x() const {
  const double offset = boundary == Boundary::periodic ? 0.0 : 0.5;
  return (Eigen::ArrayXd::LinSpaced(nx, 0.0, nx - 1.0) + offset) * dx() - half_width_x();
}

Eigen::ArrayXd GridSpec::y() const {
  const double offset = boundary == Boundary::periodic ? 0.0 : 0.5;
  return (Eigen::ArrayXd::LinSpaced(ny, 0.0, ny - 1.0) + offset) * dy() - half_width_y();
}

Eigen::ArrayXd GridSpec::kx() const { return wavenumbers(nx, 2.0 * half_width_x(), boundary); }
Eigen::ArrayXd GridSpec::ky() const { return wavenumbers(ny, 2.0 * half_width_y(), boundary); }

GridSpec make_grid(int nx, int ny, int wells, const LatticeConfig& config, Boundary boundary) {
  if (!power_of_two(nx) || !power_of_two(ny) || nx < 8 || ny < 8) {
    throw InvalidParameter("grid sizes must be powers of two, at least 8");
  }
  if (wells < 1 || wells % 2 == 0) throw InvalidParameter("well count must be odd and positive");
  if (!(config.ell > 0.0)) throw InvalidParameter("lattice config has no period");
  GridSpec spec;
  spec.nx = nx;
  spec.ny = ny;
  spec.wells_x = wells;
  spec.wells_y = wells;
  spec.ell = config.ell;
  spec.boundary = boundary;
  return spec;
}

double GridState::norm() const { return grid_norm(psi, spec); }

// ---------------------------------------------------------------------------

double ControlSignals::r_x(double t) const {
  return -schedule.at(t).omega_x * std::cos(omega_x * t) / (omega_d * omega_d * gamma1);
}

double ControlSignals::r_x_dot(double t) const {
  const Eigen::Vector3d w = schedule.jet(t).omega_x;
  const double c = std::cos(omega_x * t);
  const double s = std::sin(omega_x * t);
  return -(w(1) * c - w(0) * omega_x * s) / (omega_d * omega_d * gamma1);
}

double ControlSignals::r_x_ddot(double t) const {
  const Eigen::Vector3d w = schedule.jet(t).omega_x;
  const double c = std::cos(omega_x * t);
  const double s = std::sin(omega_x * t);
  return -(w(2) * c - 2.0 * w(1) * omega_x * s - w(0) * omega_x * omega_x * c) /
         (omega_d * omega_d * gamma1);
}

double ControlSignals::g_x(double t) const {
  return schedule.at(t).omega_x / (omega_d * omega_d * gamma1);
}

double ControlSignals::rho(double t) const {
  return std::asin(std::clamp(schedule.at(t).omega_rho / (4.0 * V0 * gamma2), -1.0, 1.0));
}

double ControlSignals::v_rho(double t) const { return schedule.at(t).omega_rho / (2.0 * gamma2); }

ControlSignals map_controls(const PulseSchedule& schedule, const WellSpectrum& spectrum,
                            const LatticeConfig& config, std::optional<double> omega_x) {
  const double T = schedule.total_time();
  double worst = 0.0;
  for (int i = 0; i <= 4000; ++i) {
    worst = std::max(worst, std::abs(schedule.at(T * i / 4000.0).omega_rho) /
                                (4.0 * config.V0 * spectrum.gamma2));
  }
  if (worst > 1.0) {
    std::ostringstream os;
    os << "V_rho would exceed 2 V0 (|Omega_rho / 4 V0 gamma_2| reaches " << worst
       << "); a deeper lattice of roughly V0 = " << worst * config.V0 << " is needed";
    throw ControlInfeasible(os.str(), worst * config.V0);
  }
  return ControlSignals{schedule,          omega_x.value_or(-spectrum.omega_d),
                        spectrum.omega_d,  spectrum.gamma1,
                        spectrum.gamma2,   config.V0};
}

ControlSignals zero_controls(double total_time, const WellSpectrum& spectrum,
                             const LatticeConfig& config) {
  PulseSchedule s(SchemeKind::custom, total_time, [](double) { return CouplingJet{}; });
  return map_controls(s, spectrum, config);
}

Eigen::ArrayXXd lattice_frame_potential(double t, const GridSpec& spec,
                                        const ControlSignals* controls,
                                        const LatticeConfig& config) {
  Eigen::ArrayXXd v = static_potential(spec, config);
  if (!controls) return v;
  const double force = config.mass * controls->r_x_ddot(t);
  const double vr = controls->v_rho(t);
  const Eigen::ArrayXd x = spec.x();
  v += vr * interference_shape(spec, config);
  for (int j = 0; j < spec.ny; ++j) v.col(j) += force * x;
  return v;
}

// ---------------------------------------------------------------------------

double static_energy(const GridState& state, const LatticeConfig& config) {
  const GridSpec& spec = state.spec;
  Spectral2d& fft = scratch_transform(spec);
  auto work = fft.field();
  work = state.psi;
  fft.forward();
  work *= kinetic_energy(spec) * fft.scale();
  fft.backward();
  const double cell = spec.dx() * spec.dy();
  const double kinetic = (state.psi.conjugate() * work).real().sum() * cell;
  const double potential = (state.psi.abs2() * static_potential(spec, config)).sum() * cell;
  return (kinetic + potential) / state.norm();
}

GroundStateResult imaginary_time_ground_state(const GridSpec& spec, const LatticeConfig& config,
                                              const ImaginaryTimeOptions& options) {
  if (spec.wells_x == 1 && spec.wells_y == 1) {
    return relax(spec, config, gaussian_guess(spec, 0.0, 0.0), nullptr, options.dtau_stages,
                 options);
  }
  // Tunnelling splits the lowest band by far less than the relaxation can
  // resolve, so the delocalised state is seeded from the single-well state
  // copied into every well and then polished without a window.
  const GroundStateResult local = windowed_ground_state(spec, config, 0.0, 0.0, options);
  Eigen::ArrayXXcd seed = Eigen::ArrayXXcd::Zero(spec.nx, spec.ny);
  for (int iy = -spec.wells_y / 2; iy <= spec.wells_y / 2; ++iy) {
    for (int ix = -spec.wells_x / 2; ix <= spec.wells_x / 2; ++ix) {
      seed += spectral_shift(local.state.psi, spec, 2.0 * spec.ell * ix, 2.0 * spec.ell * iy);
    }
  }
  return relax(spec, config, std::move(seed), nullptr, {options.dtau_stages.back()}, options);
}

GroundStateResult windowed_ground_state(const GridSpec& spec, const LatticeConfig& config,
                                        double xc, double yc,
                                        const ImaginaryTimeOptions& options) {
  const Eigen::ArrayXXd window = super_gaussian_window(spec, xc, yc, 0.9 * spec.ell);
  return relax(spec, config, gaussian_guess(spec, xc, yc), &window, options.dtau_stages,
               options);
}

GridState localized_ground_state(const GridSpec& spec, const LatticeConfig& config, double xc,
                                 double yc, double tau, double dtau) {
  GridState state = windowed_ground_state(spec, config, xc, yc).state;
  Spectral2d fft(spec.nx, spec.ny, spec.boundary);
  auto psi = fft.field();
  psi = state.psi;
  const Eigen::ArrayXXd half_v = (-0.5 * dtau * static_potential(spec, config)).exp();
  const Eigen::ArrayXXd kick_k = (-dtau * kinetic_energy(spec)).exp() * fft.scale();
  const long steps = std::lround(tau / dtau);
  for (long s = 0; s < steps; ++s) {
    psi *= half_v;
    fft.forward();
    psi *= kick_k;
    fft.backward();
    psi *= half_v;
    if (s % 50 == 49) psi /= std::sqrt(grid_norm(psi, spec));
  }
  psi /= std::sqrt(grid_norm(psi, spec));
  state.psi = psi;
  return state;
}

// ---------------------------------------------------------------------------

namespace {

// exp(-i theta) for |theta| <= 0.05 via truncated series; error below 1e-19.
inline cd small_phase(double theta) {
  const double u = theta * theta;
  const double c = 1.0 + u * (-1.0 / 2 + u * (1.0 / 24 + u * (-1.0 / 720 + u * (1.0 / 40320))));
  const double s =
      theta * (1.0 + u * (-1.0 / 6 + u * (1.0 / 120 + u * (-1.0 / 5040 + u * (1.0 / 362880)))));
  return {c, -s};
}

class Kicker {
public:
  Kicker(const GridSpec& spec, const LatticeConfig& config, double dt)
      : spec_(spec),
        x_(spec.x()),
        shape_(interference_shape(spec, config)),
        phase_x_(spec.nx) {
    const Eigen::ArrayXXd v = static_potential(spec, config);
    half_ = (-I * (0.5 * dt) * v.cast<cd>()).exp();
    full_ = (-I * dt * v.cast<cd>()).exp();
  }

  // psi *= exp(-i [V_s tau + a x + b S]) with tau = dt/2 (half) or dt (full).
  void apply(Eigen::Map<Eigen::ArrayXXcd>& psi, bool full, double a, double b) {
    const Eigen::ArrayXXcd& base = full ? full_ : half_;
    for (int i = 0; i < spec_.nx; ++i) phase_x_(i) = std::polar(1.0, -a * x_(i));
    const bool series = std::abs(b) <= 0.05;
    for (int j = 0; j < spec_.ny; ++j) {
      cd* p = &psi(0, j);
      const cd* e = &base(0, j);
      const double* s = &shape_(0, j);
      for (int i = 0; i < spec_.nx; ++i) {
        const double theta = b * s[i];
        const cd rho = series ? small_phase(theta) : std::polar(1.0, -theta);
        p[i] *= e[i] * phase_x_(i) * rho;
      }
    }
  }

private:
  const GridSpec& spec_;
  Eigen::ArrayXd x_;
  Eigen::ArrayXXd shape_;
  Eigen::ArrayXcd phase_x_;
  Eigen::ArrayXXcd half_;
  Eigen::ArrayXXcd full_;
};

}  // namespace

SplitStepReport split_step_evolve(const GridState& initial, const ControlSignals& controls,
                                  const LatticeConfig& config, double T, double dt,
                                  const std::vector<double>& sample_times,
                                  const GridObserver& observer, bool keep_samples) {
  const GridSpec& spec = initial.spec;
  const double t0 = initial.time;
  if (!(dt > 0.0)) throw InvalidParameter("time step must be positive");
  if (!(T >= t0)) throw InvalidParameter("final time precedes the initial state");
  const long n_steps = std::max(1L, static_cast<long>(std::ceil((T - t0) / dt - 1e-9)));
  dt = (T - t0) / static_cast<double>(n_steps);

  std::vector<long> marks;
  for (double s : sample_times) {
    if (s < t0 - 1e-12 || s > T + 1e-12) continue;
    marks.push_back(std::lround((s - t0) / dt));
  }
  std::sort(marks.begin(), marks.end());
  marks.erase(std::unique(marks.begin(), marks.end()), marks.end());

  Spectral2d fft(spec.nx, spec.ny, spec.boundary);
  auto psi = fft.field();
  psi = initial.psi;
  const double norm0 = grid_norm(psi, spec);
  Kicker kicker(spec, config, dt);
  const Eigen::ArrayXXcd kinetic =
      (-I * dt * kinetic_energy(spec).cast<cd>()).exp() * fft.scale();

  SplitStepReport report;
  report.dt = dt;
  GridState snapshot{Eigen::ArrayXXcd(), spec, t0};
  auto record = [&](long step) {
    const double drift = std::abs(grid_norm(psi, spec) - norm0);
    report.max_norm_drift = std::max(report.max_norm_drift, drift);
    if (!std::isfinite(drift)) {
      throw NumericalFailure("non-finite wavefunction at step " + std::to_string(step),
                             {static_cast<double>(step)});
    }
    if (drift > 1e-6) {
      throw NumericalFailure("norm drift " + std::to_string(drift) + " at step " +
                                 std::to_string(step) + "; reduce dt",
                             {static_cast<double>(step), drift});
    }
  };
  auto emit = [&](long step) {
    snapshot.psi = psi;
    snapshot.time = step == n_steps ? T : t0 + step * dt;
    if (observer) observer(snapshot);
    if (keep_samples) report.samples.push_back(snapshot);
  };

  auto mark = marks.begin();
  if (mark != marks.end() && *mark == 0) {
    emit(0);
    ++mark;
  }
  bool pending = false;
  double force_prev = 0.0;
  double vrho_prev = 0.0;
  for (long n = 0; n < n_steps; ++n) {
    const double tm = t0 + (n + 0.5) * dt;
    const double force = config.mass * controls.r_x_ddot(tm);
    const double vrho = controls.v_rho(tm);
    // Consecutive half kicks share one multiplication.
    if (pending) {
      kicker.apply(psi, true, 0.5 * dt * (force_prev + force), 0.5 * dt * (vrho_prev + vrho));
    } else {
      kicker.apply(psi, false, 0.5 * dt * force, 0.5 * dt * vrho);
    }
    fft.forward();
    psi *= kinetic;
    fft.backward();
    pending = true;
    force_prev = force;
    vrho_prev = vrho;

    const long done = n + 1;
    const bool at_mark = mark != marks.end() && *mark == done;
    if (at_mark || done == n_steps) {
      kicker.apply(psi, false, 0.5 * dt * force, 0.5 * dt * vrho);
      pending = false;
      record(done);
      if (at_mark) {
        emit(done);
        ++mark;
      }
    } else if (done % 1000 == 0) {
      // Norm check on the half-kicked state is still exact: kicks are phases.
      record(done);
    }
  }
  report.steps = n_steps;
  report.final_state = GridState{psi, spec, T};
  return report;
}

// ---------------------------------------------------------------------------

namespace {

Eigen::ArrayXd cell_states(const WellSpectrum& spectrum, int level, const Eigen::ArrayXd& coords,
                           double centre) {
  return spectrum.evaluate(level, coords - centre);
}

// Spectral first derivatives (d/dx, d/dy) of the state.
std::pair<Eigen::ArrayXXcd, Eigen::ArrayXXcd> gradient(const GridState& state) {
  const GridSpec& spec = state.spec;
  Spectral2d& fft = scratch_transform(spec);
  auto work = fft.field();
  work = state.psi;
  fft.forward();
  const Eigen::ArrayXXcd coeffs = work;
  const Eigen::ArrayXd kx = spec.kx();
  const Eigen::ArrayXd ky = spec.ky();
  const double scale = fft.scale();
  if (spec.boundary == Boundary::periodic) {
    Eigen::ArrayXd ikx = kx, iky = ky;
    ikx(spec.nx / 2) = 0.0;  // odd derivative: drop the Nyquist mode
    iky(spec.ny / 2) = 0.0;
    for (int j = 0; j < spec.ny; ++j) work.col(j) = coeffs.col(j) * (I * ikx) * scale;
    fft.backward();
    Eigen::ArrayXXcd d_x = work;
    for (int j = 0; j < spec.ny; ++j) work.col(j) = coeffs.col(j) * (I * iky(j)) * scale;
    fft.backward();
    return {std::move(d_x), Eigen::ArrayXXcd(work)};
  }
  // Sine mode m (index m - 1) differentiates into cosine mode m; the
  // cosine transform has no slot for m = n, whose samples vanish anyway.
  work.row(0).setZero();
  for (int i = 1; i < spec.nx; ++i) work.row(i) = coeffs.row(i - 1) * kx(i - 1) * scale;
  fft.backward_cos_x();
  Eigen::ArrayXXcd d_x = work;
  work.col(0).setZero();
  for (int j = 1; j < spec.ny; ++j) work.col(j) = coeffs.col(j - 1) * ky(j - 1) * scale;
  fft.backward_cos_y();
  return {std::move(d_x), Eigen::ArrayXXcd(work)};
}

Eigen::ArrayXd cell_mask(const Eigen::ArrayXd& coords, double centre, double ell) {
  return ((coords >= centre - ell) && (coords < centre + ell)).cast<double>();
}

}  // namespace

Populations project_populations(const GridState& state, const WellSpectrum& spectrum, double xc,
                                double yc) {
  const GridSpec& spec = state.spec;
  const Eigen::ArrayXd x = spec.x();
  const Eigen::ArrayXd y = spec.y();
  Eigen::MatrixXd gx(spec.nx, 3), gy(spec.ny, 3);
  for (int l = 0; l < 3; ++l) {
    gx.col(l) = cell_states(spectrum, l, x, xc).matrix();
    gy.col(l) = cell_states(spectrum, l, y, yc).matrix();
  }
  const Eigen::Matrix3cd c =
      gx.transpose().cast<cd>() * state.psi.matrix() * gy.cast<cd>() * (spec.dx() * spec.dy());
  Populations out;
  out.p = c.cwiseAbs2();
  out.c10 = c(1, 0);
  out.c01 = c(0, 1);
  out.leakage = 1.0 - out.p.topLeftCorner<2, 2>().sum();
  out.fidelity = 0.5 * std::norm(out.c10 + I * out.c01);
  return out;
}

double cell_population(const GridState& state, double xc, double yc) {
  const GridSpec& spec = state.spec;
  const Eigen::ArrayXd mx = cell_mask(spec.x(), xc, spec.ell);
  const Eigen::ArrayXd my = cell_mask(spec.y(), yc, spec.ell);
  return (mx.matrix().transpose() * state.psi.abs2().matrix() * my.matrix()).value() * spec.dx() *
         spec.dy();
}

AngularMomentum angular_momentum(const GridState& state, double xc, double yc) {
  const GridSpec& spec = state.spec;
  const auto [d_x, d_y] = gradient(state);
  const Eigen::ArrayXd x = spec.x() - xc;
  const Eigen::ArrayXd y = spec.y() - yc;
  const Eigen::ArrayXd mx = cell_mask(spec.x(), xc, spec.ell);
  const Eigen::ArrayXd my = cell_mask(spec.y(), yc, spec.ell);
  cd acc = 0.0;
  double weight = 0.0;
  for (int j = 0; j < spec.ny; ++j) {
    if (my(j) == 0.0) continue;
    for (int i = 0; i < spec.nx; ++i) {
      if (mx(i) == 0.0) continue;
      const cd lz = -I * (x(i) * d_y(i, j) - y(j) * d_x(i, j));
      acc += std::conj(state.psi(i, j)) * lz;
      weight += std::norm(state.psi(i, j));
    }
  }
  AngularMomentum out;
  const double cell = spec.dx() * spec.dy();
  out.window_norm = weight * cell;
  out.lz = weight > 0.0 ? acc.real() / weight : 0.0;
  if (out.window_norm < 0.5) {
    std::ostringstream os;
    os << "analysis window holds only " << out.window_norm << " of the probability";
    out.warning = os.str();
  }
  return out;
}

Eigen::ArrayXXd phase_map(const GridState& state, double xc, double yc) {
  const GridSpec& spec = state.spec;
  const int i = std::clamp(
      static_cast<int>(std::lround((xc + 0.25 * spec.ell + spec.half_width_x()) / spec.dx())), 0,
      spec.nx - 1);
  const int j = std::clamp(static_cast<int>(std::lround((yc + spec.half_width_y()) / spec.dy())),
                           0, spec.ny - 1);
  const cd ref = state.psi(i, j);
  const cd rotate = std::abs(ref) > 0.0 ? std::conj(ref) / std::abs(ref) : cd(1.0);
  Eigen::ArrayXXd out(spec.nx, spec.ny);
  for (int b = 0; b < spec.ny; ++b) {
    for (int a = 0; a < spec.nx; ++a) {
      const cd v = state.psi(a, b) * rotate;
      out(a, b) = std::abs(v) * std::arg(v);
    }
  }
  return out;
}

Eigen::ArrayXXcd spectral_shift(const Eigen::ArrayXXcd& field, const GridSpec& spec, double sx,
                                double sy) {
  if (spec.boundary != Boundary::periodic) {
    throw InvalidParameter("spectral_shift needs a periodic grid");
  }
  Spectral2d& fft = scratch_transform(spec);
  auto work = fft.field();
  work = field;
  fft.forward();
  const Eigen::ArrayXd kx = spec.kx();
  const Eigen::ArrayXd ky = spec.ky();
  const double n = static_cast<double>(spec.nx) * spec.ny;
  for (int j = 0; j < spec.ny; ++j) {
    for (int i = 0; i < spec.nx; ++i) {
      work(i, j) *= std::polar(1.0 / n, -(kx(i) * sx + ky(j) * sy));
    }
  }
  fft.backward();
  return work;
}

// ---------------------------------------------------------------------------

bool checkerboard_signs(const std::vector<WellReport>& wells) {
  if (wells.empty()) return false;
  for (const WellReport& a : wells) {
    if (a.lz == 0.0) return false;
    for (const WellReport& b : wells) {
      if (std::abs(a.ix - b.ix) + std::abs(a.iy - b.iy) != 1) continue;
      if ((a.lz > 0.0) == (b.lz > 0.0)) return false;
    }
  }
  return true;
}

MultiWellResult multi_well_run(const ControlSignals& controls, const WellSpectrum& spectrum,
                               const LatticeConfig& config, InitialMode mode, int n_points,
                               int wells, double dt) {
  const GridSpec spec = make_grid(n_points, n_points, wells, config);
  const GridState initial = mode == InitialMode::localized
                                ? localized_ground_state(spec, config, 0.0, 0.0)
                                : imaginary_time_ground_state(spec, config).state;
  const double T = controls.schedule.total_time();
  SplitStepReport run = split_step_evolve(initial, controls, config, T, dt, {});

  MultiWellResult result;
  result.mode = mode;
  result.final_state = std::move(run.final_state);
  double occupied_after = 0.0;
  for (int iy = -wells / 2; iy <= wells / 2; ++iy) {
    for (int ix = -wells / 2; ix <= wells / 2; ++ix) {
      const double xc = 2.0 * spec.ell * ix;
      const double yc = 2.0 * spec.ell * iy;
      WellReport w;
      w.ix = ix;
      w.iy = iy;
      w.population = cell_population(result.final_state, xc, yc);
      const Populations p = project_populations(result.final_state, spectrum, xc, yc);
      w.fidelity = w.population > 0.0 ? p.fidelity / w.population : 0.0;
      w.lz = angular_momentum(result.final_state, xc, yc).lz;
      result.wells.push_back(w);
      const bool occupied = mode == InitialMode::delocalized || (ix == 0 && iy == 0);
      if (occupied) occupied_after += w.population;
    }
  }
  result.leakage = 1.0 - occupied_after;
  result.checkerboard = checkerboard_signs(result.wells);
  result.phase_map = phase_map(result.final_state);
  return result;
}

SingleWellRun single_well_run(const ControlSignals& controls, const WellSpectrum& spectrum,
                              const LatticeConfig& config, int n_points, double dt,
                              int n_samples, Boundary boundary) {
  const GridSpec spec = make_grid(n_points, n_points, 1, config, boundary);
  const GridState initial = imaginary_time_ground_state(spec, config).state;
  const double T = controls.schedule.total_time();
  std::vector<double> times;
  for (int i = 0; i <= n_samples; ++i) times.push_back(T * i / n_samples);

  SingleWellRun out;
  auto observe = [&](const GridState& s) {
    GridSample sample;
    sample.t = s.time;
    sample.populations = project_populations(s, spectrum);
    sample.lz = angular_momentum(s).lz;
    out.samples.push_back(sample);
  };
  SplitStepReport run = split_step_evolve(initial, controls, config, T, dt, times, observe);
  out.final_state = std::move(run.final_state);
  out.final_populations = project_populations(out.final_state, spectrum);
  out.final_lz = angular_momentum(out.final_state);
  out.max_norm_drift = run.max_norm_drift;
  return out;
}

}  // namespace shaken
