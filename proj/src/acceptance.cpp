#include "shaken/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>

#include "shaken/errors.hpp"
#include "shaken/few_level.hpp"
#include "shaken/grid.hpp"
#include "shaken/harness.hpp"
#include "shaken/lattice_model.hpp"
#include "shaken/schemes.hpp"

namespace shaken {

namespace {

std::string fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

std::string g6(double v) { return fmt("%.6g", v); }

const std::vector<SchemeKind> kSchemes{SchemeKind::polynomial, SchemeKind::piecewise};

struct Context {
  const AcceptanceOptions& options;
  RunConfig config;  // single-well grid settings
  std::map<int, PointResult> long_runs;  // criterion 6 results, by scheme

  explicit Context(const AcceptanceOptions& o) : options(o) {
    config.grid.n = o.grid_n;
    config.grid.dt = o.dt;
    config.grid.n_samples = 1;
    config.workers = o.workers;
  }

  RunConfig sweep_config() const {
    RunConfig c = config;
    c.grid.n = options.sweep_n;
    return c;
  }

  const PointResult& long_run(SchemeKind scheme) {
    const int key = static_cast<int>(scheme);
    auto it = long_runs.find(key);
    if (it == long_runs.end())
      it = long_runs.emplace(key, run_point({scheme, Tier::grid, 3.0, 500.0, 0.0}, config, false)
                                      .result)
               .first;
    return it->second;
  }
};

CriterionResult c1_in_model(Context& ctx) {
  CriterionResult r;
  const WellSpectrum spectrum = compute_spectrum(build_config(3.0));
  double worst = 1.0, slowest = 0.0;
  for (SchemeKind s : kSchemes)
    for (double T : {100.0, 300.0, 500.0}) {
      const PulseSchedule schedule = make_schedule(s, T, ctx.config);
      const auto start = std::chrono::steady_clock::now();
      const LevelTrajectory traj =
          run_level_model(LevelModel::rwa4, schedule, spectrum, -spectrum.omega_d, 10);
      worst = std::min(worst, populations_and_fidelity(traj.final_state()).fidelity);
      slowest = std::max(
          slowest, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
    }
  r.passed = worst >= 1.0 - 1e-6 && slowest < 1.0;
  r.measured = "min fidelity " + fmt("%.12f", worst) + ", slowest run " + fmt("%.3f", slowest) +
               " s (need >= 1-1e-6, < 1 s)";
  return r;
}

CriterionResult c2_w_root(Context& ctx) {
  CriterionResult r;
  WRootReport report;
  const double w = solve_polynomial_w(ctx.config.C1, ctx.config.C2, &report);
  r.passed = w >= -2.75 && w <= -2.73;
  r.measured = "W = " + fmt("%.10f", w) + " (" + std::to_string(report.roots.size()) +
               " root(s), beta4 residual " + g6(report.residual) + "; need [-2.75, -2.73])";
  return r;
}

CriterionResult c3_pulse_areas(Context& ctx) {
  CriterionResult r;
  double worst_x = 0.0, worst_rho = 0.0;
  for (double T : {100.0, 300.0, 500.0}) {
    const PulseSchedule s = make_schedule(SchemeKind::piecewise, T, ctx.config);
    worst_x = std::max(worst_x, std::abs(pulse_area(s, 0) - std::numbers::pi));
    worst_rho = std::max(worst_rho, std::abs(pulse_area(s, 1) - std::numbers::pi / 2));
  }
  r.passed = worst_x < 1e-10 && worst_rho < 1e-10;
  r.measured = "|area_x - pi| = " + g6(worst_x) + ", |area_rho - pi/2| = " + g6(worst_rho) +
               " (need < 1e-10)";
  return r;
}

CriterionResult c4_invariant(Context& ctx) {
  CriterionResult r;
  double worst = 0.0;
  for (SchemeKind s : kSchemes) {
    const PulseSchedule schedule = make_schedule(s, 300.0, ctx.config);
    worst = std::max(worst, verify_invariant(schedule, *schedule.trajectory, 1000));
  }
  r.passed = worst < 1e-8;
  r.measured = "max ||dI/dt + i[H, I]|| = " + g6(worst) + " over 1000 times (need < 1e-8)";
  return r;
}

CriterionResult c5_short_time(Context& ctx) {
  CriterionResult r;
  const PointResult p =
      run_point({SchemeKind::polynomial, Tier::grid, 3.0, 100.0, 0.0}, ctx.config, false).result;
  r.passed = p.fidelity > 0.90 && p.leakage >= 0.02 && p.leakage <= 0.08;
  r.measured = "fidelity " + fmt("%.5f", p.fidelity) + ", leakage " + fmt("%.5f", p.leakage) +
               " (need > 0.90 and leakage in [0.02, 0.08])";
  return r;
}

CriterionResult c6_long_time(Context& ctx) {
  CriterionResult r;
  const PointResult& poly = ctx.long_run(SchemeKind::polynomial);
  const PointResult& pw = ctx.long_run(SchemeKind::piecewise);
  r.passed = poly.fidelity > 0.99 && pw.fidelity > 0.99;
  r.measured = "polynomial " + fmt("%.5f", poly.fidelity) + ", piecewise " +
               fmt("%.5f", pw.fidelity) + " (need > 0.99)";
  return r;
}

CriterionResult c7_depth_trend(Context& ctx) {
  CriterionResult r;
  const std::vector<double> depths{2.0, 2.5, 3.0, 3.5};
  const RunConfig config = ctx.sweep_config();
  std::vector<PointSpec> points;
  for (SchemeKind s : kSchemes)
    for (double v : depths) points.push_back({s, Tier::grid, v, 300.0, 0.0});
  std::vector<double> f(points.size());
  parallel_for(static_cast<int>(points.size()), ctx.options.workers,
               [&](int i) { f[i] = run_point(points[i], config, false).result.fidelity; });
  r.passed = true;
  std::ostringstream m;
  for (std::size_t s = 0; s < kSchemes.size(); ++s) {
    m << (s ? "; " : "") << to_string(kSchemes[s]) << ":";
    for (std::size_t k = 0; k < depths.size(); ++k) {
      const double v = f[s * depths.size() + k];
      m << ' ' << fmt("%.4f", v);
      if (k > 0 && v > f[s * depths.size() + k - 1]) r.passed = false;
    }
  }
  m << " at V0 = 2, 2.5, 3, 3.5 (need non-increasing)";
  r.measured = m.str();
  return r;
}

CriterionResult c8_resonance(Context& ctx) {
  CriterionResult r;
  std::vector<double> deltas;
  for (int i = -20; i <= 20; ++i) deltas.push_back(0.0025 * i);
  const std::vector<Tier> tiers{Tier::grid, Tier::detuned4, Tier::six};
  const RunConfig config = ctx.sweep_config();
  std::vector<PointSpec> points;
  for (SchemeKind s : kSchemes)
    for (Tier t : tiers)
      for (double d : deltas) points.push_back({s, t, 3.0, 300.0, d});
  std::vector<double> f(points.size());
  parallel_for(static_cast<int>(points.size()), ctx.options.workers,
               [&](int i) { f[i] = run_point(points[i], config, false).result.fidelity; });

  const std::size_t n = deltas.size();
  auto curve = [&](std::size_t s, std::size_t t) {
    return std::vector<double>(f.begin() + (s * tiers.size() + t) * n,
                               f.begin() + (s * tiers.size() + t + 1) * n);
  };
  auto argmax = [&](const std::vector<double>& c) {
    return deltas[std::max_element(c.begin(), c.end()) - c.begin()];
  };
  r.passed = true;
  std::ostringstream m;
  for (std::size_t s = 0; s < kSchemes.size(); ++s) {
    const auto grid = curve(s, 0), four = curve(s, 1), six = curve(s, 2);
    double diff = 0.0, diff_at = 0.0;
    for (std::size_t k = 0; k < n; ++k)
      if (std::abs(six[k] - grid[k]) > diff) {
        diff = std::abs(six[k] - grid[k]);
        diff_at = deltas[k];
      }
    const double grid_peak = argmax(grid), four_peak = argmax(four);
    const bool ok = grid_peak > 0.0 && std::abs(four_peak) < 0.005 && diff <= 0.05;
    r.passed = r.passed && ok;
    m << (s ? "; " : "") << to_string(kSchemes[s]) << ": grid peak at " << g6(grid_peak)
      << ", 4L peak at " << g6(four_peak) << ", max |6L - grid| " << fmt("%.4f", diff)
      << " at " << g6(diff_at);
  }
  m << " (need grid peak > 0, |4L peak| < 0.005, diff <= 0.05)";
  r.measured = m.str();
  return r;
}

CriterionResult c9_multi_well(Context& ctx) {
  CriterionResult r;
  const LatticeConfig lattice = build_config(3.0);
  const WellSpectrum spectrum = compute_spectrum(lattice);
  const ControlSignals controls =
      map_controls(make_schedule(SchemeKind::piecewise, 300.0, ctx.config), spectrum, lattice);
  std::vector<MultiWellResult> runs(2);
  const InitialMode modes[2] = {InitialMode::localized, InitialMode::delocalized};
  parallel_for(2, ctx.options.workers, [&](int i) {
    runs[i] = multi_well_run(controls, spectrum, lattice, modes[i], ctx.options.multi_well_n, 3,
                             ctx.options.dt);
  });
  std::ostringstream signs;
  for (const WellReport& w : runs[1].wells) signs << (w.lz < 0 ? '-' : '+');
  r.passed = runs[0].leakage <= 0.03 && runs[1].checkerboard;
  r.measured = "localized leakage " + fmt("%.4f", runs[0].leakage) + " (need <= 0.03); " +
               "delocalized Lz signs " + signs.str() +
               (runs[1].checkerboard ? " (checkerboard)" : " (not a checkerboard)");
  return r;
}

CriterionResult c10_angular_momentum(Context& ctx) {
  CriterionResult r;
  const double poly = ctx.long_run(SchemeKind::polynomial).lz;
  const double pw = ctx.long_run(SchemeKind::piecewise).lz;
  auto in_range = [](double v) { return v >= -1.1 && v <= -0.9; };
  r.passed = in_range(poly) && in_range(pw);
  r.measured = "Lz polynomial " + fmt("%.4f", poly) + ", piecewise " + fmt("%.4f", pw) +
               " (need [-1.1, -0.9])";
  return r;
}

CriterionResult c11_si(Context&) {
  CriterionResult r;
  const SIResult si = si_calculator(SIParams{});
  const double fd_khz = si.omega_d_over_2pi_hz / 1e3;
  const double t_ms = si.total_time_s * 1e3;
  const double tunnel_ms = si.hbar_over_j0_s * 1e3;
  r.passed = std::abs(fd_khz - 14.0) <= 1.0 && std::abs(t_ms - 3.0) <= 0.5 &&
             std::abs(tunnel_ms - 589.0) <= 10.0;
  r.measured = "omega_d/2pi = " + fmt("%.3f", fd_khz) + " kHz, T = " + fmt("%.3f", t_ms) +
               " ms, hbar/J0 = " + fmt("%.1f", tunnel_ms) + " ms";
  return r;
}

CriterionResult c12_properties(Context& ctx) {
  CriterionResult r;
  const LatticeConfig lattice = build_config(3.0);
  const WellSpectrum spectrum = compute_spectrum(lattice);
  const PulseSchedule poly100 = make_schedule(SchemeKind::polynomial, 100.0, ctx.config);
  const ControlSignals controls = map_controls(poly100, spectrum, lattice);
  const int n_small = ctx.options.sweep_n;
  std::vector<std::pair<std::string, bool>> checks;
  std::ostringstream m;

  // grid/dt self-convergence and norm conservation
  auto final_fidelity = [&](int n, double dt, double* drift, long* steps) {
    const GridSpec spec = make_grid(n, n, 1, lattice);
    const GridState psi0 = imaginary_time_ground_state(spec, lattice).state;
    const SplitStepReport run = split_step_evolve(psi0, controls, lattice, 100.0, dt, {});
    if (drift) *drift = run.max_norm_drift;
    if (steps) *steps = run.steps;
    return project_populations(run.final_state, spectrum).fidelity;
  };
  std::vector<double> f(4);
  double drift = 0.0;
  long steps = 0;
  parallel_for(4, ctx.options.workers, [&](int i) {
    switch (i) {
      case 0: f[0] = final_fidelity(n_small, ctx.options.dt, &drift, &steps); break;
      case 1: f[1] = final_fidelity(n_small, ctx.options.dt / 2, nullptr, nullptr); break;
      case 2: f[2] = final_fidelity(128, ctx.options.dt, nullptr, nullptr); break;
      case 3: f[3] = final_fidelity(256, ctx.options.dt, nullptr, nullptr); break;
    }
  });
  const double dt_change = std::abs(f[0] - f[1]);
  const double grid_change = std::abs(f[2] - f[3]);
  const double drift_per_1e5 = drift * std::max(1.0, 1e5 / static_cast<double>(steps));
  checks.emplace_back("dt", dt_change < 1e-4);
  checks.emplace_back("grid", grid_change < 1e-3);
  checks.emplace_back("norm", drift_per_1e5 < 1e-9);
  m << "dt-halving dF " << g6(dt_change) << ", 128->256 dF " << g6(grid_change)
    << ", norm drift " << g6(drift) << " over " << steps << " steps";

  // level-model unitarity
  const LevelTrajectory six = run_level_model(LevelModel::six, poly100, spectrum,
                                              -spectrum.omega_d, 50);
  checks.emplace_back("level norm", six.max_norm_drift < 1e-9);
  m << ", 6L norm drift " << g6(six.max_norm_drift);

  // parity selection without the interference term
  const PulseSchedule x_only = transform_schedule(poly100, [](double, const CouplingJet& j) {
    CouplingJet out = j;
    out.omega_rho.setZero();
    return out;
  });
  {
    const ControlSignals c = map_controls(x_only, spectrum, lattice);
    const GridSpec spec = make_grid(n_small, n_small, 1, lattice);
    const GridState psi0 = imaginary_time_ground_state(spec, lattice).state;
    std::vector<double> times;
    for (int i = 0; i <= 100; ++i) times.push_back(i);
    double max_p01 = 0.0;
    split_step_evolve(psi0, c, lattice, 100.0, ctx.options.dt, times, [&](const GridState& s) {
      max_p01 = std::max(max_p01, project_populations(s, spectrum).P(0, 1));
    });
    checks.emplace_back("parity", max_p01 < 1e-4);
    m << ", max P01 without V_rho " << g6(max_p01);
  }

  // static energy conservation
  {
    const ControlSignals c = zero_controls(500.0, spectrum, lattice);
    const GridSpec spec = make_grid(n_small, n_small, 1, lattice);
    const GridState psi0 = imaginary_time_ground_state(spec, lattice).state;
    const double e0 = static_energy(psi0, lattice);
    std::vector<double> times;
    for (int i = 0; i <= 10; ++i) times.push_back(50.0 * i);
    double worst = 0.0;
    split_step_evolve(psi0, c, lattice, 500.0, ctx.options.dt, times, [&](const GridState& s) {
      worst = std::max(worst, std::abs(static_energy(s, lattice) - e0));
    });
    checks.emplace_back("energy", worst < 1e-8);
    m << ", static energy drift " << g6(worst);
  }

  // Rabi oscillation under constant Omega_x
  {
    const double omega0 = 0.1;
    EvolveOptions opt;
    opt.dt = 0.01;
    for (int i = 0; i <= 100; ++i) opt.sample_times.push_back(i);
    const LevelTrajectory traj = evolve_levels(
        [&](double) -> Eigen::MatrixXcd { return h4l_rwa(omega0, 0.0); }, ground_level_state(4),
        100.0, opt);
    double worst = 0.0;
    for (const LevelState& s : traj.samples) {
      const double expected = std::pow(std::sin(omega0 * s.time / 2), 2);
      worst = std::max(worst, std::abs(std::norm(s.amplitudes(level::k10)) - expected));
    }
    checks.emplace_back("rabi", worst < 1e-8);
    m << ", Rabi error " << g6(worst);
  }

  // harmonic limit of the well matrix elements
  {
    const WellSpectrum deep = compute_spectrum(build_config(30.0));
    const double e_gap = std::abs(deep.omega_d - 1.0);
    const double g_err = std::abs(deep.gamma1 - std::numbers::sqrt2 / 2) / (std::numbers::sqrt2 / 2);
    const double d_err = std::abs(deep.d1_integral - 1.0);
    checks.emplace_back("harmonic", e_gap < 0.02 && g_err < 0.03 && d_err < 0.05);
    m << ", V0=30: |omega_d-1| " << g6(e_gap) << ", gamma1 rel err " << g6(g_err)
      << ", |d1-1| " << g6(d_err);
  }

  r.passed = true;
  std::string failed;
  for (const auto& [name, ok] : checks)
    if (!ok) {
      r.passed = false;
      failed += (failed.empty() ? "" : ", ") + name;
    }
  if (!failed.empty()) m << "; failed: " << failed;
  r.measured = m.str();
  return r;
}

}  // namespace

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& options) {
  using Fn = CriterionResult (*)(Context&);
  const std::vector<std::pair<std::string, Fn>> criteria{
      {"in-model exactness (4L RWA)", c1_in_model},
      {"polynomial amplitude W", c2_w_root},
      {"piecewise pulse areas", c3_pulse_areas},
      {"invariant residual", c4_invariant},
      {"grid fidelity, short time", c5_short_time},
      {"grid fidelity, long time", c6_long_time},
      {"depth trend at T = 300", c7_depth_trend},
      {"resonance structure at V0 = 3, T = 300", c8_resonance},
      {"3x3 leakage and checkerboard", c9_multi_well},
      {"final angular momentum at T = 500", c10_angular_momentum},
      {"SI calculator (133Cs, 1064 nm, 36 E_r)", c11_si},
      {"property suites", c12_properties},
  };
  Context ctx(options);
  std::vector<CriterionResult> results;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!options.only.empty() &&
        std::find(options.only.begin(), options.only.end(), id) == options.only.end())
      continue;
    const auto start = std::chrono::steady_clock::now();
    CriterionResult r;
    try {
      r = criteria[i].second(ctx);
    } catch (const std::exception& e) {
      r.passed = false;
      r.measured = std::string("error: ") + e.what();
    }
    r.id = id;
    r.name = criteria[i].first;
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (options.on_result) options.on_result(r);
    results.push_back(r);
  }
  return results;
}

std::string format_result(const CriterionResult& r) {
  char head[64];
  std::snprintf(head, sizeof head, "%s  C%-2d ", r.passed ? "PASS" : "FAIL", r.id);
  char tail[32];
  std::snprintf(tail, sizeof tail, " (%.1f s)", r.seconds);
  return head + r.name + ": " + r.measured + tail;
}

}  // namespace shaken
