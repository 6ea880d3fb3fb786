#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "shaken/grid.hpp"
#include "shaken/schemes.hpp"

namespace shaken {

enum class Tier { rwa4, detuned4, six, grid };

/// "4L", "4L-detuned", "6L", "grid".
std::string to_string(Tier tier);
Tier tier_from_string(std::string_view name);

struct GridSettings {
  int n = 128;  ///< points per axis on single-well runs
  double dt = 2.5e-3;
  Boundary boundary = Boundary::periodic;
  int n_samples = 100;
  int multi_well_n = 256;  ///< points per axis on the 3x3 domain
};

/// One hashable description of a batch. Every list is a sweep axis; runs
/// cover the Cartesian product of the axes a figure uses.
struct RunConfig {
  std::vector<SchemeKind> schemes{SchemeKind::polynomial, SchemeKind::piecewise};
  std::vector<double> T{300.0};
  double t_S = 0.75;  ///< piecewise switch time as a fraction of T
  std::vector<double> V0{3.0};
  std::vector<double> detuning{0.0};  ///< (omega_x + omega_d) / omega
  std::vector<Tier> tiers{Tier::rwa4, Tier::detuned4, Tier::six, Tier::grid};
  GridSettings grid;
  std::string output = "out";
  double C1 = 10.0;
  double C2 = 11.0;
  int workers = 1;
  int level_samples = 200;

  /// Throws InvalidParameter on empty axes or out-of-range values.
  void validate() const;
};

nlohmann::json to_json(const RunConfig& config);
/// Missing keys keep the values already in `base`.
RunConfig from_json(const nlohmann::json& j, RunConfig base = {});

/// FNV-1a of the canonical JSON dump, excluding output and workers.
std::string config_hash(const RunConfig& config);

inline const std::vector<std::string>& figure_ids() {
  static const std::vector<std::string> ids{"couplings",     "controls",  "populations",
                                            "fidelity_vs_T", "resonance", "phase_map"};
  return ids;
}

/// Per-figure defaults layered on RunConfig{} before the config file and flags.
nlohmann::json figure_preset(const std::string& figure_id);

/// The built-in defaults in the layout of config/defaults.json.
nlohmann::json defaults_document();

/// Schedule for a scheme at total time T; W is solved once per (C1, C2).
PulseSchedule make_schedule(SchemeKind scheme, double T, const RunConfig& config);

struct PointSpec {
  SchemeKind scheme = SchemeKind::polynomial;
  Tier tier = Tier::rwa4;
  double V0 = 3.0;
  double T = 300.0;
  double detuning = 0.0;
};

struct PointResult {
  double fidelity = 0.0;
  double leakage = 0.0;  ///< 1 - P00 - P10 - P01 - P11
  double lz = 0.0;       ///< grid tier only; NaN otherwise
  double p00 = 0.0, p10 = 0.0, p01 = 0.0, p11 = 0.0;
  double seconds = 0.0;
};

struct PointRun {
  PointResult result;
  std::string trajectory_csv;
  std::optional<GridState> final_state;
};

/// Runs one (scheme, tier, V0, T, detuning) point. Level tiers write the
/// columns t, P10, P00, P01, P11[, P20, P02], fidelity; the grid tier writes
/// t, P00, P10, P01, P11, leakage, fidelity, Lz.
PointRun run_point(const PointSpec& point, const RunConfig& config, bool want_trajectory);

/// Runs fn(0..n-1) on `workers` threads; results are indexed so output order
/// does not depend on scheduling.
void parallel_for(int n, int workers, const std::function<void(int)>& fn);

struct ManifestFile {
  std::string path;  ///< relative to the output directory
  std::uintmax_t bytes = 0;
  std::string fnv1a64;
};

struct Manifest {
  std::string figure;
  std::string hash;
  nlohmann::json config;
  std::vector<ManifestFile> files;
  nlohmann::json points = nlohmann::json::array();

  nlohmann::json to_json() const;
};

/// Writes the artifacts of one figure under config.output and returns the
/// manifest, which is also written as manifest_<figure>.json. Point failures
/// are recorded in the manifest and do not stop the sweep. Finished points
/// whose stored hash matches are reused, so an interrupted sweep resumes.
Manifest run_figure(const RunConfig& config, const std::string& figure_id);

/// Schedules plus W root, boundary checks and pulse areas for every
/// (scheme, T), written under config.output.
Manifest synthesize(const RunConfig& config);

struct SIParams {
  double mass_kg = 132.905451961 * 1.66053906660e-27;  ///< 133Cs
  double wavelength_m = 1064e-9;
  double depth_er = 36.0;  ///< V0 / E_r
  double omega_T = 300.0;  ///< dimensionless total time

  void validate() const;
};

struct SIResult {
  double recoil_energy_j = 0.0;
  double recoil_frequency_hz = 0.0;  ///< E_r / h
  double omega_rad_s = 0.0;          ///< trap frequency sqrt(2 V0 k^2 / m)
  double v0_hbar_omega = 0.0;        ///< depth in units of hbar omega
  double omega_d_over_2pi_hz = 0.0;
  double total_time_s = 0.0;
  double j0_j = 0.0;  ///< (4 E_r / sqrt pi) (V0/E_r)^(3/4) exp(-2 sqrt(V0/E_r))
  double hbar_over_j0_s = 0.0;
  double mott_ratio = 0.0;  ///< T / (hbar / J0)
  bool mott_ok = false;     ///< mott_ratio < 0.05

  nlohmann::json to_json() const;
};

SIResult si_calculator(const SIParams& params);

/// Tool version recorded in manifests.
inline constexpr const char* kToolVersion = "1.0.0";

}  // namespace shaken
