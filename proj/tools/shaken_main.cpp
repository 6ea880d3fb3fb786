// Batch driver: schedule synthesis, level/grid simulation, figure sweeps, SI
// conversion and the acceptance suite.

#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "shaken/acceptance.hpp"
#include "shaken/errors.hpp"
#include "shaken/harness.hpp"
#include "shaken/io.hpp"

namespace {

using nlohmann::json;

struct Overrides {
  std::string config_path;
  std::optional<std::string> out;
  std::optional<int> workers;
  std::vector<std::string> tiers;
  std::vector<std::string> schemes;
  std::vector<double> T, V0, detuning;
  std::optional<int> grid;
  std::optional<double> dt;
};

void add_run_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config_path, "JSON run config layered over the defaults");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--workers", o.workers, "parallel sweep workers");
  cmd->add_option("--tier", o.tiers, "tiers: 4L, 4L-detuned, 6L, grid");
  cmd->add_option("--scheme", o.schemes, "schemes: polynomial, piecewise");
  cmd->add_option("--T", o.T, "total times in 1/omega");
  cmd->add_option("--V0", o.V0, "lattice depths in hbar omega");
  cmd->add_option("--detuning", o.detuning, "(omega_x + omega_d) / omega values");
  cmd->add_option("--grid", o.grid, "grid points per axis (single-well runs)");
  cmd->add_option("--dt", o.dt, "split-step time step");
}

/// defaults <- figure preset <- config file <- flags
shaken::RunConfig resolve(const Overrides& o, const std::optional<std::string>& figure = {}) {
  shaken::RunConfig config;
  if (figure) config = shaken::from_json(shaken::figure_preset(*figure), config);
  if (!o.config_path.empty())
    config = shaken::from_json(json::parse(shaken::read_file(o.config_path)), config);
  json flags = json::object();
  if (o.out) flags["output"] = *o.out;
  if (o.workers) flags["workers"] = *o.workers;
  if (!o.tiers.empty()) flags["tiers"] = o.tiers;
  if (!o.schemes.empty()) flags["schemes"] = o.schemes;
  if (!o.T.empty()) flags["T"] = o.T;
  if (!o.V0.empty()) flags["V0"] = o.V0;
  if (!o.detuning.empty()) flags["detuning"] = o.detuning;
  if (o.grid) flags["grid"]["n"] = *o.grid;
  if (o.dt) flags["grid"]["dt"] = *o.dt;
  config = shaken::from_json(flags, config);
  config.validate();
  return config;
}

int report(const shaken::Manifest& m, const shaken::RunConfig& config) {
  int failed = 0;
  for (const auto& p : m.points)
    if (p.value("status", "") != "ok") {
      ++failed;
      std::cerr << "point " << p.value("key", "?") << " failed: " << p.value("error", "") << '\n';
    }
  std::cout << m.figure << ": " << m.points.size() << " point(s), " << failed << " failed, "
            << m.files.size() << " file(s) in " << config.output << ", config hash " << m.hash
            << '\n';
  return failed == 0 ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Shaken-lattice angular momentum transfer: synthesis, simulation, sweeps"};
  app.require_subcommand(1);
  app.footer("Built-in defaults (also shipped as config/defaults.json):\n" +
             shaken::defaults_document().dump(2));

  Overrides synth_o, sim_o, fig_o, val_o;
  auto* synth = app.add_subcommand("synthesize", "build schedules, W root, boundary checks");
  add_run_flags(synth, synth_o);

  auto* sim = app.add_subcommand("simulate", "trajectories for every configured point");
  add_run_flags(sim, sim_o);

  std::string figure_id;
  auto* fig = app.add_subcommand("figure", "run one figure sweep");
  fig->add_option("--id", figure_id, "couplings, controls, populations, fidelity_vs_T, "
                                     "resonance, phase_map")
      ->required()
      ->check(CLI::IsMember(shaken::figure_ids()));
  add_run_flags(fig, fig_o);

  shaken::SIParams si;
  double mass_amu = 132.905451961;
  double lambda_nm = 1064.0;
  auto* si_cmd = app.add_subcommand("si-calc", "convert to laboratory units");
  si_cmd->add_option("--mass-amu", mass_amu, "atomic mass in u")->capture_default_str();
  si_cmd->add_option("--lambda-nm", lambda_nm, "lattice wavelength in nm")->capture_default_str();
  si_cmd->add_option("--depth-er", si.depth_er, "lattice depth V0 / E_r")->capture_default_str();
  si_cmd->add_option("--omega-T", si.omega_T, "dimensionless total time")->capture_default_str();

  std::vector<int> only;
  auto* val = app.add_subcommand("validate", "run the acceptance criteria");
  add_run_flags(val, val_o);
  val->add_option("--only", only, "criterion ids to run (default all)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth) {
      const auto config = resolve(synth_o);
      return report(shaken::synthesize(config), config);
    }
    if (*sim) {
      const auto config = resolve(sim_o);
      return report(shaken::run_figure(config, "populations"), config);
    }
    if (*fig) {
      const auto config = resolve(fig_o, figure_id);
      return report(shaken::run_figure(config, figure_id), config);
    }
    if (*si_cmd) {
      si.mass_kg = mass_amu * 1.66053906660e-27;
      si.wavelength_m = lambda_nm * 1e-9;
      std::cout << shaken::si_calculator(si).to_json().dump(2) << '\n';
      return 0;
    }
    if (*val) {
      const auto config = resolve(val_o);
      shaken::AcceptanceOptions options;
      options.only = only;
      options.dt = config.grid.dt;
      options.workers = val_o.workers ? config.workers
                                      : std::max(1u, std::thread::hardware_concurrency());
      options.on_result = [](const shaken::CriterionResult& r) {
        std::cout << shaken::format_result(r) << std::endl;
      };
      bool ok = true;
      for (const auto& r : shaken::run_acceptance(options)) ok = ok && r.passed;
      return ok ? 0 : 1;
    }
  } catch (const shaken::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
