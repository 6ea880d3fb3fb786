#include "shaken/harness.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

#include "shaken/errors.hpp"
#include "shaken/few_level.hpp"
#include "shaken/io.hpp"
#include "shaken/lattice_model.hpp"
#include "shaken/snapshot.hpp"

namespace shaken {

using nlohmann::json;
namespace fs = std::filesystem;

std::string to_string(Tier tier) {
  switch (tier) {
    case Tier::rwa4: return "4L";
    case Tier::detuned4: return "4L-detuned";
    case Tier::six: return "6L";
    case Tier::grid: return "grid";
  }
  return "?";
}

Tier tier_from_string(std::string_view name) {
  if (name == "4L") return Tier::rwa4;
  if (name == "4L-detuned") return Tier::detuned4;
  if (name == "6L") return Tier::six;
  if (name == "grid") return Tier::grid;
  throw InvalidParameter("unknown tier '" + std::string(name) + "'");
}

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string tag(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

std::string boundary_name(Boundary b) { return b == Boundary::periodic ? "periodic" : "dirichlet"; }

Boundary boundary_from_string(const std::string& s) {
  if (s == "periodic") return Boundary::periodic;
  if (s == "dirichlet") return Boundary::dirichlet;
  throw InvalidParameter("unknown boundary '" + s + "'");
}

std::vector<double> number_list(const json& j) {
  if (j.is_number()) return {j.get<double>()};
  return j.get<std::vector<double>>();
}

std::vector<std::string> string_list(const json& j) {
  if (j.is_string()) return {j.get<std::string>()};
  return j.get<std::vector<std::string>>();
}

}  // namespace

void RunConfig::validate() const {
  if (schemes.empty()) throw InvalidParameter("scheme list is empty");
  if (T.empty()) throw InvalidParameter("T list is empty");
  if (V0.empty()) throw InvalidParameter("V0 list is empty");
  if (detuning.empty()) throw InvalidParameter("detuning list is empty");
  if (tiers.empty()) throw InvalidParameter("tier list is empty");
  for (SchemeKind s : schemes)
    if (s == SchemeKind::custom) throw InvalidParameter("custom schemes cannot be run from a config");
  for (double t : T)
    if (!(t > 0.0)) throw InvalidParameter("T must be positive");
  for (double v : V0)
    if (!(v > 0.0)) throw InvalidParameter("V0 must be positive");
  if (!(t_S > 0.0 && t_S < 1.0)) throw InvalidParameter("t_S must lie in (0, 1)");
  if (grid.n < 8 || (grid.n & (grid.n - 1)) != 0)
    throw InvalidParameter("grid.n must be a power of two >= 8");
  if (grid.multi_well_n < 8 || (grid.multi_well_n & (grid.multi_well_n - 1)) != 0)
    throw InvalidParameter("grid.multi_well_n must be a power of two >= 8");
  if (!(grid.dt > 0.0)) throw InvalidParameter("grid.dt must be positive");
  if (grid.n_samples < 1 || level_samples < 1) throw InvalidParameter("sample counts must be >= 1");
  if (workers < 1) throw InvalidParameter("workers must be >= 1");
  if (!(C1 * C1 + 8.0 * C2 > 0.0)) throw InvalidParameter("C1^2 + 8 C2 must be positive");
}

json to_json(const RunConfig& c) {
  json j;
  std::vector<std::string> schemes, tiers;
  for (SchemeKind s : c.schemes) schemes.push_back(to_string(s));
  for (Tier t : c.tiers) tiers.push_back(to_string(t));
  j["schemes"] = schemes;
  j["T"] = c.T;
  j["t_S"] = c.t_S;
  j["V0"] = c.V0;
  j["detuning"] = c.detuning;
  j["tiers"] = tiers;
  j["grid"] = {{"n", c.grid.n},
               {"dt", c.grid.dt},
               {"boundary", boundary_name(c.grid.boundary)},
               {"n_samples", c.grid.n_samples},
               {"multi_well_n", c.grid.multi_well_n}};
  j["output"] = c.output;
  j["C1"] = c.C1;
  j["C2"] = c.C2;
  j["workers"] = c.workers;
  j["level_samples"] = c.level_samples;
  return j;
}

RunConfig from_json(const json& j, RunConfig c) {
  if (!j.is_object()) throw InvalidParameter("config must be a JSON object");
  try {
    for (const char* key : {"schemes", "scheme"})
      if (j.contains(key)) {
        c.schemes.clear();
        for (const auto& s : string_list(j[key])) c.schemes.push_back(scheme_from_string(s));
      }
    if (j.contains("T")) c.T = number_list(j["T"]);
    if (j.contains("t_S")) c.t_S = j["t_S"].get<double>();
    if (j.contains("V0")) c.V0 = number_list(j["V0"]);
    if (j.contains("detuning")) c.detuning = number_list(j["detuning"]);
    if (j.contains("tiers")) {
      c.tiers.clear();
      for (const auto& s : string_list(j["tiers"])) c.tiers.push_back(tier_from_string(s));
    }
    if (j.contains("grid")) {
      const json& g = j["grid"];
      if (g.contains("n")) c.grid.n = g["n"].get<int>();
      if (g.contains("dt")) c.grid.dt = g["dt"].get<double>();
      if (g.contains("boundary")) c.grid.boundary = boundary_from_string(g["boundary"]);
      if (g.contains("n_samples")) c.grid.n_samples = g["n_samples"].get<int>();
      if (g.contains("multi_well_n")) c.grid.multi_well_n = g["multi_well_n"].get<int>();
    }
    if (j.contains("output")) c.output = j["output"].get<std::string>();
    if (j.contains("C1")) c.C1 = j["C1"].get<double>();
    if (j.contains("C2")) c.C2 = j["C2"].get<double>();
    if (j.contains("workers")) c.workers = j["workers"].get<int>();
    if (j.contains("level_samples")) c.level_samples = j["level_samples"].get<int>();
  } catch (const json::exception& e) {
    throw InvalidParameter(std::string("bad config value: ") + e.what());
  }
  return c;
}

std::string config_hash(const RunConfig& config) {
  json j = to_json(config);
  j.erase("output");
  j.erase("workers");
  return hex64(fnv1a64(j.dump()));
}

json figure_preset(const std::string& id) {
  if (id == "couplings") return {{"T", json::array({300.0})}};
  if (id == "controls") return {{"T", json::array({300.0})}, {"V0", json::array({3.0})}};
  if (id == "populations")
    return {{"T", json::array({100.0, 500.0})},
            {"V0", json::array({3.0})},
            {"tiers", json::array({"4L", "grid"})}};
  if (id == "fidelity_vs_T") {
    std::vector<double> times;
    for (int i = 1; i <= 10; ++i) times.push_back(50.0 * i);
    return {{"T", times}, {"V0", json::array({2.0, 2.5, 3.0, 3.5})}, {"tiers", json::array({"grid"})},
            {"grid", {{"n", 64}}}};
  }
  if (id == "resonance") {
    std::vector<double> deltas;
    for (int i = -20; i <= 20; ++i) deltas.push_back(0.0025 * i);
    return {{"T", json::array({300.0})}, {"V0", json::array({3.0})}, {"detuning", deltas},
            {"tiers", json::array({"4L-detuned", "6L", "grid"})}, {"grid", {{"n", 64}}}};
  }
  if (id == "phase_map") return {{"schemes", json::array({"piecewise"})},
                                     {"T", json::array({300.0})},
                                     {"V0", json::array({3.0})}};
  throw InvalidParameter("unknown figure '" + id + "'");
}

json defaults_document() {
  json figures;
  for (const auto& id : figure_ids()) figures[id] = figure_preset(id);
  return {{"run", to_json(RunConfig{})}, {"figures", figures}};
}

namespace {

std::mutex w_mutex;
std::map<std::pair<double, double>, double> w_cache;

std::mutex spectrum_mutex;
std::map<double, std::shared_ptr<const WellSpectrum>> spectrum_cache;

std::shared_ptr<const WellSpectrum> spectrum_for(double V0) {
  std::lock_guard lock(spectrum_mutex);
  auto& slot = spectrum_cache[V0];
  if (!slot) slot = std::make_shared<WellSpectrum>(compute_spectrum(build_config(V0)));
  return slot;
}

}  // namespace

PulseSchedule make_schedule(SchemeKind scheme, double T, const RunConfig& config) {
  if (scheme == SchemeKind::piecewise) return piecewise_scheme(T, config.t_S * T);
  if (scheme != SchemeKind::polynomial) throw InvalidParameter("no built-in schedule for this scheme");
  double w;
  {
    std::lock_guard lock(w_mutex);
    auto key = std::make_pair(config.C1, config.C2);
    auto it = w_cache.find(key);
    if (it == w_cache.end()) it = w_cache.emplace(key, solve_polynomial_w(config.C1, config.C2)).first;
    w = it->second;
  }
  return polynomial_scheme_with_w(T, w, config.C1, config.C2);
}

PointRun run_point(const PointSpec& point, const RunConfig& config, bool want_trajectory) {
  const auto start = std::chrono::steady_clock::now();
  const LatticeConfig lattice = build_config(point.V0);
  const auto spectrum = spectrum_for(point.V0);
  const PulseSchedule schedule = make_schedule(point.scheme, point.T, config);
  const double omega_x = -spectrum->omega_d + point.detuning;

  PointRun run;
  PointResult& r = run.result;
  if (point.tier == Tier::grid) {
    const ControlSignals controls = map_controls(schedule, *spectrum, lattice, omega_x);
    const int samples = want_trajectory ? config.grid.n_samples : 1;
    SingleWellRun grid = single_well_run(controls, *spectrum, lattice, config.grid.n, config.grid.dt,
                                         samples, config.grid.boundary);
    const Populations& p = grid.final_populations;
    r.fidelity = p.fidelity;
    r.leakage = p.leakage;
    r.lz = grid.final_lz.lz;
    r.p00 = p.P(0, 0);
    r.p10 = p.P(1, 0);
    r.p01 = p.P(0, 1);
    r.p11 = p.P(1, 1);
    if (want_trajectory) {
      std::ostringstream csv;
      csv << "t,P00,P10,P01,P11,leakage,fidelity,Lz\n";
      for (const GridSample& s : grid.samples) {
        const Populations& q = s.populations;
        csv << num(s.t) << ',' << num(q.P(0, 0)) << ',' << num(q.P(1, 0)) << ','
            << num(q.P(0, 1)) << ',' << num(q.P(1, 1)) << ',' << num(q.leakage) << ','
            << num(q.fidelity) << ',' << num(s.lz) << '\n';
      }
      run.trajectory_csv = csv.str();
      run.final_state = std::move(grid.final_state);
    }
  } else {
    const LevelModel model = point.tier == Tier::rwa4       ? LevelModel::rwa4
                             : point.tier == Tier::detuned4 ? LevelModel::detuned4
                                                            : LevelModel::six;
    const int samples = want_trajectory ? config.level_samples : 1;
    const LevelTrajectory traj = run_level_model(model, schedule, *spectrum, omega_x, samples);
    const LevelObservables obs = populations_and_fidelity(traj.final_state());
    r.fidelity = obs.fidelity;
    r.p00 = obs.populations(level::k00);
    r.p10 = obs.populations(level::k10);
    r.p01 = obs.populations(level::k01);
    r.p11 = obs.populations(level::k11);
    r.leakage = std::max(0.0, 1.0 - r.p00 - r.p10 - r.p01 - r.p11);
    r.lz = std::numeric_limits<double>::quiet_NaN();
    if (want_trajectory) {
      std::ostringstream csv;
      write_trajectory_csv(csv, traj);
      run.trajectory_csv = csv.str();
    }
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return run;
}

void parallel_for(int n, int workers, const std::function<void(int)>& fn) {
  workers = std::max(1, std::min(workers, n));
  if (workers == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (int i = next++; i < n; i = next++) fn(i);
    });
  for (auto& t : pool) t.join();
}

json Manifest::to_json() const {
  json files_json = json::array();
  for (const auto& f : files)
    files_json.push_back({{"path", f.path}, {"bytes", f.bytes}, {"fnv1a64", f.fnv1a64}});
  return {{"tool", "shaken"},  {"version", kToolVersion}, {"figure", figure},
          {"config_hash", hash}, {"config", config},        {"files", files_json},
          {"points", points}};
}

namespace {

/// One sweep point of a figure: the work writes files relative to the output
/// directory and returns a JSON record of its results.
struct TaskFiles {
  std::vector<std::pair<std::string, std::string>> data;  ///< written by the runner
  std::vector<std::string> written;                       ///< already on disk
};

struct Task {
  std::string key;
  json meta;
  std::function<json(TaskFiles&)> work;
};

struct TaskOutcome {
  json record;
  std::vector<std::string> files;
};

json physics_settings(const RunConfig& c) {
  json j = to_json(c);
  for (const char* key : {"output", "workers", "schemes", "T", "V0", "detuning", "tiers"})
    j.erase(key);
  return j;
}

std::vector<TaskOutcome> run_tasks(const RunConfig& config, const std::string& figure,
                                   std::vector<Task>& tasks) {
  const fs::path root = config.output;
  const json settings = physics_settings(config);
  std::vector<TaskOutcome> outcomes(tasks.size());
  parallel_for(static_cast<int>(tasks.size()), config.workers, [&](int i) {
    Task& task = tasks[i];
    const std::string hash =
        hex64(fnv1a64(json{{"figure", figure}, {"point", task.meta}, {"settings", settings}}.dump()));
    const fs::path record_path = root / figure / "points" / (task.key + ".json");
    TaskOutcome& out = outcomes[i];

    if (fs::exists(record_path)) {
      try {
        json old = json::parse(read_file(record_path));
        bool complete = old.value("hash", "") == hash && old.value("status", "") == "ok";
        for (const auto& f : old.value("files", std::vector<std::string>{}))
          complete = complete && fs::exists(root / f);
        if (complete) {
          out.record = old;
          out.record["resumed"] = true;
          out.files = old["files"].get<std::vector<std::string>>();
          out.files.push_back(fs::relative(record_path, root).generic_string());
          return;
        }
      } catch (const std::exception&) {
        // unreadable record: recompute
      }
    }

    json record{{"key", task.key}, {"hash", hash}, {"point", task.meta}};
    try {
      TaskFiles files;
      record["result"] = task.work(files);
      std::vector<std::string> names;
      for (const auto& [name, bytes] : files.data) {
        write_file_atomic(root / name, bytes);
        names.push_back(name);
      }
      names.insert(names.end(), files.written.begin(), files.written.end());
      record["files"] = names;
      record["status"] = "ok";
      write_file_atomic(record_path, record.dump(2) + "\n");
      out.files = names;
      out.files.push_back(fs::relative(record_path, root).generic_string());
    } catch (const ControlInfeasible& e) {
      record["status"] = "failed";
      record["error"] = e.what();
      record["required_V0"] = e.required_v0();
    } catch (const std::exception& e) {
      record["status"] = "failed";
      record["error"] = e.what();
    }
    out.record = record;
  });
  return outcomes;
}

ManifestFile describe_file(const fs::path& root, const std::string& rel) {
  const std::string bytes = read_file(root / rel);
  return {rel, bytes.size(), hex64(fnv1a64(bytes))};
}

Manifest finish(const RunConfig& config, const std::string& figure,
                const std::vector<TaskOutcome>& outcomes,
                const std::vector<std::pair<std::string, std::string>>& summaries) {
  const fs::path root = config.output;
  Manifest m;
  m.figure = figure;
  m.hash = config_hash(config);
  m.config = to_json(config);
  for (const auto& [name, bytes] : summaries) {
    write_file_atomic(root / name, bytes);
    m.files.push_back(describe_file(root, name));
  }
  for (const auto& o : outcomes) {
    for (const auto& f : o.files) m.files.push_back(describe_file(root, f));
    json p = o.record;
    p.erase("files");
    m.points.push_back(p);
  }
  write_file_atomic(root / ("manifest_" + figure + ".json"), m.to_json().dump(2) + "\n");
  return m;
}

json result_json(const PointResult& r) {
  return {{"fidelity", r.fidelity}, {"leakage", r.leakage},
          {"Lz", std::isnan(r.lz) ? json(nullptr) : json(r.lz)},
          {"P00", r.p00}, {"P10", r.p10}, {"P01", r.p01}, {"P11", r.p11},
          {"seconds", r.seconds}};
}

std::string point_key(const PointSpec& p) {
  return to_string(p.scheme) + "_" + to_string(p.tier) + "_V0" + tag(p.V0) + "_T" + tag(p.T) +
         "_d" + tag(p.detuning);
}

json point_meta(const PointSpec& p) {
  return {{"scheme", to_string(p.scheme)}, {"tier", to_string(p.tier)}, {"V0", p.V0},
          {"T", p.T}, {"detuning", p.detuning}};
}

std::vector<PointSpec> cartesian(const RunConfig& c) {
  std::vector<PointSpec> points;
  for (SchemeKind s : c.schemes)
    for (Tier tier : c.tiers)
      for (double v : c.V0)
        for (double t : c.T)
          for (double d : c.detuning) points.push_back({s, tier, v, t, d});
  return points;
}

std::string schedule_csv(const PulseSchedule& schedule, int n = 2000) {
  std::ostringstream csv;
  csv << "t,Omega_x,Omega_rho,dOmega_x,dOmega_rho,d2Omega_x,d2Omega_rho\n";
  const double T = schedule.total_time();
  for (int i = 0; i <= n; ++i) {
    const double t = T * i / n;
    const CouplingJet jet = schedule.jet(t);
    csv << num(t) << ',' << num(jet.omega_x(0)) << ',' << num(jet.omega_rho(0)) << ','
        << num(jet.omega_x(1)) << ',' << num(jet.omega_rho(1)) << ',' << num(jet.omega_x(2))
        << ',' << num(jet.omega_rho(2)) << '\n';
  }
  return csv.str();
}

std::string lz_text(const json& r) { return r["Lz"].is_null() ? "nan" : num(r["Lz"].get<double>()); }

/// One CSV per (scheme, tier) listing the final values of every sweep point.
std::vector<std::pair<std::string, std::string>> sweep_summaries(
    const RunConfig& config, const std::string& figure, const std::vector<PointSpec>& points,
    const std::vector<TaskOutcome>& outcomes) {
  std::map<std::string, std::string> tables;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const std::string name =
        figure + "/" + to_string(points[i].scheme) + "_" + to_string(points[i].tier) + ".csv";
    std::string& table = tables[name];
    if (table.empty()) table = "V0,T,detuning,status,fidelity,leakage,Lz,P00,P10,P01,P11\n";
    const json& rec = outcomes[i].record;
    table += num(points[i].V0) + "," + num(points[i].T) + "," + num(points[i].detuning) + ",";
    if (rec.value("status", "") != "ok") {
      table += "failed,nan,nan,nan,nan,nan,nan,nan\n";
      continue;
    }
    const json& r = rec["result"];
    table += "ok," + num(r["fidelity"]) + "," + num(r["leakage"]) + "," + lz_text(r) + "," +
             num(r["P00"]) + "," + num(r["P10"]) + "," + num(r["P01"]) + "," + num(r["P11"]) +
             "\n";
  }
  (void)config;
  return {tables.begin(), tables.end()};
}

Manifest sweep_figure(const RunConfig& config, const std::string& figure, bool trajectories) {
  const std::vector<PointSpec> points = cartesian(config);
  std::vector<Task> tasks;
  for (const PointSpec& p : points) {
    const std::string key = point_key(p);
    tasks.push_back({key, point_meta(p), [&config, p, key, figure, trajectories](auto& files) {
                       PointRun run = run_point(p, config, trajectories);
                       if (trajectories) {
                         files.data.emplace_back(figure + "/" + key + ".csv", run.trajectory_csv);
                         if (run.final_state) {
                           const std::string bin = figure + "/" + key + "_final.bin";
                           write_snapshot(fs::path(config.output) / bin, *run.final_state,
                                          point_meta(p).dump());
                           files.written.push_back(bin);
                           files.written.push_back(bin + ".json");
                         }
                       }
                       return result_json(run.result);
                     }});
  }
  auto outcomes = run_tasks(config, figure, tasks);
  return finish(config, figure, outcomes, sweep_summaries(config, figure, points, outcomes));
}

Manifest couplings_figure(const RunConfig& config) {
  std::vector<Task> tasks;
  for (SchemeKind s : config.schemes)
    for (double T : config.T) {
      const std::string key = to_string(s) + "_T" + tag(T);
      tasks.push_back({key, {{"scheme", to_string(s)}, {"T", T}}, [&config, s, T, key](auto& files) {
                         const PulseSchedule schedule = make_schedule(s, T, config);
                         files.data.emplace_back("couplings/" + key + ".csv", schedule_csv(schedule));
                         json r{{"area_x", pulse_area(schedule, 0)},
                                {"area_rho", pulse_area(schedule, 1)}};
                         if (schedule.amplitude_w) r["W"] = *schedule.amplitude_w;
                         if (schedule.switch_time) r["t_S"] = *schedule.switch_time;
                         return r;
                       }});
    }
  auto outcomes = run_tasks(config, "couplings", tasks);
  return finish(config, "couplings", outcomes, {});
}

Manifest controls_figure(const RunConfig& config) {
  std::vector<Task> tasks;
  for (SchemeKind s : config.schemes)
    for (double V0 : config.V0)
      for (double T : config.T)
        for (double d : config.detuning) {
          const std::string key =
              to_string(s) + "_V0" + tag(V0) + "_T" + tag(T) + "_d" + tag(d);
          json meta{{"scheme", to_string(s)}, {"V0", V0}, {"T", T}, {"detuning", d}};
          tasks.push_back({key, meta, [&config, s, V0, T, d, key](auto& files) {
                             const LatticeConfig lattice = build_config(V0);
                             const auto spectrum = spectrum_for(V0);
                             const ControlSignals c =
                                 map_controls(make_schedule(s, T, config), *spectrum, lattice,
                                              -spectrum->omega_d + d);
                             std::ostringstream csv;
                             csv << "t,r_x,r_x_over_2ell,r_x_ddot,g_x,rho,V_rho\n";
                             double max_r = 0.0;
                             const int n = 6000;
                             for (int i = 0; i <= n; ++i) {
                               const double t = T * i / n;
                               const double r = c.r_x(t);
                               max_r = std::max(max_r, std::abs(r));
                               csv << num(t) << ',' << num(r) << ',' << num(r / (2 * lattice.ell))
                                   << ',' << num(c.r_x_ddot(t)) << ',' << num(c.g_x(t)) << ','
                                   << num(c.rho(t)) << ',' << num(c.v_rho(t)) << '\n';
                             }
                             files.data.emplace_back("controls/" + key + ".csv", csv.str());
                             return json{{"max_abs_r_x", max_r},
                                         {"max_r_x_over_2ell", max_r / (2 * lattice.ell)},
                                         {"omega_x", c.omega_x}};
                           }});
        }
  auto outcomes = run_tasks(config, "controls", tasks);
  return finish(config, "controls", outcomes, {});
}

Manifest phase_map_figure(const RunConfig& config) {
  std::vector<Task> tasks;
  for (SchemeKind s : config.schemes)
    for (double V0 : config.V0)
      for (double T : config.T)
        for (InitialMode mode : {InitialMode::delocalized, InitialMode::localized}) {
          const std::string mode_name =
              mode == InitialMode::delocalized ? "delocalized" : "localized";
          const std::string key =
              to_string(s) + "_V0" + tag(V0) + "_T" + tag(T) + "_" + mode_name;
          json meta{{"scheme", to_string(s)}, {"V0", V0}, {"T", T}, {"mode", mode_name}};
          tasks.push_back({key, meta, [&config, s, V0, T, mode, key, meta](auto& files) {
                             const LatticeConfig lattice = build_config(V0);
                             const auto spectrum = spectrum_for(V0);
                             const ControlSignals c = map_controls(make_schedule(s, T, config),
                                                                   *spectrum, lattice);
                             const MultiWellResult r =
                                 multi_well_run(c, *spectrum, lattice, mode,
                                                config.grid.multi_well_n, 3, config.grid.dt);
                             const GridSpec& spec = r.final_state.spec;
                             const Eigen::ArrayXd x = spec.x(), y = spec.y();
                             std::ostringstream map;
                             map << "x,y,phase_map\n";
                             for (int j = 0; j < spec.ny; ++j)
                               for (int i = 0; i < spec.nx; ++i)
                                 map << num(x(i)) << ',' << num(y(j)) << ','
                                     << num(r.phase_map(i, j)) << '\n';
                             files.data.emplace_back("phase_map/" + key + "_phase.csv", map.str());
                             std::ostringstream wells;
                             wells << "ix,iy,population,fidelity,Lz\n";
                             for (const WellReport& w : r.wells)
                               wells << w.ix << ',' << w.iy << ',' << num(w.population) << ','
                                     << num(w.fidelity) << ',' << num(w.lz) << '\n';
                             files.data.emplace_back("phase_map/" + key + "_wells.csv", wells.str());
                             const std::string bin = "phase_map/" + key + "_final.bin";
                             write_snapshot(fs::path(config.output) / bin, r.final_state, meta.dump());
                             files.written.push_back(bin);
                             files.written.push_back(bin + ".json");
                             return json{{"leakage", r.leakage}, {"checkerboard", r.checkerboard}};
                           }});
        }
  auto outcomes = run_tasks(config, "phase_map", tasks);
  return finish(config, "phase_map", outcomes, {});
}

}  // namespace

Manifest run_figure(const RunConfig& config, const std::string& figure_id) {
  config.validate();
  if (figure_id == "couplings") return couplings_figure(config);
  if (figure_id == "controls") return controls_figure(config);
  if (figure_id == "populations") return sweep_figure(config, "populations", true);
  if (figure_id == "fidelity_vs_T") return sweep_figure(config, "fidelity_vs_T", false);
  if (figure_id == "resonance") return sweep_figure(config, "resonance", false);
  if (figure_id == "phase_map") return phase_map_figure(config);
  throw InvalidParameter("unknown figure '" + figure_id + "'");
}

Manifest synthesize(const RunConfig& config) {
  config.validate();
  std::vector<Task> tasks;
  for (SchemeKind s : config.schemes)
    for (double T : config.T) {
      const std::string key = to_string(s) + "_T" + tag(T);
      tasks.push_back({key, {{"scheme", to_string(s)}, {"T", T}}, [&config, s, T, key](auto& files) {
                         json r;
                         if (s == SchemeKind::polynomial) {
                           WRootReport report;
                           solve_polynomial_w(config.C1, config.C2, &report);
                           r["W"] = report.chosen;
                           r["W_roots"] = report.roots;
                           r["W_rejected_count"] = report.rejected.size();
                           r["beta4_residual"] = report.residual;
                         }
                         const PulseSchedule schedule = make_schedule(s, T, config);
                         if (schedule.switch_time) r["t_S"] = *schedule.switch_time;
                         r["area_x"] = pulse_area(schedule, 0);
                         r["area_rho"] = pulse_area(schedule, 1);
                         const BoundaryReport b = boundary_check(schedule);
                         r["boundary_ok"] = b.all_passed();
                         for (const auto& c : b.conditions) r["boundary"][c.name] = c.magnitude;
                         if (schedule.trajectory)
                           r["invariant_residual"] = verify_invariant(schedule, *schedule.trajectory);
                         files.data.emplace_back("schedules/" + key + ".csv", schedule_csv(schedule));
                         files.data.emplace_back("schedules/" + key + ".json", r.dump(2) + "\n");
                         return r;
                       }});
    }
  auto outcomes = run_tasks(config, "schedules", tasks);
  return finish(config, "schedules", outcomes, {});
}

void SIParams::validate() const {
  if (!(mass_kg > 0.0 && wavelength_m > 0.0 && depth_er > 0.0 && omega_T > 0.0))
    throw InvalidParameter("SI parameters must be positive");
}

json SIResult::to_json() const {
  return {{"recoil_energy_J", recoil_energy_j},
          {"recoil_frequency_Hz", recoil_frequency_hz},
          {"omega_rad_per_s", omega_rad_s},
          {"V0_over_hbar_omega", v0_hbar_omega},
          {"omega_d_over_2pi_Hz", omega_d_over_2pi_hz},
          {"total_time_s", total_time_s},
          {"J0_J", j0_j},
          {"hbar_over_J0_s", hbar_over_j0_s},
          {"mott_ratio", mott_ratio},
          {"mott_ok", mott_ok}};
}

SIResult si_calculator(const SIParams& params) {
  params.validate();
  constexpr double hbar = 1.054571817e-34;
  const double k = 2.0 * std::numbers::pi / params.wavelength_m;
  SIResult r;
  r.recoil_energy_j = hbar * hbar * k * k / (2.0 * params.mass_kg);
  r.recoil_frequency_hz = r.recoil_energy_j / (2.0 * std::numbers::pi * hbar);
  const double v0 = params.depth_er * r.recoil_energy_j;
  r.omega_rad_s = std::sqrt(2.0 * v0 * k * k / params.mass_kg);
  r.v0_hbar_omega = v0 / (hbar * r.omega_rad_s);
  const WellSpectrum spectrum = compute_spectrum(build_config(r.v0_hbar_omega));
  r.omega_d_over_2pi_hz = spectrum.omega_d * r.omega_rad_s / (2.0 * std::numbers::pi);
  r.total_time_s = params.omega_T / r.omega_rad_s;
  const double s = params.depth_er;
  r.j0_j = 4.0 / std::sqrt(std::numbers::pi) * std::pow(s, 0.75) * std::exp(-2.0 * std::sqrt(s)) *
           r.recoil_energy_j;
  r.hbar_over_j0_s = hbar / r.j0_j;
  r.mott_ratio = r.total_time_s / r.hbar_over_j0_s;
  r.mott_ok = r.mott_ratio < 0.05;
  return r;
}

}  // namespace shaken
