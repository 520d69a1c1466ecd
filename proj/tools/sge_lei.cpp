// sge_lei: command-line driver for the LEI-FP solver and its convergence studies.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sge/oscillatory.hpp"
#include "sge/report.hpp"
#include "sge/run_config.hpp"

namespace fs = std::filesystem;
using namespace sge;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitNumerical = 1;
constexpr int kExitConfig = 2;

/// Fields that may be set from the command line on top of the config file.
struct Overrides {
  std::optional<std::string> regime, preset, data, out, metric;
  std::vector<double> epsilon, tau;
  std::vector<int> modes;
  std::optional<double> final_time, tau_e;
  std::optional<int> modes_e, snapshots;
  std::optional<unsigned> jobs;
  bool no_timing = false;
};

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

unsigned jobs_from_env() {
  const char* env = std::getenv("SGE_LEI_JOBS");
  if (!env || !*env) return 1;
  char* end = nullptr;
  const long n = std::strtol(env, &end, 10);
  if (*end != '\0' || n < 1) throw ConfigError("SGE_LEI_JOBS", std::string("expected a positive integer, got '") + env + "'");
  return static_cast<unsigned>(n);
}

/// Fields present in the file replace those of `base`.
RunConfig load_config(const std::string& path, const RunConfig& base) {
  if (path.empty()) return base;
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ConfigError("config", std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config", "expected a JSON object");
  nlohmann::json merged = base.to_json();
  if (j.contains("data") && !j.contains("preset")) merged["preset"] = "";
  if (j.contains("kappa")) merged.erase("tau");
  if (j.contains("kappa_e")) merged.erase("tau_e");
  merged.update(j);
  return RunConfig::from_json(merged);
}

void apply(const Overrides& o, RunConfig& c) {
  try {
    if (o.regime) c.regime = regime_from_string(*o.regime);
  } catch (const std::exception& e) {
    throw ConfigError("regime", e.what());
  }
  try {
    if (o.metric) c.metric = metric_from_string(*o.metric);
  } catch (const std::exception& e) {
    throw ConfigError("metric", e.what());
  }
  if (o.preset) {
    c.preset = *o.preset;
    c.data.clear();
  }
  if (o.data) {
    c.data = *o.data;
    c.preset.clear();
  }
  if (o.out) c.out = *o.out;
  if (!o.epsilon.empty()) c.epsilon = o.epsilon;
  if (!o.tau.empty()) c.tau = o.tau;
  if (!o.modes.empty()) c.modes = o.modes;
  if (o.final_time) c.final_time = *o.final_time;
  if (o.tau_e) c.tau_e = *o.tau_e;
  if (o.modes_e) c.modes_e = *o.modes_e;
  if (o.snapshots) c.snapshots = *o.snapshots;
  if (o.jobs) c.jobs = *o.jobs;
  if (o.no_timing) c.timing = false;
}

fs::path output_path(const RunConfig& c, const std::string& mode, const std::string& ext) {
  return fs::path(c.out) / (to_string(c.regime) + "_" + mode + "_" + c.digest() + "." + ext);
}

std::ofstream open_output(const fs::path& p, std::ios::openmode mode = std::ios::out) {
  std::ofstream f(p, mode);
  if (!f) throw std::runtime_error("cannot write '" + p.string() + "'");
  return f;
}

void require_single(const RunConfig& c) {
  if (c.epsilon.size() != 1) throw ConfigError("epsilon", "solve takes a single value");
  if (c.tau.size() != 1) throw ConfigError("tau", "solve takes a single value");
  if (c.modes.size() != 1) throw ConfigError("M", "solve takes a single value");
}

// ---------------------------------------------------------------------------

int cmd_solve(const RunConfig& c) {
  require_single(c);
  const double eps = c.epsilon[0];
  ModelParams params{eps, make_grid(c.grid(c.modes[0])), c.regime, c.final_time};
  const InitialData data = c.initial_data();
  std::optional<StepParams> sp;
  try {
    sp.emplace(StepParams::fit_horizon(params.grid, params.physical_horizon(), physical_step(c.regime, c.tau[0], eps)));
  } catch (const HorizonError& e) {
    throw ConfigError("tau", e.what());
  }

  const std::string started = utc_now();
  Observers obs;
  const std::size_t n = sp->n_steps();
  const std::size_t every = std::max<std::size_t>(1, n / static_cast<std::size_t>(c.snapshots));
  for (std::size_t k = every; k < n; k += every) obs.snapshot_steps.insert(k);
  obs.diagnostics_every = every;
  const PsiState psi0 = assemble_psi0(data, params);
  const Trajectory traj = evolve(psi0, *sp, obs);

  double residue = 0.0;
  const PsiState& last = traj.final_state();
  const FieldPair wz = recover_wz(last, &residue);
  const double e0 = traj.diagnostics.front().energy;
  const double e1 = traj.diagnostics.back().energy;
  double max_drift = 0.0;
  for (const auto& d : traj.diagnostics) max_drift = std::max(max_drift, std::abs(d.energy - e0));
  const double scale = e0 != 0.0 ? std::abs(e0) : 1.0;

  fs::create_directories(c.out);
  {
    auto f = open_output(output_path(c, "solve", "csv"));
    write_trajectory_csv(f, traj);
  }
  {
    auto f = open_output(output_path(c, "solve", "bin"), std::ios::out | std::ios::binary);
    write_trajectory_binary(f, traj);
  }

  nlohmann::json diag = nlohmann::json::array();
  for (const auto& d : traj.diagnostics) {
    diag.push_back({{"t", d.t}, {"step", d.step}, {"energy", d.energy}, {"psi_l2", d.psi_l2}, {"psi_h1", d.psi_h1}});
  }
  nlohmann::json summary{
      {"config", c.to_json()},
      {"tau", sp->tau()},
      {"steps", n},
      {"final_time", last.t},
      {"norms",
       {{"psi_l2", sobolev_norm(last.psi, 0.0)},
        {"psi_h1", sobolev_norm(last.psi, 1.0)},
        {"w_h1", sobolev_norm(wz.w, 1.0)},
        {"z_l2", sobolev_norm(wz.z, 0.0)}}},
      {"energy", {{"initial", e0}, {"final", e1}, {"drift", std::abs(e1 - e0) / scale}, {"max_drift", max_drift / scale}}},
      {"realness_residue", residue},
      {"diagnostics", diag},
      {"metadata", {{"git_hash", SGE_GIT_HASH}, {"config_digest", c.digest()}, {"started_at", started}, {"finished_at", utc_now()}}}};
  {
    auto f = open_output(output_path(c, "solve", "json"));
    f << summary.dump(2) << '\n';
  }

  std::printf("steps %zu  tau %.6g  t %.6g\n", n, sp->tau(), last.t);
  std::printf("|psi|_H1 %.6e  |w|_H1 %.6e  |z|_L2 %.6e\n", summary["norms"]["psi_h1"].get<double>(),
              summary["norms"]["w_h1"].get<double>(), summary["norms"]["z_l2"].get<double>());
  std::printf("energy %.10e -> %.10e  relative drift %.3e\n", e0, e1, std::abs(e1 - e0) / scale);
  std::printf("wrote %s.{csv,bin,json}\n", (fs::path(c.out) / (to_string(c.regime) + "_solve_" + c.digest())).c_str());
  return kExitOk;
}

int emit_table(const RunConfig& c, const ConvergenceTable& t, const std::string& mode, const std::string& started,
               bool mark_diagonal) {
  fs::create_directories(c.out);
  {
    auto f = open_output(output_path(c, mode, "csv"));
    write_csv(f, t, c.timing);
  }
  {
    auto f = open_output(output_path(c, mode, "json"));
    f << to_json(t, ReportMetadata{c.digest(), started, utc_now()}).dump(2) << '\n';
  }
  std::cout << render_table(t, mark_diagonal);
  if (t.kind != SweepKind::epsilon) {
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
      if (auto s = t.row_slope(i)) std::printf("lsq order (eps = %g): %.3f\n", t.rows[i], *s);
    }
  } else if (auto s = t.epsilon_slope()) {
    std::printf("log-log slope in epsilon: %.3f\n", *s);
  }
  std::printf("wrote %s.{csv,json}\n", (fs::path(c.out) / (to_string(c.regime) + "_" + mode + "_" + c.digest())).c_str());

  const std::size_t failed = t.failed_cells();
  if (failed > 0) {
    for (const auto& row : t.cells)
      for (const auto& cell : row)
        if (!cell.ok()) std::fprintf(stderr, "warning: cell eps=%g tau=%g failed: %s\n", cell.epsilon, cell.tau, cell.failure.c_str());
    if (failed == t.cell_count()) {
      std::fprintf(stderr, "error: all %zu cells failed\n", failed);
      return kExitNumerical;
    }
    std::fprintf(stderr, "warning: %zu of %zu cells failed\n", failed, t.cell_count());
  }
  return kExitOk;
}

int cmd_converge(const RunConfig& c, const std::string& mode) {
  SweepSpec s;
  s.data = c.initial_data();
  s.regime = c.regime;
  s.epsilons = c.epsilon;
  s.steps = c.tau;
  s.final_time = c.final_time;
  s.reference_step = c.reference_step();
  s.metric = c.metric;
  s.jobs = c.jobs;
  const std::string started = utc_now();
  ConvergenceTable t;
  if (mode == "space") {
    s.grid = c.grid(*c.modes_e);
    s.modes = c.modes;
    t = spatial_sweep(s);
  } else {
    if (c.modes.size() != 1) throw ConfigError("M", mode + " sweeps take a single mode count");
    s.grid = c.grid(c.modes[0]);
    if (mode == "epsilon") {
      if (c.tau.size() != 1) throw ConfigError("tau", "epsilon sweeps take a single step size");
      t = epsilon_sweep(s);
    } else {
      t = temporal_sweep(s);
    }
  }
  return emit_table(c, t, mode, started, false);
}

/// The oscillatory table: ε = 2^-k against κ = 0.1/4^k, k = 0..5, on (0,1) with M = 128.
RunConfig table1_config() {
  RunConfig c;
  c.regime = Regime::oscillatory;
  c.preset = "paper_osc";
  c.domain = {{0.0, 1.0}};
  for (int k = 0; k <= 5; ++k) {
    c.epsilon.push_back(std::ldexp(1.0, -k));
    c.tau.push_back(0.1 / std::pow(4.0, k));
  }
  c.modes = {128};
  c.tau_e = 1e-6;
  c.metric = Metric::psi_h1;
  return c;
}

int cmd_table1(const RunConfig& c) {
  if (c.modes.size() != 1) throw ConfigError("M", "table1 takes a single mode count");
  SweepSpec s;
  s.data = c.initial_data();
  s.grid = c.grid(c.modes[0]);
  s.regime = c.regime;
  s.epsilons = c.epsilon;
  s.steps = c.tau;
  s.final_time = c.final_time;
  s.reference_step = c.reference_step();
  s.metric = c.metric;
  s.jobs = c.jobs;
  const std::string started = utc_now();
  return emit_table(c, temporal_sweep(s), "table1", started, true);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LEI-FP solver for the sine-Gordon equation with weak nonlinearity"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  bool print_config = false;
  Overrides o;
  app.add_option("--config", config_path, "JSON configuration file");
  app.add_flag("--print-config", print_config, "Print the resolved configuration and exit");
  app.add_option("--out", o.out, "Output directory");
  app.add_option("--jobs", o.jobs, "Parallel sweep cells (default: $SGE_LEI_JOBS or 1)");
  app.add_option("--regime", o.regime, "long_time | oscillatory");
  app.add_option("--preset", o.preset, "paper_1d | paper_2d | paper_osc | zero");
  app.add_option("--data", o.data, "Tabulated initial data CSV (x[,y],phi,gamma)");
  app.add_option("--epsilon", o.epsilon, "epsilon values")->delimiter(',');
  app.add_option("--tau,--kappa", o.tau, "Step sizes (kappa in the oscillatory regime)")->delimiter(',');
  app.add_option("--M", o.modes, "Mode counts per axis")->delimiter(',');
  app.add_option("--T", o.final_time, "Horizon T; runs end at t = T/eps^2");
  app.add_option("--tau-e,--kappa-e", o.tau_e, "Reference step");
  app.add_option("--M-e", o.modes_e, "Reference mode count (space sweeps)");
  app.add_option("--metric", o.metric, "sum | psi_h1");
  app.add_option("--snapshots", o.snapshots, "Trajectory samples written by solve");
  app.add_flag("--no-timing", o.no_timing, "Write wall_time_s as 0 so reruns are byte-identical");

  auto* solve = app.add_subcommand("solve", "Single run: trajectory export and summary JSON");
  auto* converge = app.add_subcommand("converge", "Convergence sweep in tau, M or epsilon");
  std::string mode;
  converge->add_option("--mode", mode, "time | space | epsilon")
      ->required()
      ->check(CLI::IsMember({"time", "space", "epsilon"}));
  auto* table1 = app.add_subcommand("table1", "Oscillatory-regime error table with diagonal marker");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    RunConfig base = table1->parsed() ? table1_config() : RunConfig{};
    base.jobs = jobs_from_env();
    RunConfig c = load_config(config_path, base);
    apply(o, c);
    c.resolve();
    if (print_config) {
      std::cout << c.to_json().dump(2) << '\n';
      return kExitOk;
    }
    if (solve->parsed()) return cmd_solve(c);
    if (converge->parsed()) return cmd_converge(c, mode);
    return cmd_table1(c);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const TabulatedDataError& e) {
    std::fprintf(stderr, "config error: data: %s\n", e.what());
    return kExitConfig;
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "numerical failure at step %zu: %s\n", e.step(), e.what());
    return kExitNumerical;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitNumerical;
  }
}
