#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "integrator.hpp"

namespace sge {

/// Which composite the order fits and reports are based on.
///  - sum:    ||e_w||_H1 + ||e_z||_L2
///  - psi_h1: sqrt(||e_w||_H1² + ||e_z||_L2²), which equals ||ψ - ψ_ref||_H1
enum class Metric { sum, psi_h1 };

inline std::string to_string(Metric m) { return m == Metric::sum ? "sum" : "psi_h1"; }
inline Metric metric_from_string(const std::string& s) {
  if (s == "sum") return Metric::sum;
  if (s == "psi_h1") return Metric::psi_h1;
  throw std::invalid_argument("unknown metric '" + s + "'");
}

struct ErrorParts {
  double h1_w = 0.0;
  double l2_z = 0.0;
  double total() const { return h1_w + l2_z; }
  double psi_h1() const { return std::hypot(h1_w, l2_z); }
};

/// ||w - w_ref||_H1 and ||z - z_ref||_L2 on the coarse grid's modes. The
/// reference is truncated onto the coarse grid first.
inline ErrorParts error_norm(const FieldPair& coarse, const FieldPair& reference) {
  if (!coarse.w.grid().same_domain(reference.w.grid())) {
    throw DomainMismatchError("error_norm: coarse and reference live on different domains");
  }
  if (std::abs(coarse.t - reference.t) > 1e-9 * std::max(1.0, std::abs(reference.t))) {
    throw std::invalid_argument("error_norm: coarse time " + std::to_string(coarse.t) + " != reference time " +
                                std::to_string(reference.t));
  }
  const GridPtr& g = coarse.w.grid_ptr();
  const SpectralField dw = coarse.w - resample(reference.w, g);
  const SpectralField dz = coarse.z - resample(reference.z, g);
  return ErrorParts{sobolev_norm(dw, 1.0), sobolev_norm(dz, 0.0)};
}

/// H² / H¹ composite used for the additional 2D report.
inline ErrorParts error_norm_h2(const FieldPair& coarse, const FieldPair& reference) {
  const GridPtr& g = coarse.w.grid_ptr();
  const SpectralField dw = coarse.w - resample(reference.w, g);
  const SpectralField dz = coarse.z - resample(reference.z, g);
  return ErrorParts{sobolev_norm(dw, 2.0), sobolev_norm(dz, 1.0)};
}

struct ErrorRecord {
  Regime regime = Regime::long_time;
  double epsilon = 0.0;
  double tau = 0.0;
  std::optional<double> kappa;
  std::vector<int> modes;
  double horizon = 0.0;
  double err_h1_w = std::numeric_limits<double>::quiet_NaN();
  double err_l2_z = std::numeric_limits<double>::quiet_NaN();
  double err_total = std::numeric_limits<double>::quiet_NaN();
  double err_psi_h1 = std::numeric_limits<double>::quiet_NaN();
  std::optional<double> order;
  double wall_time_s = 0.0;
  std::string failure;

  bool ok() const { return failure.empty(); }
  double value(Metric m) const { return m == Metric::sum ? err_total : err_psi_h1; }

  void set_errors(const ErrorParts& p) {
    err_h1_w = p.h1_w;
    err_l2_z = p.l2_z;
    err_total = p.total();
    err_psi_h1 = p.psi_h1();
  }
};

/// order_j = ln(e_j / e_{j+1}) / ln(ratio); empty where either error is not positive.
inline std::vector<std::optional<double>> fit_order(const std::vector<double>& errors, double ratio) {
  if (!(ratio > 1.0)) throw std::invalid_argument("fit_order: ratio must exceed 1");
  std::vector<std::optional<double>> out;
  for (std::size_t j = 0; j + 1 < errors.size(); ++j) {
    const double a = errors[j], b = errors[j + 1];
    if (a > 0.0 && b > 0.0 && std::isfinite(a) && std::isfinite(b)) {
      out.emplace_back(std::log(a / b) / std::log(ratio));
    } else {
      out.emplace_back(std::nullopt);
    }
  }
  return out;
}

/// Least-squares slope of log(y) against log(x), skipping nonpositive points.
inline std::optional<double> loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (std::size_t i = 0; i < std::min(x.size(), y.size()); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0) || !std::isfinite(y[i])) continue;
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++n;
  }
  if (n < 2) return std::nullopt;
  const double denom = n * sxx - sx * sx;
  if (denom == 0.0) return std::nullopt;
  return (n * sxy - sx * sy) / denom;
}

enum class SweepKind { time, space, epsilon };

inline std::string to_string(SweepKind k) {
  switch (k) {
    case SweepKind::time: return "time";
    case SweepKind::space: return "space";
    case SweepKind::epsilon: return "epsilon";
  }
  return "?";
}

/// Rows are ε values; columns are steps (τ or κ) or mode counts M.
struct ConvergenceTable {
  SweepKind kind = SweepKind::time;
  Regime regime = Regime::long_time;
  Metric metric = Metric::sum;
  std::vector<double> rows;
  std::vector<double> columns;
  std::vector<std::vector<ErrorRecord>> cells;

  std::vector<double> row_errors(std::size_t i) const {
    std::vector<double> e;
    for (const auto& c : cells[i]) e.push_back(c.value(metric));
    return e;
  }
  std::vector<double> column_errors(std::size_t j) const {
    std::vector<double> e;
    for (const auto& r : cells) e.push_back(r[j].value(metric));
    return e;
  }

  /// Least-squares order along row i (slope against the refinement parameter).
  std::optional<double> row_slope(std::size_t i) const {
    auto s = loglog_slope(columns, row_errors(i));
    if (s && kind == SweepKind::space) return -*s;
    return s;
  }
  /// Least-squares slope of log error against log ε in column j.
  std::optional<double> epsilon_slope(std::size_t j = 0) const { return loglog_slope(rows, column_errors(j)); }

  std::size_t failed_cells() const {
    std::size_t n = 0;
    for (const auto& r : cells)
      for (const auto& c : r) n += c.ok() ? 0 : 1;
    return n;
  }
  std::size_t cell_count() const { return rows.size() * columns.size(); }
};

/// Runs independent tasks on up to `jobs` threads. Each task owns its output slot.
inline void run_parallel(std::vector<std::function<void()>>& tasks, unsigned jobs) {
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(tasks.size())));
  if (jobs <= 1) {
    for (auto& t : tasks) t();
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> workers;
  for (unsigned w = 0; w < jobs; ++w) {
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < tasks.size(); i = next++) tasks[i]();
    });
  }
  for (auto& w : workers) w.join();
}

struct SweepSpec {
  InitialData data = InitialData::paper_1d();
  /// Coarse-run grid for time/epsilon sweeps; domain source for space sweeps.
  PeriodicGrid grid;
  Regime regime = Regime::long_time;
  std::vector<double> epsilons;
  /// τ (long_time) or κ (oscillatory) for time/epsilon sweeps.
  std::vector<double> steps;
  /// Per-axis mode counts for space sweeps.
  std::vector<int> modes;
  double final_time = 1.0;
  /// τ_e or κ_e.
  double reference_step = 1e-4;
  /// Reference grid for space sweeps (time sweeps use the coarse grid).
  std::optional<PeriodicGrid> reference_grid;
  Metric metric = Metric::sum;
  unsigned jobs = 1;
};

namespace detail {

inline std::vector<int> modes_of(const PeriodicGrid& g) {
  std::vector<int> m;
  for (const auto& ax : g.axes()) m.push_back(ax.modes);
  return m;
}

inline PeriodicGrid with_modes(const PeriodicGrid& g, int modes) {
  std::vector<Axis> axes = g.axes();
  for (auto& ax : axes) ax.modes = modes;
  return PeriodicGrid(axes);
}

/// Final (w, z) of one run, or the failure message.
struct RunResult {
  std::optional<FieldPair> pair;
  double tau = 0.0;
  double seconds = 0.0;
  std::string failure;
};

inline RunResult run_to_horizon(const InitialData& data, const ModelParams& params, double step) {
  RunResult r;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    StepParams sp =
        StepParams::fit_horizon(params.grid, params.physical_horizon(), physical_step(params.regime, step, params.epsilon));
    r.tau = sp.tau();
    Trajectory traj = evolve(assemble_psi0(data, params), sp);
    r.pair = recover_wz(traj.final_state());
  } catch (const std::exception& e) {
    r.failure = e.what();
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

inline ErrorRecord make_record(const SweepSpec& spec, double eps, const ModelParams& params, const RunResult& run,
                               const RunResult& ref) {
  ErrorRecord rec;
  rec.regime = spec.regime;
  rec.epsilon = eps;
  rec.tau = run.tau;
  if (spec.regime == Regime::oscillatory) rec.kappa = eps * eps * run.tau;
  if (params.grid) rec.modes = modes_of(*params.grid);
  rec.horizon = params.physical_horizon();
  rec.wall_time_s = run.seconds;
  if (!ref.failure.empty()) {
    rec.failure = "reference: " + ref.failure;
  } else if (!run.failure.empty()) {
    rec.failure = run.failure;
  } else {
    try {
      rec.set_errors(error_norm(*run.pair, *ref.pair));
    } catch (const std::exception& e) {
      rec.failure = e.what();
    }
  }
  return rec;
}

inline void fill_row_orders(ConvergenceTable& table) {
  for (auto& row : table.cells) {
    for (std::size_t j = 1; j < row.size(); ++j) {
      const double a = row[j - 1].value(table.metric), b = row[j].value(table.metric);
      double ratio = table.columns[j - 1] / table.columns[j];
      if (table.kind == SweepKind::space) ratio = 1.0 / ratio;
      const auto o = fit_order({a, b}, ratio);
      row[j].order = o.front();
    }
  }
}

}  // namespace detail

/// One reference per ε (fine step, same grid), one coarse run per (ε, step).
/// Errors at t = T/ε² (long_time) or s = T (oscillatory).
inline ConvergenceTable temporal_sweep(const SweepSpec& spec) {
  if (spec.epsilons.empty() || spec.steps.empty()) throw std::invalid_argument("temporal_sweep: empty sweep");
  ConvergenceTable table;
  table.kind = SweepKind::time;
  table.regime = spec.regime;
  table.metric = spec.metric;
  table.rows = spec.epsilons;
  table.columns = spec.steps;
  const GridPtr grid = make_grid(spec.grid);

  std::vector<detail::RunResult> refs(spec.epsilons.size());
  std::vector<std::function<void()>> ref_jobs;
  for (std::size_t i = 0; i < spec.epsilons.size(); ++i) {
    ref_jobs.emplace_back([&, i] {
      ModelParams p{spec.epsilons[i], grid, spec.regime, spec.final_time};
      refs[i] = detail::run_to_horizon(spec.data, p, spec.reference_step);
    });
  }
  run_parallel(ref_jobs, spec.jobs);

  table.cells.assign(spec.epsilons.size(), std::vector<ErrorRecord>(spec.steps.size()));
  std::vector<std::function<void()>> cell_jobs;
  for (std::size_t i = 0; i < spec.epsilons.size(); ++i) {
    for (std::size_t j = 0; j < spec.steps.size(); ++j) {
      cell_jobs.emplace_back([&, i, j] {
        ModelParams p{spec.epsilons[i], grid, spec.regime, spec.final_time};
        const auto run = detail::run_to_horizon(spec.data, p, spec.steps[j]);
        table.cells[i][j] = detail::make_record(spec, spec.epsilons[i], p, run, refs[i]);
      });
    }
  }
  run_parallel(cell_jobs, spec.jobs);
  detail::fill_row_orders(table);
  return table;
}

/// Single step size, several ε; the order column holds the ε-order between
/// consecutive rows.
inline ConvergenceTable epsilon_sweep(const SweepSpec& spec) {
  if (spec.steps.size() != 1) throw std::invalid_argument("epsilon_sweep: exactly one step size expected");
  ConvergenceTable table = temporal_sweep(spec);
  table.kind = SweepKind::epsilon;
  for (auto& row : table.cells) row[0].order.reset();
  for (std::size_t i = 1; i < table.rows.size(); ++i) {
    const double a = table.cells[i - 1][0].value(table.metric), b = table.cells[i][0].value(table.metric);
    const double ratio = table.rows[i - 1] / table.rows[i];
    if (ratio > 1.0) table.cells[i][0].order = fit_order({a, b}, ratio).front();
  }
  return table;
}

/// Errors against one fine-grid reference, every run with the reference step.
inline ConvergenceTable spatial_sweep(const SweepSpec& spec) {
  if (spec.epsilons.empty() || spec.modes.empty()) throw std::invalid_argument("spatial_sweep: empty sweep");
  ConvergenceTable table;
  table.kind = SweepKind::space;
  table.regime = spec.regime;
  table.metric = spec.metric;
  table.rows = spec.epsilons;
  for (int m : spec.modes) table.columns.push_back(m);
  const GridPtr ref_grid = make_grid(spec.reference_grid ? *spec.reference_grid : spec.grid);

  std::vector<detail::RunResult> refs(spec.epsilons.size());
  std::vector<std::function<void()>> ref_jobs;
  for (std::size_t i = 0; i < spec.epsilons.size(); ++i) {
    ref_jobs.emplace_back([&, i] {
      ModelParams p{spec.epsilons[i], ref_grid, spec.regime, spec.final_time};
      refs[i] = detail::run_to_horizon(spec.data, p, spec.reference_step);
    });
  }
  run_parallel(ref_jobs, spec.jobs);

  table.cells.assign(spec.epsilons.size(), std::vector<ErrorRecord>(spec.modes.size()));
  std::vector<std::function<void()>> cell_jobs;
  for (std::size_t i = 0; i < spec.epsilons.size(); ++i) {
    for (std::size_t j = 0; j < spec.modes.size(); ++j) {
      cell_jobs.emplace_back([&, i, j] {
        ModelParams p{spec.epsilons[i], nullptr, spec.regime, spec.final_time};
        detail::RunResult run;
        try {
          p.grid = make_grid(detail::with_modes(*ref_grid, spec.modes[j]));
          run = detail::run_to_horizon(spec.data, p, spec.reference_step);
        } catch (const std::exception& e) {
          run.failure = e.what();
        }
        table.cells[i][j] = detail::make_record(spec, spec.epsilons[i], p, run, refs[i]);
        if (!p.grid) table.cells[i][j].modes = {spec.modes[j]};
      });
    }
  }
  run_parallel(cell_jobs, spec.jobs);
  detail::fill_row_orders(table);
  return table;
}

}  // namespace sge
