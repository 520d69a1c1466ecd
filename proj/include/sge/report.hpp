#pragma once

#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>
#include <string>

#include "experiments.hpp"
#include "json.hpp"

#ifndef SGE_GIT_HASH
#define SGE_GIT_HASH "unknown"
#endif

namespace sge {

inline constexpr const char* kCsvHeader =
    "regime,epsilon,tau,kappa,M,horizon,err_h1_w,err_l2_z,err_total,order,wall_time_s,err_psi_h1";

namespace detail {

inline std::string fmt_num(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10e", v);
  return buf;
}

inline std::string fmt_modes(const std::vector<int>& m) {
  std::string s;
  for (std::size_t i = 0; i < m.size(); ++i) s += (i ? "x" : "") + std::to_string(m[i]);
  return s;
}

}  // namespace detail

/// One row per cell, row-major over (ε, column). With `timing` off the
/// wall_time_s column is written as 0 so reruns are byte-identical.
inline void write_csv(std::ostream& os, const ConvergenceTable& table, bool timing = true) {
  using detail::fmt_num;
  os << kCsvHeader << '\n';
  for (const auto& row : table.cells) {
    for (const auto& c : row) {
      os << to_string(c.regime) << ',' << fmt_num(c.epsilon) << ',' << fmt_num(c.tau) << ','
         << (c.kappa ? fmt_num(*c.kappa) : "") << ',' << detail::fmt_modes(c.modes) << ',' << fmt_num(c.horizon)
         << ',' << fmt_num(c.err_h1_w) << ',' << fmt_num(c.err_l2_z) << ',' << fmt_num(c.err_total) << ','
         << (c.order ? fmt_num(*c.order) : "") << ',' << (timing ? fmt_num(c.wall_time_s) : fmt_num(0.0)) << ','
         << fmt_num(c.err_psi_h1) << '\n';
    }
  }
}

struct ReportMetadata {
  std::string config_digest;
  std::string started_at;
  std::string finished_at;
  std::string git_hash = SGE_GIT_HASH;
};

inline nlohmann::json to_json(const ErrorRecord& c) {
  auto num = [](double v) -> nlohmann::json { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(); };
  nlohmann::json j{{"regime", to_string(c.regime)},
                   {"epsilon", c.epsilon},
                   {"tau", c.tau},
                   {"kappa", c.kappa ? nlohmann::json(*c.kappa) : nlohmann::json()},
                   {"M", c.modes},
                   {"horizon", c.horizon},
                   {"err_h1_w", num(c.err_h1_w)},
                   {"err_l2_z", num(c.err_l2_z)},
                   {"err_total", num(c.err_total)},
                   {"err_psi_h1", num(c.err_psi_h1)},
                   {"order", c.order ? nlohmann::json(*c.order) : nlohmann::json()},
                   {"wall_time_s", c.wall_time_s}};
  if (!c.ok()) j["failure"] = c.failure;
  return j;
}

inline nlohmann::json to_json(const ConvergenceTable& table, const ReportMetadata& meta) {
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& row : table.cells) {
    nlohmann::json r = nlohmann::json::array();
    for (const auto& c : row) r.push_back(to_json(c));
    cells.push_back(r);
  }
  nlohmann::json slopes = nlohmann::json::array();
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    auto s = table.row_slope(i);
    slopes.push_back(s ? nlohmann::json(*s) : nlohmann::json());
  }
  nlohmann::json j{{"kind", to_string(table.kind)},
                   {"regime", to_string(table.regime)},
                   {"metric", to_string(table.metric)},
                   {"rows", table.rows},
                   {"columns", table.columns},
                   {"cells", cells},
                   {"row_lsq_slopes", slopes},
                   {"metadata",
                    {{"git_hash", meta.git_hash},
                     {"config_digest", meta.config_digest},
                     {"started_at", meta.started_at},
                     {"finished_at", meta.finished_at}}}};
  if (table.rows.size() > 1) {
    auto s = table.epsilon_slope();
    j["epsilon_lsq_slope"] = s ? nlohmann::json(*s) : nlohmann::json();
  }
  return j;
}

/// Aligned text rendering: an error line and an order line per ε. Cells on
/// the resolved diagonal (κ ≈ κ₀ ε²/ε₀²) carry a `*` marker when `mark_diagonal`.
inline std::string render_table(const ConvergenceTable& table, bool mark_diagonal = false) {
  std::ostringstream os;
  char buf[64];
  const char* col_label = table.kind == SweepKind::space ? "M" : (table.regime == Regime::oscillatory ? "kappa" : "tau");
  std::snprintf(buf, sizeof buf, "%-14s", (std::string("eps \\ ") + col_label).c_str());
  os << buf;
  for (double c : table.columns) {
    std::snprintf(buf, sizeof buf, " %11.4g", c);
    os << buf;
  }
  os << '\n';
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%-14.6g", table.rows[i]);
    os << buf;
    for (std::size_t j = 0; j < table.columns.size(); ++j) {
      const bool star = mark_diagonal && i == j;
      const auto& c = table.cells[i][j];
      if (c.ok()) {
        std::snprintf(buf, sizeof buf, " %10.2E%c", c.value(table.metric), star ? '*' : ' ');
      } else {
        std::snprintf(buf, sizeof buf, " %10s%c", "FAILED", star ? '*' : ' ');
      }
      os << buf;
    }
    os << '\n';
    std::snprintf(buf, sizeof buf, "%-14s", "  order");
    os << buf;
    for (std::size_t j = 0; j < table.columns.size(); ++j) {
      const bool star = mark_diagonal && i == j;
      const auto& o = table.cells[i][j].order;
      if (o) {
        std::snprintf(buf, sizeof buf, " %10.2f%c", *o, star ? '*' : ' ');
      } else {
        std::snprintf(buf, sizeof buf, " %10s%c", "-", star ? '*' : ' ');
      }
      os << buf;
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace sge
