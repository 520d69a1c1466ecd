#pragma once

#include <cstdint>
#include <cstdio>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "experiments.hpp"
#include "json.hpp"

namespace sge {

/// Invalid configuration; `field` names the offending key.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::invalid_argument(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

struct RunConfig {
  Regime regime = Regime::long_time;
  std::string preset;  // paper_1d | paper_2d | paper_osc | zero; empty when `data` is set
  std::string data;    // tabulated CSV path
  std::vector<std::pair<double, double>> domain;  // per-axis (a, b); preset domain when empty
  std::vector<double> epsilon;
  std::vector<double> tau;  // τ (long_time) or κ (oscillatory)
  std::vector<int> modes;   // per-axis M
  double final_time = 1.0;
  std::optional<double> tau_e;
  std::optional<int> modes_e;
  std::string out = ".";
  unsigned jobs = 1;
  int snapshots = 100;  // trajectory samples written by `solve`, besides t = 0
  Metric metric = Metric::sum;
  bool timing = true;
  bool deterministic = true;

  bool operator==(const RunConfig&) const = default;

  InitialData initial_data() const {
    if (!data.empty()) return InitialData::tabulated(data);
    if (preset == "paper_1d") return InitialData::paper_1d();
    if (preset == "paper_2d") return InitialData::paper_2d();
    if (preset == "paper_osc") return InitialData::paper_osc();
    if (preset == "zero") return InitialData::zero();
    throw ConfigError("preset", "unknown preset '" + preset + "'");
  }

  double reference_step() const { return tau_e.value_or(regime == Regime::oscillatory ? 1e-6 : 1e-4); }

  /// Grid with the configured domain and `m` modes per axis.
  PeriodicGrid grid(int m) const {
    std::vector<Axis> axes;
    for (const auto& [a, b] : domain) axes.push_back(Axis{a, b, m});
    return PeriodicGrid(axes);
  }

  /// Fills defaults that depend on the preset and checks every field.
  void resolve() {
    if (!deterministic) throw ConfigError("deterministic", "runs are always deterministic");
    if (preset.empty() && data.empty()) preset = regime == Regime::oscillatory ? "paper_osc" : "paper_1d";
    if (!preset.empty() && !data.empty()) throw ConfigError("data", "give either a preset or tabulated data");
    std::optional<PeriodicGrid> preset_grid;
    if (!preset.empty()) {
      if (preset != "paper_1d" && preset != "paper_2d" && preset != "paper_osc" && preset != "zero") {
        throw ConfigError("preset", "unknown preset '" + preset + "'");
      }
      preset_grid = initial_data().default_grid();
    }
    if (domain.empty()) {
      if (preset_grid) {
        for (const auto& ax : preset_grid->axes()) domain.emplace_back(ax.a, ax.b);
      } else {
        domain.emplace_back(0.0, 2.0 * std::numbers::pi);
      }
    }
    if (domain.size() > 2) throw ConfigError("domain", "at most two axes");
    for (const auto& [a, b] : domain) {
      if (!(b > a)) throw ConfigError("domain", "each axis needs b > a");
    }
    if (modes.empty()) modes = {preset_grid ? preset_grid->axis(0).modes : 64};
    if (!modes_e) modes_e = preset_grid ? preset_grid->axis(0).modes : *std::max_element(modes.begin(), modes.end());
    if (epsilon.empty()) epsilon = {1.0};
    if (tau.empty()) tau = {regime == Regime::oscillatory ? 1e-3 : 1e-2};
    validate();
  }

  void validate() const {
    auto positive = [](const std::vector<double>& v, const char* name) {
      if (v.empty()) throw ConfigError(name, "list must not be empty");
      for (double x : v) {
        if (!(x > 0.0) || !std::isfinite(x)) throw ConfigError(name, "values must be positive");
      }
    };
    positive(epsilon, "epsilon");
    for (double e : epsilon) {
      if (e > 1.0) throw ConfigError("epsilon", "values must lie in (0, 1]");
    }
    positive(tau, "tau");
    if (modes.empty()) throw ConfigError("M", "list must not be empty");
    for (int m : modes) {
      if (m < 4 || m % 2 != 0) throw ConfigError("M", "mode counts must be even and >= 4, got " + std::to_string(m));
    }
    if (modes_e && (*modes_e < 4 || *modes_e % 2 != 0)) throw ConfigError("M_e", "mode count must be even and >= 4");
    if (!(final_time > 0.0)) throw ConfigError("T", "must be positive");
    if (tau_e && !(*tau_e > 0.0)) throw ConfigError("tau_e", "must be positive");
    if (jobs < 1) throw ConfigError("jobs", "must be at least 1");
    if (snapshots < 1) throw ConfigError("snapshots", "must be at least 1");
  }

  nlohmann::json to_json() const {
    nlohmann::json dom = nlohmann::json::array();
    for (const auto& [a, b] : domain) dom.push_back({a, b});
    nlohmann::json j{{"regime", to_string(regime)},
                     {"preset", preset},
                     {"data", data},
                     {"domain", dom},
                     {"epsilon", epsilon},
                     {"tau", tau},
                     {"M", modes},
                     {"T", final_time},
                     {"tau_e", tau_e ? nlohmann::json(*tau_e) : nlohmann::json()},
                     {"M_e", modes_e ? nlohmann::json(*modes_e) : nlohmann::json()},
                     {"out", out},
                     {"jobs", jobs},
                     {"snapshots", snapshots},
                     {"metric", to_string(metric)},
                     {"timing", timing},
                     {"deterministic", deterministic}};
    return j;
  }

  static RunConfig from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("config", "expected a JSON object");
    RunConfig c;
    for (const auto& [key, value] : j.items()) {
      try {
        if (key == "regime") {
          c.regime = regime_from_string(value.get<std::string>());
        } else if (key == "preset") {
          c.preset = value.get<std::string>();
        } else if (key == "data") {
          c.data = value.get<std::string>();
        } else if (key == "domain") {
          c.domain.clear();
          for (const auto& ab : value) c.domain.emplace_back(ab.at(0).get<double>(), ab.at(1).get<double>());
        } else if (key == "epsilon") {
          c.epsilon = as_list<double>(value);
        } else if (key == "tau" || key == "kappa") {
          c.tau = as_list<double>(value);
        } else if (key == "M") {
          c.modes = as_list<int>(value);
        } else if (key == "T") {
          c.final_time = value.get<double>();
        } else if (key == "tau_e" || key == "kappa_e") {
          if (!value.is_null()) c.tau_e = value.get<double>();
        } else if (key == "M_e") {
          if (!value.is_null()) c.modes_e = value.get<int>();
        } else if (key == "out") {
          c.out = value.get<std::string>();
        } else if (key == "jobs") {
          const auto n = value.get<std::int64_t>();
          if (n < 1) throw ConfigError("jobs", "must be at least 1");
          c.jobs = static_cast<unsigned>(n);
        } else if (key == "snapshots") {
          c.snapshots = value.get<int>();
        } else if (key == "metric") {
          c.metric = metric_from_string(value.get<std::string>());
        } else if (key == "timing") {
          c.timing = value.get<bool>();
        } else if (key == "deterministic") {
          c.deterministic = value.get<bool>();
        } else {
          throw ConfigError(key, "unknown configuration key");
        }
      } catch (const ConfigError&) {
        throw;
      } catch (const std::exception& e) {
        throw ConfigError(key, e.what());
      }
    }
    return c;
  }

  /// First 8 hex digits of FNV-1a over the compact JSON of the resolved config,
  /// leaving out fields that cannot change results (out, jobs).
  std::string digest() const {
    nlohmann::json j = to_json();
    j.erase("out");
    j.erase("jobs");
    const std::string s = j.dump();
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : s) {
      h ^= ch;
      h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf, 8);
  }

 private:
  template <class T>
  static std::vector<T> as_list(const nlohmann::json& v) {
    if (v.is_array()) {
      if (v.empty()) throw std::invalid_argument("list must not be empty");
      return v.get<std::vector<T>>();
    }
    return {v.get<T>()};
  }
};

}  // namespace sge
