#pragma once

#include <cmath>
#include <cstddef>
#include <fstream>
#include <functional>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "spectral_field.hpp"

namespace sge {

enum class Regime { long_time, oscillatory };

inline std::string to_string(Regime r) { return r == Regime::long_time ? "long_time" : "oscillatory"; }

inline Regime regime_from_string(const std::string& s) {
  if (s == "long_time") return Regime::long_time;
  if (s == "oscillatory") return Regime::oscillatory;
  throw std::invalid_argument("unknown regime '" + s + "'");
}

/// Parameters of the rescaled problem w_tt - Δw + sin(εw)/ε = 0.
struct ModelParams {
  double epsilon = 1.0;
  GridPtr grid;
  Regime regime = Regime::long_time;
  /// T: the run ends at t = T/ε² (long_time) or at s = T, i.e. again t = T/ε² (oscillatory).
  double final_time = 1.0;

  void validate() const {
    if (!(epsilon > 0.0 && epsilon <= 1.0)) throw std::invalid_argument("ModelParams: epsilon must lie in (0, 1]");
    if (!(final_time > 0.0)) throw std::invalid_argument("ModelParams: final time must be positive");
    if (!grid) throw std::invalid_argument("ModelParams: grid not set");
  }

  /// Horizon in the time variable t of the rescaled equation.
  double physical_horizon() const { return final_time / (epsilon * epsilon); }
};

// ---------------------------------------------------------------------------
// Nonlinearity

/// Below this |εw| the odd Taylor series replaces sin(εw)/ε - w.
inline constexpr double kSeriesThreshold = 0.05;

/// f(w) = sin(εw)/ε - w, series -ε²w³/6 + ε⁴w⁵/120 - ε⁶w⁷/5040 near εw = 0.
inline double nonlinearity_f(double w, double epsilon) {
  const double x = epsilon * w;
  if (std::abs(x) < kSeriesThreshold) {
    const double x2 = x * x;
    return w * x2 * (-1.0 / 6.0 + x2 * (1.0 / 120.0 - x2 / 5040.0));
  }
  return std::sin(x) / epsilon - w;
}

inline std::vector<double> nonlinearity_f(std::span<const double> w, double epsilon) {
  if (!(epsilon > 0.0 && epsilon <= 1.0)) throw std::invalid_argument("nonlinearity_f: epsilon must lie in (0, 1]");
  std::vector<double> out(w.size());
  for (std::size_t j = 0; j < w.size(); ++j) out[j] = nonlinearity_f(w[j], epsilon);
  return out;
}

/// Nonlinearity policies used by the steppers. The zero policy is a test hook
/// that reduces the scheme to the exact linear flow.
struct SineNonlinearity {
  double epsilon = 1.0;
  double operator()(double w) const { return nonlinearity_f(w, epsilon); }
};

struct ZeroNonlinearity {
  double operator()(double) const { return 0.0; }
};

/// g(ψ) = f((ψ + conj ψ)/2) at the nodes, stored as a complex field with zero imaginary part.
inline SpectralField nonlinearity_g(const SpectralField& psi, double epsilon) {
  const auto& v = psi.values();
  SpectralField g(psi.grid_ptr());
  auto& out = g.overwrite_values();
  for (std::size_t j = 0; j < v.size(); ++j) out[j] = cplx(nonlinearity_f(v[j].real(), epsilon), 0.0);
  return g;
}

/// i <∇>^{-1} g: coefficients (i/δ_l) g̃_l.
inline SpectralField i_inverse_bracket(const SpectralField& g) {
  const auto& gc = g.coefficients();
  const auto& delta = g.grid().delta();
  SpectralField F(g.grid_ptr());
  auto& c = F.overwrite_coefficients();
  for (std::size_t s = 0; s < c.size(); ++s) c[s] = cplx(0.0, 1.0) * gc[s] / delta[s];
  return F;
}

/// F(ψ) = i <∇>^{-1} g(ψ).
inline SpectralField big_F(const SpectralField& psi, double epsilon) {
  return i_inverse_bracket(nonlinearity_g(psi, epsilon));
}

// ---------------------------------------------------------------------------
// Initial data

class TabulatedDataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Real initial data (φ, γ) = (w(·,0), ∂_t w(·,0)), either analytic presets or
/// node values read from CSV.
class InitialData {
 public:
  using Fn = std::function<double(std::span<const double>)>;

  enum class Kind { paper_1d, paper_2d, paper_osc, zero, single_mode, tabulated, custom };

  static InitialData paper_1d() {
    InitialData d(Kind::paper_1d, "paper_1d");
    d.phi_ = [](std::span<const double> x) { const double c = std::cos(x[0]); return 2.0 / (1.0 + c * c); };
    d.gamma_ = [](std::span<const double> x) { return 1.0 / (2.0 + std::sin(x[0])); };
    d.default_grid_ = PeriodicGrid::line(0.0, 2.0 * std::numbers::pi, 128);
    return d;
  }

  static InitialData paper_2d() {
    InitialData d(Kind::paper_2d, "paper_2d");
    d.phi_ = [](std::span<const double> x) {
      const double c = std::cos(2.0 * std::numbers::pi * x[0] + x[1]);
      return 2.0 / (2.0 + c * c);
    };
    d.gamma_ = [](std::span<const double> x) {
      const double c = std::cos(2.0 * std::numbers::pi * x[0] + x[1]);
      return 2.0 / (2.0 + 2.0 * c * c);
    };
    d.default_grid_ = PeriodicGrid::rectangle(Axis{0.0, 1.0, 32}, Axis{0.0, 2.0 * std::numbers::pi, 32});
    return d;
  }

  static InitialData paper_osc() {
    InitialData d(Kind::paper_osc, "paper_osc");
    d.phi_ = [](std::span<const double> x) { const double t = x[0] * (x[0] - 1.0); return t * t + 3.0; };
    d.gamma_ = [](std::span<const double> x) { return x[0] * (x[0] - 1.0) * (2.0 * x[0] - 1.0); };
    d.default_grid_ = PeriodicGrid::line(0.0, 1.0, 128);
    return d;
  }

  static InitialData zero() {
    InitialData d(Kind::zero, "zero");
    d.phi_ = [](std::span<const double>) { return 0.0; };
    d.gamma_ = d.phi_;
    return d;
  }

  /// φ = amplitude·cos(μ_l (x - a)) along the first axis, γ = 0.
  static InitialData single_mode(int l, double amplitude, double a = 0.0, double b = 2.0 * std::numbers::pi) {
    InitialData d(Kind::single_mode, "single_mode");
    const double mu = 2.0 * std::numbers::pi * l / (b - a);
    d.phi_ = [=](std::span<const double> x) { return amplitude * std::cos(mu * (x[0] - a)); };
    d.gamma_ = [](std::span<const double>) { return 0.0; };
    d.default_grid_ = PeriodicGrid::line(a, b, 16);
    return d;
  }

  static InitialData from_functions(Fn phi, Fn gamma, std::string name = "custom") {
    InitialData d(Kind::custom, std::move(name));
    d.phi_ = std::move(phi);
    d.gamma_ = std::move(gamma);
    return d;
  }

  /// Reads `x[,y],phi,gamma` rows (optional header line). Rows follow the grid's
  /// row-major node order: x outer, y inner.
  static InitialData tabulated(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw TabulatedDataError("cannot open tabulated data '" + path + "'");
    return tabulated(in, path);
  }

  static InitialData tabulated(std::istream& in, const std::string& label = "<stream>") {
    InitialData d(Kind::tabulated, "tabulated");
    std::string line;
    std::size_t lineno = 0;
    std::optional<std::size_t> columns;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty() || line[0] == '#') continue;
      std::vector<double> row;
      std::stringstream ss(line);
      std::string cell;
      bool numeric = true;
      while (std::getline(ss, cell, ',')) {
        try {
          std::size_t used = 0;
          row.push_back(std::stod(cell, &used));
        } catch (const std::exception&) {
          numeric = false;
          break;
        }
      }
      if (!numeric) {
        if (d.tab_phi_.empty() && !columns) continue;  // header
        throw TabulatedDataError(label + ":" + std::to_string(lineno) + ": non-numeric cell");
      }
      if (row.size() != 3 && row.size() != 4) {
        throw TabulatedDataError(label + ":" + std::to_string(lineno) + ": expected 3 or 4 columns");
      }
      if (columns && *columns != row.size()) {
        throw TabulatedDataError(label + ":" + std::to_string(lineno) + ": inconsistent column count");
      }
      columns = row.size();
      const std::size_t nx = row.size() - 2;
      d.tab_x_.insert(d.tab_x_.end(), row.begin(), row.begin() + static_cast<long>(nx));
      d.tab_phi_.push_back(row[nx]);
      d.tab_gamma_.push_back(row[nx + 1]);
    }
    if (d.tab_phi_.empty()) throw TabulatedDataError(label + ": no data rows");
    d.tab_dim_ = static_cast<int>(*columns) - 2;
    return d;
  }

  Kind kind() const { return kind_; }
  const std::string& name() const { return name_; }

  /// Grid the preset is defined on (domain and reference resolution).
  std::optional<PeriodicGrid> default_grid() const { return default_grid_; }

  /// Node values of φ and γ on `grid`.
  std::pair<std::vector<double>, std::vector<double>> sample(const PeriodicGrid& grid) const {
    const std::size_t n = grid.size();
    std::vector<double> phi(n), gamma(n);
    if (kind_ == Kind::tabulated) {
      if (tab_phi_.size() != n || tab_dim_ != grid.dim()) {
        throw TabulatedDataError("tabulated data has " + std::to_string(tab_phi_.size()) + " rows of dimension " +
                                 std::to_string(tab_dim_) + ", grid needs " + std::to_string(n) + " of dimension " +
                                 std::to_string(grid.dim()));
      }
      for (std::size_t j = 0; j < n; ++j) {
        const auto x = grid.node(j);
        for (int i = 0; i < grid.dim(); ++i) {
          const double xt = tab_x_[j * static_cast<std::size_t>(tab_dim_) + static_cast<std::size_t>(i)];
          if (std::abs(xt - x[static_cast<std::size_t>(i)]) > 1e-8 * grid.axis(i).length()) {
            throw TabulatedDataError("tabulated row " + std::to_string(j) + " is not at grid node");
          }
        }
      }
      return {tab_phi_, tab_gamma_};
    }
    for (std::size_t j = 0; j < n; ++j) {
      const auto x = grid.node(j);
      phi[j] = phi_(x);
      gamma[j] = gamma_(x);
    }
    return {phi, gamma};
  }

 private:
  InitialData(Kind k, std::string name) : kind_(k), name_(std::move(name)) {}

  Kind kind_;
  std::string name_;
  Fn phi_, gamma_;
  std::optional<PeriodicGrid> default_grid_;
  int tab_dim_ = 0;
  std::vector<double> tab_x_, tab_phi_, tab_gamma_;
};

// ---------------------------------------------------------------------------
// States

/// ψⁿ ≈ ψ(·, t_n) with ψ = w - i<∇>^{-1}∂_t w.
struct PsiState {
  SpectralField psi;
  double t = 0.0;
  std::size_t step = 0;
  ModelParams params;
};

/// (w, z) ≈ (w, ∂_t w) at time t, both real.
struct FieldPair {
  SpectralField w;
  SpectralField z;
  double t = 0.0;
};

/// ψ⁰ with coefficients φ̃_l - i γ̃_l / δ_l.
inline PsiState assemble_psi0(const InitialData& data, const ModelParams& params) {
  params.validate();
  const GridPtr& grid = params.grid;
  auto [phi, gamma] = data.sample(*grid);
  SpectralField phi_f(grid), gamma_f(grid);
  {
    auto& pv = phi_f.overwrite_values();
    auto& gv = gamma_f.overwrite_values();
    for (std::size_t j = 0; j < phi.size(); ++j) {
      pv[j] = phi[j];
      gv[j] = gamma[j];
    }
  }
  const auto& pc = phi_f.coefficients();
  const auto& gc = gamma_f.coefficients();
  const auto& delta = grid->delta();
  SpectralField psi(grid);
  auto& c = psi.overwrite_coefficients();
  for (std::size_t s = 0; s < c.size(); ++s) c[s] = pc[s] - cplx(0.0, 1.0) * gc[s] / delta[s];
  return PsiState{std::move(psi), 0.0, 0, params};
}

class RealnessError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kRealnessTolerance = 1e-10;

/// w = (ψ + conj ψ)/2 at the nodes; z̃_l = (i/2) δ_l (ψ̃_l - conj ψ̃_{-l}).
/// The imaginary residue of z is checked against kRealnessTolerance, then dropped.
inline FieldPair recover_wz(const PsiState& state, double* imag_residue = nullptr) {
  const SpectralField& psi = state.psi;
  const GridPtr& grid = psi.grid_ptr();
  const auto& pc = psi.coefficients();
  const auto& pv = psi.values();
  const auto& delta = grid->delta();

  SpectralField w(grid);
  {
    auto& wv = w.overwrite_values();
    for (std::size_t j = 0; j < wv.size(); ++j) wv[j] = cplx(pv[j].real(), 0.0);
  }
  SpectralField z(grid);
  {
    auto& zc = z.overwrite_coefficients();
    for (std::size_t s = 0; s < zc.size(); ++s) {
      zc[s] = cplx(0.0, 0.5) * delta[s] * (pc[s] - std::conj(pc[grid->mirror(s)]));
    }
  }
  const double residue = max_imag(z);
  if (imag_residue) *imag_residue = residue;
  if (residue > kRealnessTolerance) {
    throw RealnessError("recover_wz: imaginary residue " + std::to_string(residue) + " exceeds tolerance");
  }
  for (auto& v : z.mutable_values()) v = cplx(v.real(), 0.0);
  return FieldPair{std::move(w), std::move(z), state.t};
}

/// E = ∫ [ε²z² + ε²|∇w|² + 2(1 - cos εw)] dx, node quadrature with the gradient
/// term in coefficient space.
inline double energy(const FieldPair& pair, double epsilon) {
  const PeriodicGrid& grid = pair.w.grid();
  const auto& wv = pair.w.values();
  const auto& zv = pair.z.values();
  const double eps2 = epsilon * epsilon;
  double nodes = 0.0;
  for (std::size_t j = 0; j < wv.size(); ++j) {
    const double half = std::sin(0.5 * epsilon * wv[j].real());
    nodes += eps2 * zv[j].real() * zv[j].real() + 4.0 * half * half;
  }
  const double volume = grid.cell_volume() * static_cast<double>(grid.size());
  const auto& wc = pair.w.coefficients();
  const auto& mu2 = grid.mu_squared();
  double grad = 0.0;
  for (std::size_t s = 0; s < wc.size(); ++s) grad += mu2[s] * std::norm(wc[s]);
  return grid.cell_volume() * nodes + eps2 * volume * grad;
}

}  // namespace sge
