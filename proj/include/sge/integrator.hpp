#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <functional>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "model.hpp"

namespace sge {

class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, std::size_t step, std::size_t mode)
      : std::runtime_error(what), step_(step), mode_(mode) {}
  std::size_t step() const { return step_; }
  std::size_t mode() const { return mode_; }

 private:
  std::size_t step_;
  std::size_t mode_;
};

class HorizonError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Step size, step count and the cached linear propagator e^{iτδ_l} for one grid.
class StepParams {
 public:
  StepParams(GridPtr grid, double tau, std::size_t n_steps) : grid_(std::move(grid)), tau_(tau), n_steps_(n_steps) {
    if (!(tau > 0.0) || !std::isfinite(tau)) throw std::invalid_argument("StepParams: tau must be positive");
    const auto& delta = grid_->delta();
    phases_.resize(delta.size());
    phase_lo_.resize(delta.size());
    inv_delta_.resize(delta.size());
    for (std::size_t s = 0; s < delta.size(); ++s) {
      // phase = hi + lo; the low part cancels the rounding bias that would
      // otherwise compound over many steps
      const long double arg = static_cast<long double>(tau) * delta[s];
      const long double re = std::cos(arg), im = std::sin(arg);
      phases_[s] = cplx(static_cast<double>(re), static_cast<double>(im));
      phase_lo_[s] = cplx(static_cast<double>(re - phases_[s].real()), static_cast<double>(im - phases_[s].imag()));
      inv_delta_[s] = 1.0 / delta[s];
    }
  }

  /// n = round(T/τ), τ' = T/n. Rejects fits that move τ by more than `max_rel_change`.
  static StepParams fit_horizon(GridPtr grid, double horizon, double nominal_tau, double max_rel_change = 0.01) {
    if (!(horizon > 0.0)) throw HorizonError("fit_horizon: horizon must be positive");
    if (!(nominal_tau > 0.0)) throw HorizonError("fit_horizon: step must be positive");
    const double ratio = horizon / nominal_tau;
    if (ratio > 1e15) throw HorizonError("fit_horizon: step count not representable");
    const double n = std::max(1.0, std::round(ratio));
    const double tau = horizon / n;
    if (std::abs(tau - nominal_tau) > max_rel_change * nominal_tau) {
      std::ostringstream msg;
      msg << "fit_horizon: horizon " << horizon << " is not representable with step " << nominal_tau
          << " (nearest fit " << tau << ")";
      throw HorizonError(msg.str());
    }
    return StepParams(std::move(grid), tau, static_cast<std::size_t>(n));
  }

  double tau() const { return tau_; }
  std::size_t n_steps() const { return n_steps_; }
  double horizon() const { return tau_ * static_cast<double>(n_steps_); }
  const GridPtr& grid_ptr() const { return grid_; }
  const ComplexBuffer& phases() const { return phases_; }
  const ComplexBuffer& phase_corrections() const { return phase_lo_; }
  const std::vector<double>& inv_delta() const { return inv_delta_; }

 private:
  GridPtr grid_;
  double tau_;
  std::size_t n_steps_;
  ComplexBuffer phases_;
  ComplexBuffer phase_lo_;
  std::vector<double> inv_delta_;
};

/**
 * Lawson exponential integrator in coefficient space:
 *
 *   ψ̃^{n+1}_l = e^{iτδ_l} ( ψ̃ⁿ_l + τ (i/δ_l) g̃(ψⁿ)_l ),
 *
 * with g evaluated pseudospectrally at the nodes. One inverse and one forward
 * transform per step.
 */
template <class Nonlinearity = SineNonlinearity>
class LeiStepper {
 public:
  LeiStepper(const StepParams& params, Nonlinearity nl)
      : params_(params),
        nl_(nl),
        plans_(fft::plans_for(*params.grid_ptr())),
        nodes_(params.grid_ptr()->size()),
        g_nodes_(params.grid_ptr()->size()),
        g_coeffs_(params.grid_ptr()->size()) {}

  void step(PsiState& state) {
    if (!(state.psi.grid() == *params_.grid_ptr())) {
      throw DomainMismatchError("lei_step: state grid differs from the cached propagator grid");
    }
    const auto& c_in = state.psi.coefficients();
    plans_->inverse(c_in, nodes_);
    for (std::size_t j = 0; j < nodes_.size(); ++j) g_nodes_[j] = cplx(nl_(nodes_[j].real()), 0.0);
    plans_->forward(g_nodes_, g_coeffs_);

    auto& c = state.psi.overwrite_coefficients();
    const auto& phase = params_.phases();
    const auto& phase_lo = params_.phase_corrections();
    const auto& inv_delta = params_.inv_delta();
    const double tau = params_.tau();
    for (std::size_t s = 0; s < c.size(); ++s) {
      const cplx forcing(-g_coeffs_[s].imag() * inv_delta[s] * tau, g_coeffs_[s].real() * inv_delta[s] * tau);
      const cplx x = c[s] + forcing;
      c[s] = phase[s] * x + phase_lo[s] * x;
    }
    for (std::size_t s = 0; s < c.size(); ++s) {
      if (!std::isfinite(c[s].real()) || !std::isfinite(c[s].imag())) {
        throw NumericalError("lei_step: non-finite coefficient at mode slot " + std::to_string(s) + " in step " +
                                 std::to_string(state.step + 1),
                             state.step + 1, s);
      }
    }
    ++state.step;
    state.t = static_cast<double>(state.step) * tau;
  }

 private:
  const StepParams& params_;
  Nonlinearity nl_;
  std::shared_ptr<const fft::PlanPair> plans_;
  ComplexBuffer nodes_, g_nodes_, g_coeffs_;
};

inline SineNonlinearity default_nonlinearity(const PsiState& s) { return SineNonlinearity{s.params.epsilon}; }

/// One LEI-FP step.
template <class Nonlinearity>
PsiState lei_step(const PsiState& state, const StepParams& params, Nonlinearity nl) {
  PsiState next = state;
  LeiStepper<Nonlinearity>(params, nl).step(next);
  return next;
}

inline PsiState lei_step(const PsiState& state, const StepParams& params) {
  return lei_step(state, params, default_nonlinearity(state));
}

// ---------------------------------------------------------------------------
// Trajectories

struct Diagnostic {
  double t = 0.0;
  std::size_t step = 0;
  double energy = 0.0;
  double psi_l2 = 0.0;
  double psi_h1 = 0.0;
};

struct Trajectory {
  double tau = 0.0;
  std::vector<PsiState> snapshots;
  std::vector<Diagnostic> diagnostics;

  const PsiState& final_state() const { return snapshots.back(); }
};

/// Sampling requests for evolve(). Step 0 and the final step are always stored.
/// Callbacks only see const state.
struct Observers {
  std::set<std::size_t> snapshot_steps;
  std::size_t diagnostics_every = 0;
  std::function<void(const PsiState&)> on_sample;
};

inline Diagnostic diagnose(const PsiState& s) {
  FieldPair pair = recover_wz(s);
  return Diagnostic{s.t, s.step, energy(pair, s.params.epsilon), sobolev_norm(s.psi, 0.0), sobolev_norm(s.psi, 1.0)};
}

template <class Nonlinearity>
Trajectory evolve(PsiState state, const StepParams& params, const Observers& observers, Nonlinearity nl) {
  Trajectory traj;
  traj.tau = params.tau();
  const std::size_t start = state.step;
  const std::size_t end = start + params.n_steps();

  auto sample = [&](const PsiState& s, bool force) {
    const std::size_t k = s.step - start;
    const bool snap = force || observers.snapshot_steps.contains(k);
    const bool diag = observers.diagnostics_every > 0 && (k % observers.diagnostics_every == 0 || s.step == end);
    if (snap) traj.snapshots.push_back(s);
    if (diag) traj.diagnostics.push_back(diagnose(s));
    if ((snap || diag) && observers.on_sample) observers.on_sample(s);
  };

  sample(state, true);
  LeiStepper<Nonlinearity> stepper(params, nl);
  while (state.step < end) {
    stepper.step(state);
    sample(state, state.step == end);
  }
  return traj;
}

inline Trajectory evolve(PsiState state, const StepParams& params, const Observers& observers = {}) {
  const auto nl = default_nonlinearity(state);
  return evolve(std::move(state), params, observers, nl);
}

// ---------------------------------------------------------------------------
// Reference solutions

struct ReferenceOptions {
  /// Nominal step in the regime's own time variable: τ_e (long_time) or κ_e (oscillatory).
  double nominal_step = 1e-4;
  /// Reference grid; the preset's default grid when unset.
  std::optional<PeriodicGrid> grid;
  /// Extra snapshot times (physical t) besides the horizon.
  std::vector<double> comparison_times;
};

/// Physical step τ for a step given in the regime's own time variable.
inline double physical_step(Regime regime, double step, double epsilon) {
  return regime == Regime::oscillatory ? step / (epsilon * epsilon) : step;
}

/// Fine-resolution run of the same scheme up to the physical horizon of `params`.
inline Trajectory reference_solve(const InitialData& data, ModelParams params, const ReferenceOptions& opts = {}) {
  if (opts.grid) {
    params.grid = make_grid(*opts.grid);
  } else if (!params.grid) {
    auto g = data.default_grid();
    if (!g) throw std::invalid_argument("reference_solve: no grid for initial data '" + data.name() + "'");
    params.grid = make_grid(*g);
  }
  params.validate();
  const double tau_nominal = physical_step(params.regime, opts.nominal_step, params.epsilon);
  StepParams sp = StepParams::fit_horizon(params.grid, params.physical_horizon(), tau_nominal);
  Observers obs;
  for (double t : opts.comparison_times) {
    const double k = std::round(t / sp.tau());
    if (std::abs(k * sp.tau() - t) > 1e-9 * std::max(1.0, t)) {
      throw HorizonError("reference_solve: comparison time is not a multiple of the reference step");
    }
    obs.snapshot_steps.insert(static_cast<std::size_t>(k));
  }
  return evolve(assemble_psi0(data, params), sp, obs);
}

// ---------------------------------------------------------------------------
// Duhamel oracle

/**
 * High-accuracy solution of ∂_tψ = i<∇>ψ + F(ψ) over one step τ.
 *
 * Integrates φ(t) = e^{-it<∇>}ψ(t), φ' = e^{-it<∇>} F(e^{it<∇>} φ), by classical
 * RK4 with `substeps` stages, then maps back with e^{iτ<∇>}. The linear phase
 * never enters the RK error.
 */
template <class Nonlinearity>
PsiState duhamel_oracle(const PsiState& state, double tau, Nonlinearity nl, int substeps = 64) {
  if (substeps < 1) throw std::invalid_argument("duhamel_oracle: substeps must be positive");
  const GridPtr& grid = state.psi.grid_ptr();
  const auto plans = fft::plans_for(*grid);
  const auto& delta = grid->delta();
  const std::size_t n = grid->size();

  ComplexBuffer nodes(n), g_nodes(n), g_coeffs(n), psi(n);
  // φ' at time t for the given φ
  auto rhs = [&](double t, const ComplexBuffer& phi, ComplexBuffer& out) {
    for (std::size_t s = 0; s < n; ++s) psi[s] = phi[s] * std::polar(1.0, t * delta[s]);
    plans->inverse(psi, nodes);
    for (std::size_t j = 0; j < n; ++j) g_nodes[j] = cplx(nl(nodes[j].real()), 0.0);
    plans->forward(g_nodes, g_coeffs);
    for (std::size_t s = 0; s < n; ++s) {
      out[s] = std::polar(1.0, -t * delta[s]) * cplx(0.0, 1.0) * g_coeffs[s] / delta[s];
    }
  };

  ComplexBuffer phi(state.psi.coefficients().begin(), state.psi.coefficients().end());
  ComplexBuffer k1(n), k2(n), k3(n), k4(n), tmp(n);
  const double h = tau / substeps;
  for (int k = 0; k < substeps; ++k) {
    const double t = k * h;
    rhs(t, phi, k1);
    for (std::size_t s = 0; s < n; ++s) tmp[s] = phi[s] + 0.5 * h * k1[s];
    rhs(t + 0.5 * h, tmp, k2);
    for (std::size_t s = 0; s < n; ++s) tmp[s] = phi[s] + 0.5 * h * k2[s];
    rhs(t + 0.5 * h, tmp, k3);
    for (std::size_t s = 0; s < n; ++s) tmp[s] = phi[s] + h * k3[s];
    rhs(t + h, tmp, k4);
    for (std::size_t s = 0; s < n; ++s) phi[s] += h / 6.0 * (k1[s] + 2.0 * k2[s] + 2.0 * k3[s] + k4[s]);
  }

  PsiState out = state;
  auto& c = out.psi.overwrite_coefficients();
  for (std::size_t s = 0; s < n; ++s) c[s] = std::polar(1.0, tau * delta[s]) * phi[s];
  out.t = state.t + tau;
  out.step = state.step + 1;
  return out;
}

inline PsiState duhamel_oracle(const PsiState& state, double tau, int substeps = 64) {
  return duhamel_oracle(state, tau, default_nonlinearity(state), substeps);
}

// ---------------------------------------------------------------------------
// Export

/// CSV: one row per snapshot, `t,re_0,im_0,re_1,im_1,...` in storage order.
inline void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  if (traj.snapshots.empty()) return;
  const std::size_t n = traj.snapshots.front().psi.size();
  os << "t";
  for (std::size_t s = 0; s < n; ++s) os << ",re_" << s << ",im_" << s;
  os << '\n';
  char buf[64];
  for (const auto& snap : traj.snapshots) {
    std::snprintf(buf, sizeof buf, "%.17g", snap.t);
    os << buf;
    for (const auto& c : snap.psi.coefficients()) {
      std::snprintf(buf, sizeof buf, ",%.17g,%.17g", c.real(), c.imag());
      os << buf;
    }
    os << '\n';
  }
}

namespace detail {
template <class T>
void put_le(std::ostream& os, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  os.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}
}  // namespace detail

/**
 * Raw little-endian export:
 *
 *   u32 dims, u32 M[dims], f64 epsilon, f64 tau,
 *   then per snapshot: f64 t, N x (f32 re, f32 im)   (complex64, storage order)
 */
inline void write_trajectory_binary(std::ostream& os, const Trajectory& traj) {
  if (traj.snapshots.empty()) return;
  const PsiState& first = traj.snapshots.front();
  const PeriodicGrid& grid = first.psi.grid();
  detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(grid.dim()));
  for (const auto& ax : grid.axes()) detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(ax.modes));
  detail::put_le<double>(os, first.params.epsilon);
  detail::put_le<double>(os, traj.tau);
  for (const auto& snap : traj.snapshots) {
    detail::put_le<double>(os, snap.t);
    for (const auto& c : snap.psi.coefficients()) {
      detail::put_le<float>(os, static_cast<float>(c.real()));
      detail::put_le<float>(os, static_cast<float>(c.imag()));
    }
  }
}

}  // namespace sge
