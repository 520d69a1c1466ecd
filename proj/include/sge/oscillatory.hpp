#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "integrator.hpp"

namespace sge {

/// Solution of ε⁴v_ss - Δv + sin(εv)/ε = 0 at rescaled time s = ε²t.
struct OscState {
  SpectralField v;
  SpectralField q;  // ≈ ∂_s v = ε⁻² z
  double s = 0.0;
  double kappa = 0.0;
  double epsilon = 1.0;
};

inline constexpr std::size_t kMaxOscillatorySteps = 100'000'000;

/// v(·, s) = w(·, s/ε²) and ∂_s v = ε⁻² ∂_t w.
inline OscState to_oscillatory(const PsiState& state, double kappa) {
  const double eps = state.params.epsilon;
  FieldPair pair = recover_wz(state);
  const double inv_eps2 = 1.0 / (eps * eps);
  SpectralField q(pair.z.grid_ptr());
  {
    const auto& zc = pair.z.coefficients();
    auto& qc = q.overwrite_coefficients();
    for (std::size_t s = 0; s < qc.size(); ++s) qc[s] = zc[s] * inv_eps2;
  }
  return OscState{std::move(pair.w), std::move(q), eps * eps * state.t, kappa, eps};
}

/**
 * Runs the standard LEI-FP solver with τ = κ/ε² up to t = S/ε² and returns
 * (v, q) at s = 0, the requested multiples of κ, and s = S.
 */
inline std::vector<OscState> solve_oscillatory(const InitialData& data, GridPtr grid, double epsilon, double kappa,
                                               double S, const std::vector<std::size_t>& sample_steps = {}) {
  if (!(kappa > 0.0)) throw std::invalid_argument("solve_oscillatory: kappa must be positive");
  if (!(S > 0.0)) throw std::invalid_argument("solve_oscillatory: S must be positive");
  if (S / kappa > static_cast<double>(kMaxOscillatorySteps)) {
    throw std::invalid_argument("solve_oscillatory: S/kappa exceeds 1e8 steps; increase kappa or shorten S");
  }
  ModelParams params{epsilon, std::move(grid), Regime::oscillatory, S};
  params.validate();
  const double tau = physical_step(Regime::oscillatory, kappa, epsilon);
  StepParams sp = StepParams::fit_horizon(params.grid, params.physical_horizon(), tau);
  Observers obs;
  obs.snapshot_steps.insert(sample_steps.begin(), sample_steps.end());
  Trajectory traj = evolve(assemble_psi0(data, params), sp, obs);
  const double kappa_used = epsilon * epsilon * sp.tau();
  std::vector<OscState> out;
  out.reserve(traj.snapshots.size());
  for (const auto& snap : traj.snapshots) out.push_back(to_oscillatory(snap, kappa_used));
  return out;
}

struct OscErrorParts {
  double h1_v = 0.0;
  double l2_q_scaled = 0.0;  // ε² ||∂_s v - q||_L2

  double total() const { return h1_v + l2_q_scaled; }
  /// sqrt(h1_v² + l2_q_scaled²) = ||ψ - ψ_ref||_H1.
  double psi_h1() const { return std::hypot(h1_v, l2_q_scaled); }
};

/// Error parts on the coarse grid's modes; the reference is truncated onto them.
inline OscErrorParts osc_error_parts(const OscState& coarse, const OscState& reference, double epsilon) {
  if (std::abs(coarse.s - reference.s) > 1e-12 * std::max(1.0, std::abs(reference.s))) {
    throw std::invalid_argument("osc_error: coarse and reference times differ");
  }
  const GridPtr& g = coarse.v.grid_ptr();
  const SpectralField dv = coarse.v - resample(reference.v, g);
  const SpectralField dq = coarse.q - resample(reference.q, g);
  return OscErrorParts{sobolev_norm(dv, 1.0), epsilon * epsilon * sobolev_norm(dq, 0.0)};
}

/// ||v - v_ref||_H1 + ε² ||q - q_ref||_L2.
inline double osc_error(const OscState& coarse, const OscState& reference, double epsilon) {
  return osc_error_parts(coarse, reference, epsilon).total();
}

}  // namespace sge
