#include <gtest/gtest.h>

#include <cmath>
#include <cstring>

#include "sge/experiments.hpp"
#include "sge/oscillatory.hpp"

using namespace sge;

namespace {

GridPtr unit_line(int m) { return make_grid(PeriodicGrid::line(0.0, 1.0, m)); }

bool bit_equal(const SpectralField& a, const SpectralField& b) {
  const auto& ca = a.coefficients();
  const auto& cb = b.coefficients();
  return ca.size() == cb.size() && std::memcmp(ca.data(), cb.data(), ca.size() * sizeof(cplx)) == 0;
}

/// Oscillatory error of one (ε, κ) cell against a κ_e reference on M = 128.
double table_cell(double eps, double kappa, double kappa_e = 1e-5) {
  SweepSpec s;
  s.data = InitialData::paper_osc();
  s.grid = PeriodicGrid::line(0.0, 1.0, 128);
  s.regime = Regime::oscillatory;
  s.epsilons = {eps};
  s.steps = {kappa};
  s.reference_step = kappa_e;
  s.metric = Metric::psi_h1;
  return temporal_sweep(s).cells[0][0].err_psi_h1;
}

}  // namespace

TEST(Oscillatory, EpsilonOneIsTheLongTimeSolver) {
  auto g = unit_line(32);
  const auto osc = solve_oscillatory(InitialData::paper_osc(), g, 1.0, 0.01, 1.0);
  ModelParams p{1.0, g, Regime::long_time, 1.0};
  const Trajectory tr = evolve(assemble_psi0(InitialData::paper_osc(), p), StepParams::fit_horizon(g, 1.0, 0.01));
  const FieldPair wz = recover_wz(tr.final_state());
  EXPECT_TRUE(bit_equal(osc.back().v, wz.w));
  EXPECT_TRUE(bit_equal(osc.back().q, wz.z));
  EXPECT_DOUBLE_EQ(osc.back().s, 1.0);
}

TEST(Oscillatory, RescaleEquivalenceIsBitIdentical) {
  auto g = unit_line(32);
  for (double eps : {0.5, 0.25}) {
    const double kappa = 0.01;
    const auto osc = solve_oscillatory(InitialData::paper_osc(), g, eps, kappa, 1.0, {3, 7});
    ModelParams p{eps, g, Regime::long_time, 1.0};
    Observers obs;
    obs.snapshot_steps = {3, 7};
    const Trajectory tr =
        evolve(assemble_psi0(InitialData::paper_osc(), p), StepParams::fit_horizon(g, 1.0 / (eps * eps), kappa / (eps * eps)), obs);
    ASSERT_EQ(osc.size(), tr.snapshots.size());
    for (std::size_t k = 0; k < osc.size(); ++k) {
      const FieldPair wz = recover_wz(tr.snapshots[k]);
      EXPECT_TRUE(bit_equal(osc[k].v, wz.w));
      // q = ε⁻² z
      for (std::size_t s = 0; s < g->size(); ++s) {
        EXPECT_NEAR(std::abs(osc[k].q.coefficients()[s] * (eps * eps) - wz.z.coefficients()[s]), 0.0,
                    1e-12 * std::max(1.0, std::abs(wz.z.coefficients()[s])));
      }
      EXPECT_NEAR(osc[k].s, eps * eps * tr.snapshots[k].t, 1e-12);
    }
    EXPECT_NEAR(osc[1].s, 3 * kappa, 1e-12);
  }
}

TEST(Oscillatory, ZeroDataStaysZero) {
  auto g = unit_line(16);
  const auto out = solve_oscillatory(InitialData::zero(), g, 0.25, 0.01, 0.5);
  for (const auto& c : out.back().v.coefficients()) EXPECT_EQ(c, cplx(0.0));
  for (const auto& c : out.back().q.coefficients()) EXPECT_EQ(c, cplx(0.0));
}

TEST(Oscillatory, InitialVelocityIsScaled) {
  auto g = unit_line(64);
  const double eps = 0.25;
  const auto out = solve_oscillatory(InitialData::paper_osc(), g, eps, 0.01, 0.01);
  const auto [phi, gamma] = InitialData::paper_osc().sample(*g);
  for (std::size_t j = 0; j < g->size(); ++j) {
    EXPECT_NEAR(out.front().v.values()[j].real(), phi[j], 1e-12);
    EXPECT_NEAR(out.front().q.values()[j].real(), gamma[j] / (eps * eps), 1e-10);
  }
}

TEST(Oscillatory, Guards) {
  auto g = unit_line(16);
  EXPECT_THROW(solve_oscillatory(InitialData::paper_osc(), g, 0.5, 0.0, 1.0), std::invalid_argument);
  EXPECT_THROW(solve_oscillatory(InitialData::paper_osc(), g, 0.5, 1e-9, 1.0), std::invalid_argument);
  EXPECT_THROW(solve_oscillatory(InitialData::paper_osc(), g, 0.5, 0.3, 1.0), HorizonError);
}

TEST(OscError, IdenticalAndSingleMode) {
  auto g = unit_line(16);
  const auto out = solve_oscillatory(InitialData::paper_osc(), g, 0.5, 0.01, 0.1);
  const OscState& a = out.back();
  EXPECT_EQ(osc_error(a, a, 0.5), 0.0);

  OscState b = a;
  const cplx amp(0.3, -0.4);
  b.q.mutable_coefficients()[g->slot({0})] += amp;
  EXPECT_NEAR(osc_error(b, a, 0.5), 0.25 * std::abs(amp), 1e-14);
  const auto parts = osc_error_parts(b, a, 0.5);
  EXPECT_EQ(parts.h1_v, 0.0);
  EXPECT_NEAR(parts.psi_h1(), 0.25 * 0.5, 1e-14);

  OscState c = a;
  c.s += 0.01;
  EXPECT_THROW(osc_error(c, a, 0.5), std::invalid_argument);
}

TEST(OscError, TruncatesFinerReference) {
  auto coarse = unit_line(32);
  auto fine = unit_line(128);
  const auto a = solve_oscillatory(InitialData::paper_osc(), coarse, 0.5, 0.01, 0.1).back();
  const auto b = solve_oscillatory(InitialData::paper_osc(), fine, 0.5, 0.01, 0.1).back();
  // the paper_osc velocity is only C¹-periodic, so 32 modes leave a small residue
  const double e = osc_error(a, b, 0.5);
  EXPECT_GT(e, 0.0);
  EXPECT_LT(e, 1e-3);
}

TEST(OscError, TableSpotCells) {
  // top-left cell and one diagonal cell
  EXPECT_NEAR(table_cell(1.0, 0.1), 1.82e-1, 0.1 * 1.82e-1);
  EXPECT_NEAR(table_cell(0.5, 0.025), 1.79e-2, 0.1 * 1.79e-2);
}
