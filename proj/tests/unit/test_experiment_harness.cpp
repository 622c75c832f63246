#include <gtest/gtest.h>

#include <set>

#include "nfisac/experiment_harness.hpp"

using namespace nfisac;

namespace {

SweepConfig tiny_sweep() {
  SweepConfig c;
  c.radii_m = {0.5};
  c.distances_m = {10.0};
  c.trials_per_point = 3;
  c.mc_subcarriers = 32;
  c.grid.d_max_m = 40.0;
  c.workers = 2;
  return c;
}

}  // namespace

TEST(ExperimentHarness, TrialSeedsArePairwiseDistinct) {
  std::set<std::uint64_t> seen;
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t d = 0; d < 8; ++d)
      for (std::size_t t = 0; t < 200; ++t) seen.insert(trial_seed(1, r, d, t));
  EXPECT_EQ(seen.size(), 4u * 8u * 200u);
}

TEST(ExperimentHarness, ZeroNoiseTrialRecoversTruth) {
  SweepConfig c = tiny_sweep();
  c.zero_noise = true;
  const TrialRecord t = run_trial(0.5, 10.0, 1.3, c, 5);
  EXPECT_NEAR(t.d_hat_m, 10.0, 1e-6);
  EXPECT_TRUE(t.success);
  EXPECT_LT(std::abs(t.rate_est_bps - t.rate_opt_bps) / t.rate_opt_bps, 1e-6);
}

TEST(ExperimentHarness, TrialsAreDeterministicAcrossWorkerCounts) {
  SweepConfig a = tiny_sweep();
  SweepConfig b = a;
  b.workers = 1;
  const auto ta = run_trials(a);
  const auto tb = run_trials(b);
  ASSERT_EQ(ta.size(), tb.size());
  for (std::size_t i = 0; i < ta.size(); ++i) {
    EXPECT_EQ(ta[i].d_hat_m, tb[i].d_hat_m);
    EXPECT_EQ(ta[i].theta_hat_rad, tb[i].theta_hat_rad);
    EXPECT_EQ(ta[i].seed, tb[i].seed);
    EXPECT_GE(ta[i].rate_opt_bps, ta[i].rate_est_bps);
  }
}

TEST(ExperimentHarness, SummaryColumnsAreConsistent) {
  const SweepSummary s = rmse_sweep(tiny_sweep());
  ASSERT_EQ(s.points.size(), 1u);
  const PointSummary& p = s.points[0];
  EXPECT_EQ(p.n_trials, 3);
  EXPECT_GE(p.rmse_d_m, 0.0);
  EXPECT_GT(p.crlb_d_m, 0.0);
  EXPECT_GT(p.crlb_theta_rad, 0.0);
  EXPECT_LE(p.success_rate, p.convergence_rate);
}

TEST(ExperimentHarness, CrlbSweepIgnoresTrialCount) {
  SweepConfig c = tiny_sweep();
  c.radii_m = {0.5, 5.0};
  c.distances_m = {10.0, 50.0};
  const auto a = crlb_sweep(c);
  c.trials_per_point *= 2;
  const auto b = crlb_sweep(c);
  ASSERT_EQ(a.size(), 4u);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].crlb_d_m, b[i].crlb_d_m);
  EXPECT_LT(a[2].crlb_d_m, a[0].crlb_d_m);  // larger radius, same distance
}

TEST(ExperimentHarness, InvalidSweepsAreRejected) {
  SweepConfig c = tiny_sweep();
  c.distances_m = {0.4};
  EXPECT_THROW(c.validate(), ModelError);
  c = tiny_sweep();
  c.trials_per_point = 0;
  EXPECT_THROW(c.validate(), ModelError);
}
