#include <gtest/gtest.h>

#include "nfisac/beamformer_opt.hpp"
#include "oracles.hpp"

using namespace nfisac;
using namespace nfisac::testing;

namespace {

// Central difference with one Richardson step.
double directional_fd(const CrlbTraceModel& m, const CVector& f, const CVector& v, double h) {
  auto cd = [&](double s) { return (m.value(f + s * v) - m.value(f - s * v)) / (2 * s); };
  return (4.0 * cd(h / 2) - cd(h)) / 3.0;
}

}  // namespace

TEST(BeamformerOpt, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(0, 1);
  const double radii[] = {0.5, 1.0, 2.0, 5.0};
  const OfdmConfig c = OfdmConfig::nominal();
  for (int trial = 0; trial < 60; ++trial) {
    const UcaGeometry g(trial % 2 ? 64 : 16, radii[trial % 4], c.wavelength_m());
    const PolarPosition p{10 + 100 * u(rng), kTwoPi * u(rng)};
    const CrlbTraceModel m(g, p, c);
    // Mix of focused and random points so both large and small gradients occur.
    CVector f = trial % 3 ? random_unit(g.n_a(), rng) : conjugate_focus_beamformer(g, p);
    f = (f + 0.1 * random_unit(g.n_a(), rng)).normalized();
    const CVector grad = m.gradient(f);
    const CVector v = random_unit(g.n_a(), rng);
    const double analytic = v.dot(grad).real();
    const double numeric = directional_fd(m, f, v, 1e-4);
    EXPECT_LT(std::abs(analytic - numeric) / std::max(std::abs(analytic), 1e-12 * m.value(f)),
              1e-6)
        << "trial " << trial;
  }
}

TEST(BeamformerOpt, TangentProjectionIsOrthogonal) {
  std::mt19937_64 rng(1);
  const CVector f = random_unit(8, rng);
  const CVector g = random_unit(8, rng) * 3.0;
  const CVector t = tangent_project(g, f);
  EXPECT_NEAR(f.dot(t).real(), 0.0, 1e-14);
}

TEST(BeamformerOpt, RetractionNormalizesAndGuardsCollapse) {
  std::mt19937_64 rng(2);
  const CVector f = random_unit(8, rng);
  EXPECT_NEAR(retract(f, 0.3, random_unit(8, rng)).norm(), 1.0, 1e-14);
  EXPECT_THROW(retract(f, 1.0, f), StepTooLargeError);
}

TEST(BeamformerOpt, ObjectiveRejectsOffSphereInput) {
  const OfdmConfig c = OfdmConfig::nominal();
  const UcaGeometry g(8, 0.5, c.wavelength_m());
  EXPECT_THROW(trace_objective(CVector::Ones(8), g, {5, 0}, c), ModelError);
}

TEST(BeamformerOpt, DescentContractHolds) {
  std::mt19937_64 rng(9);
  const OfdmConfig c = OfdmConfig::nominal();
  for (double r : {0.5, 1.0, 2.0, 5.0}) {
    const UcaGeometry g(64, r, c.wavelength_m());
    const PolarPosition p{10.0 + 20 * r, 0.9};
    for (int start = 0; start < 3; ++start) {
      const std::optional<CVector> init =
          start == 0 ? std::nullopt : std::optional<CVector>(random_unit(64, rng));
      const OptimizerResult res = optimize_beamformer(g, p, c, OptimizerConfig{}, init);
      for (std::size_t i = 1; i < res.trace_history.size(); ++i) {
        EXPECT_LE(res.trace_history[i], res.trace_history[i - 1]);
      }
      EXPECT_NEAR(res.beamformer.norm(), 1.0, 1e-10);
      if (start == 0) {
        EXPECT_LE(res.trace_history.back(),
                  trace_objective(conjugate_focus_beamformer(g, p), g, p, c));
      }
    }
  }
}

TEST(BeamformerOpt, ZeroIterationsReturnsInitialPoint) {
  const OfdmConfig c = OfdmConfig::nominal();
  const UcaGeometry g(16, 0.5, c.wavelength_m());
  OptimizerConfig opt;
  opt.max_iters = 0;
  const OptimizerResult r = optimize_beamformer(g, {5, 0.1}, c, opt);
  EXPECT_EQ(r.iterations, 0);
  EXPECT_TRUE(r.beamformer.isApprox(conjugate_focus_beamformer(g, {5, 0.1})));
}

TEST(BeamformerOpt, MultistartIsDeterministic) {
  const OfdmConfig c = OfdmConfig::nominal();
  const UcaGeometry g(16, 1.0, c.wavelength_m());
  const auto a = optimize_beamformer_multistart(g, {12, 0.4}, c, OptimizerConfig{}, 3, 77);
  const auto b = optimize_beamformer_multistart(g, {12, 0.4}, c, OptimizerConfig{}, 3, 77);
  EXPECT_EQ(a.beamformer, b.beamformer);
}
