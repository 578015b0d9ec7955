// Killed and conditioned diffusion steppers against the eigenseries layer:
// Monte Carlo survival vs the spectral series (with and without the bridge
// correction), time-t laws vs the conditioned kernel, and equilibrium draws.

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "bdsim/common.hpp"
#include "bdsim/diffusion.hpp"
#include "bdsim/domain.hpp"
#include "bdsim/gof.hpp"
#include "bdsim/quadrature.hpp"
#include "bdsim/rng.hpp"
#include "bdsim/spectral.hpp"

namespace {

constexpr double kPi = 3.14159265358979323846;

// Fraction of killed-diffusion paths from x alive at time t.
double mc_survival(const bdsim::Domain& dom, const bdsim::Vec& x, double t,
                   long n, bool bridge, uint64_t seed) {
  bdsim::StepParams sp;
  sp.bridge_correction = bridge;
  const long steps = static_cast<long>(std::llround(t / sp.h));
  long alive = 0;
  for (long i = 0; i < n; ++i) {
    bdsim::RngStream rng = bdsim::RngStream::derive(seed, static_cast<uint64_t>(i));
    bdsim::Vec pos = x;
    bool dead = false;
    for (long s = 0; s < steps && !dead; ++s) {
      const bdsim::KilledStep ks = bdsim::step_killed(dom, pos, sp, rng);
      dead = ks.absorbed;
      pos = ks.pos;
    }
    if (!dead) ++alive;
  }
  return static_cast<double>(alive) / static_cast<double>(n);
}

TEST(KilledStep, SurvivalMatchesSeriesWithBridgeCorrection) {
  const bdsim::Domain dom = bdsim::Domain::interval(0.0, kPi);
  const bdsim::SpectralSeries series(dom);
  const bdsim::Vec x(kPi / 2.0);
  const double t = 1.0;
  const long n = 20000;
  const double truth = series.survival(t, x).value;
  const double p_hat = mc_survival(dom, x, t, n, true, 555001);
  const double se = std::sqrt(truth * (1.0 - truth) / static_cast<double>(n));
  // 3 SE plus a small allowance for the O(h) weak error at h = 1e-3.
  EXPECT_NEAR(p_hat, truth, 3.0 * se + 0.003 * truth);
}

TEST(KilledStep, OmittingTheBridgeCorrectionOverestimatesSurvival) {
  // Endpoint-only exit detection misses interior excursions: the survival
  // estimate must sit far above the true value at this step size.
  const bdsim::Domain dom = bdsim::Domain::interval(0.0, kPi);
  const bdsim::SpectralSeries series(dom);
  const bdsim::Vec x(kPi / 2.0);
  const double truth = series.survival(1.0, x).value;
  const long n = 8000;
  const double p_nob = mc_survival(dom, x, 1.0, n, false, 555002);
  const double se = std::sqrt(truth * (1.0 - truth) / static_cast<double>(n));
  EXPECT_GT(p_nob, truth + 6.0 * se);
}

TEST(KilledStep, BoxSurvivalFactorizesAcrossAxes) {
  const bdsim::Domain box = bdsim::Domain::box({{0.0, kPi}, {0.0, 2.0}});
  const bdsim::SpectralSeries series(box);
  const bdsim::Vec x(kPi / 2.0, 1.0);
  const double t = 0.5;
  const long n = 12000;
  const double truth = series.survival(t, x).value;
  const double p_hat = mc_survival(box, x, t, n, true, 555003);
  const double se = std::sqrt(truth * (1.0 - truth) / static_cast<double>(n));
  EXPECT_NEAR(p_hat, truth, 3.0 * se + 0.004 * truth);
}

TEST(KilledStep, AbsorptionLandsExactlyOnAFace) {
  const bdsim::Domain dom = bdsim::Domain::interval(0.0, kPi);
  bdsim::StepParams sp;
  bdsim::RngStream rng = bdsim::RngStream::derive(555004, 0);
  long absorbed = 0;
  for (long i = 0; i < 20000; ++i) {
    // Start near the lower face so absorptions are common.
    const bdsim::Vec x(0.02 + 0.001 * rng.uniform());
    const bdsim::KilledStep ks = bdsim::step_killed(dom, x, sp, rng);
    if (ks.absorbed) {
      ++absorbed;
      EXPECT_TRUE(ks.pos[0] == 0.0 || ks.pos[0] == kPi);
      EXPECT_EQ(ks.time_frac, 0.5);  // midpoint convention
    } else {
      EXPECT_GT(ks.pos[0], 0.0);
      EXPECT_LT(ks.pos[0], kPi);
      EXPECT_EQ(ks.time_frac, 1.0);
    }
  }
  EXPECT_GT(absorbed, 1000);  // the regime actually exercises absorption
}

// CDF of the phi^2 equilibrium on (0, pi): x/pi - sin(2x)/(2 pi).
double phi2_cdf(double x) {
  return x / kPi - std::sin(2.0 * x) / (2.0 * kPi);
}

TEST(ConditionedStep, TimeTLawMatchesConditionedKernel) {
  const bdsim::Domain dom = bdsim::Domain::interval(0.0, kPi);
  const bdsim::EigenPair ep = bdsim::first_eigenpair(dom);
  const bdsim::SpectralSeries series(dom);
  bdsim::StepParams sp;
  const double t = 1.5;
  const long steps = static_cast<long>(std::llround(t / sp.h));
  const long n = 8000;
  const bdsim::Vec x0(1.0);

  const int bins = 25;
  std::vector<double> counts(bins, 0.0);
  for (long i = 0; i < n; ++i) {
    bdsim::RngStream rng = bdsim::RngStream::derive(555005, static_cast<uint64_t>(i));
    bdsim::Vec pos = x0;
    for (long s = 0; s < steps; ++s) pos = bdsim::step_conditioned(ep, pos, sp, rng);
    const int b = std::min(bins - 1, static_cast<int>(pos[0] / (kPi / bins)));
    counts[static_cast<size_t>(b)] += 1.0;
  }
  std::vector<double> expected(bins, 0.0);
  for (int b = 0; b < bins; ++b) {
    const double lo = b * kPi / bins, hi = (b + 1) * kPi / bins;
    expected[static_cast<size_t>(b)] =
        static_cast<double>(n) *
        bdsim::integrate(
            [&](double y) {
              return series.conditioned_kernel(t, x0, bdsim::Vec(y)).value;
            },
            lo, hi, 1e-9);
  }
  EXPECT_GT(bdsim::chi2_test(counts, expected).p_value, 0.005);
}

TEST(ConditionedStep, PreservesTheEquilibriumLaw) {
  // phi^2 draw followed by 200 conditioned steps must still be phi^2.
  const bdsim::Domain dom = bdsim::Domain::interval(0.0, kPi);
  const bdsim::EigenPair ep = bdsim::first_eigenpair(dom);
  bdsim::StepParams sp;
  std::vector<double> xs(15000);
  for (size_t i = 0; i < xs.size(); ++i) {
    bdsim::RngStream rng = bdsim::RngStream::derive(555006, i);
    bdsim::Vec pos = bdsim::sample_phi2(ep, rng);
    for (int s = 0; s < 200; ++s) pos = bdsim::step_conditioned(ep, pos, sp, rng);
    xs[i] = pos[0];
  }
  EXPECT_GT(bdsim::ks_test(std::move(xs), phi2_cdf).p_value, 0.01);
}

TEST(ConditionedStep, StaysStrictlyInsideOverALongRun) {
  const bdsim::Domain dom = bdsim::Domain::interval(0.0, kPi);
  const bdsim::EigenPair ep = bdsim::first_eigenpair(dom);
  bdsim::StepParams sp;
  bdsim::RngStream rng = bdsim::RngStream::derive(555007, 0);
  bdsim::Vec pos(kPi / 2.0);
  double min_dist = kPi;
  for (long s = 0; s < 100000; ++s) {
    pos = bdsim::step_conditioned(ep, pos, sp, rng);
    ASSERT_TRUE(std::isfinite(pos[0]));
    min_dist = std::min(min_dist, dom.boundary_distance(pos));
  }
  EXPECT_GT(min_dist, 0.0);
}

TEST(ConditionedStep, SubstepCapThrows) {
  const bdsim::Domain dom = bdsim::Domain::interval(0.0, kPi);
  const bdsim::EigenPair ep = bdsim::first_eigenpair(dom);
  bdsim::StepParams sp;
  sp.substep_cap = 1;
  bdsim::RngStream rng = bdsim::RngStream::derive(555008, 0);
  // Hugging the boundary forces halving beyond any 1-substep budget.
  EXPECT_THROW(
      {
        for (int i = 0; i < 1000; ++i)
          (void)bdsim::step_conditioned(ep, bdsim::Vec(1e-7), sp, rng);
      },
      bdsim::CapExceeded);
}

TEST(SamplePhi2, MatchesEquilibriumCdf) {
  const bdsim::Domain dom = bdsim::Domain::interval(0.0, kPi);
  const bdsim::EigenPair ep = bdsim::first_eigenpair(dom);
  bdsim::RngStream rng = bdsim::RngStream::derive(555009, 0);
  std::vector<double> xs(30000);
  for (double& x : xs) x = bdsim::sample_phi2(ep, rng)[0];
  EXPECT_GT(bdsim::ks_test(std::move(xs), phi2_cdf).p_value, 0.01);
}

}  // namespace
