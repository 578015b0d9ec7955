// The conditioned Brownian excursion sampler and its tree-distance readers:
// structural invariants, the exact sup ratio law P(sup > s | sup >= l) = l/s,
// and hand-computed values on a fixed grid path.

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "bdsim/common.hpp"
#include "bdsim/crt.hpp"
#include "bdsim/gof.hpp"
#include "bdsim/rng.hpp"

namespace {

TEST(Excursion, RejectsBadArguments) {
  bdsim::RngStream rng = bdsim::RngStream::derive(661001, 0);
  EXPECT_THROW(bdsim::sample_conditioned_excursion(0.0, 10.0, 1e-3, rng),
               bdsim::ConfigError);
  EXPECT_THROW(bdsim::sample_conditioned_excursion(1.0, 10.0, 0.0, rng),
               bdsim::ConfigError);
  EXPECT_THROW(bdsim::sample_conditioned_excursion(1.0, 1e-3, 1e-3, rng),
               bdsim::ConfigError);
}

TEST(Excursion, StructuralInvariants) {
  const double level = 1.0, cap = 500.0, dt = 2e-3;
  bdsim::RngStream rng = bdsim::RngStream::derive(661002, 0);
  for (int i = 0; i < 120; ++i) {
    const bdsim::ConditionedExcursion e =
        bdsim::sample_conditioned_excursion(level, cap, dt, rng, 2000.0);
    ASSERT_GE(e.path.size(), 3u);
    EXPECT_EQ(e.path.front(), 0.0);
    EXPECT_EQ(e.path.back(), 0.0);
    double sup = 0.0;
    for (double v : e.path) {
      EXPECT_GE(v, 0.0);
      sup = std::max(sup, v);
    }
    EXPECT_EQ(e.sup, sup);
    EXPECT_GE(e.sup, level);
    EXPECT_EQ(e.dt, dt);
    EXPECT_EQ(e.zeta, (static_cast<double>(e.path.size()) - 1.0) * dt);
    // The length gate closes on the interior grid, so the duration can
    // overrun the cap by at most two grid cells.
    EXPECT_LE(e.zeta, cap + 2.0 * dt);
  }
}

TEST(Excursion, DeterministicGivenTheStream) {
  bdsim::RngStream r1 = bdsim::RngStream::derive(661003, 5);
  bdsim::RngStream r2 = bdsim::RngStream::derive(661003, 5);
  const bdsim::ConditionedExcursion a =
      bdsim::sample_conditioned_excursion(1.0, 200.0, 2e-3, r1);
  const bdsim::ConditionedExcursion b =
      bdsim::sample_conditioned_excursion(1.0, 200.0, 2e-3, r2);
  EXPECT_EQ(a.path, b.path);
  EXPECT_EQ(a.sup, b.sup);
}

TEST(Excursion, SupFollowsTheRatioLaw) {
  // Among excursions with sup >= l, P(sup > s) = l/s exactly in the
  // continuum; the grid walk sees it up to O(sqrt(dt)) boundary blur.
  const double level = 1.0, cap = 500.0, dt = 2e-3;
  bdsim::RngStream rng = bdsim::RngStream::derive(661004, 0);
  std::vector<double> sups(250);
  for (double& s : sups)
    s = bdsim::sample_conditioned_excursion(level, cap, dt, rng, 2000.0).sup;
  const auto cdf = [level](double s) {
    return s <= level ? 0.0 : 1.0 - level / s;
  };
  EXPECT_GT(bdsim::ks_test(std::move(sups), cdf).p_value, 0.01);
}

TEST(Excursion, LongOnesAreCountedWhenDiscarded) {
  // A tight duration cap forces qualifying-but-long excursions to be thrown
  // away and tallied; a generous cap tallies none.
  bdsim::RngStream rng = bdsim::RngStream::derive(661005, 0);
  long discarded = 0;
  for (int i = 0; i < 40; ++i)
    (void)bdsim::sample_conditioned_excursion(1.0, 1.0, 2e-3, rng, 2000.0,
                                              &discarded);
  EXPECT_GT(discarded, 0);
  long none = 0;
  bdsim::RngStream rng2 = bdsim::RngStream::derive(661006, 0);
  for (int i = 0; i < 10; ++i)
    (void)bdsim::sample_conditioned_excursion(0.2, 2000.0, 2e-3, rng2, 2000.0,
                                              &none);
  EXPECT_EQ(none, 0);
}

TEST(ExcursionReaders, HandComputedValuesOnAFixedPath) {
  bdsim::ConditionedExcursion e;
  e.dt = 0.5;
  e.path = {0.0, 1.0, 3.0, 2.0, 0.0};
  e.zeta = 2.0;
  e.sup = 3.0;

  EXPECT_EQ(bdsim::excursion_value(e, -1.0), 0.0);
  EXPECT_EQ(bdsim::excursion_value(e, 0.0), 0.0);
  EXPECT_NEAR(bdsim::excursion_value(e, 0.25), 0.5, 1e-15);
  EXPECT_NEAR(bdsim::excursion_value(e, 0.75), 2.0, 1e-15);
  EXPECT_EQ(bdsim::excursion_value(e, 1.0), 3.0);  // exact grid point
  EXPECT_NEAR(bdsim::excursion_value(e, 1.9), 0.4, 1e-15);
  EXPECT_EQ(bdsim::excursion_value(e, 5.0), 0.0);

  EXPECT_NEAR(bdsim::excursion_min(e, 0.25, 1.9), 0.4, 1e-15);
  EXPECT_NEAR(bdsim::excursion_min(e, 0.6, 0.9), 1.4, 1e-15);  // no grid point
  EXPECT_NEAR(bdsim::excursion_min(e, 1.9, 0.25), 0.4, 1e-15);  // order-free
  EXPECT_EQ(bdsim::excursion_min(e, -1.0, 5.0), 0.0);

  const std::vector<double> d =
      bdsim::excursion_distance_matrix(e, {0.25, 0.75, 1.9}, 2.0);
  ASSERT_EQ(d.size(), 9u);
  EXPECT_EQ(d[0], 0.0);
  EXPECT_EQ(d[4], 0.0);
  EXPECT_EQ(d[8], 0.0);
  EXPECT_NEAR(d[1], 3.0, 1e-15);  // (0.5 + 2.0 - 2*0.5) * 2
  EXPECT_NEAR(d[2], 0.2, 1e-15);  // (0.5 + 0.4 - 2*0.4) * 2
  EXPECT_NEAR(d[5], 3.2, 1e-15);  // (2.0 + 0.4 - 2*0.4) * 2
  EXPECT_EQ(d[1], d[3]);
  EXPECT_EQ(d[2], d[6]);
  EXPECT_EQ(d[5], d[7]);
}

}  // namespace
