// Goodness-of-fit toolbox against closed-form values, exact hand-worked
// small-sample statistics, and a meta-test of the KS p-value calibration.

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "bdsim/gof.hpp"
#include "bdsim/rng.hpp"

namespace {

TEST(DistributionFunctions, NormalCdfKnownValues) {
  EXPECT_NEAR(bdsim::normal_cdf(0.0), 0.5, 1e-15);
  EXPECT_NEAR(bdsim::normal_cdf(1.0), 0.84134474606854293, 1e-12);
  EXPECT_NEAR(bdsim::normal_cdf(3.0), 0.9986501019683699, 1e-12);
  EXPECT_NEAR(bdsim::normal_cdf(-1.96), 0.024997895148220435, 1e-12);
  for (double z : {0.3, 1.7, 2.9})
    EXPECT_NEAR(bdsim::normal_cdf(-z), 1.0 - bdsim::normal_cdf(z), 1e-14);
}

TEST(DistributionFunctions, HalfNormalAndExponential) {
  // |N(0, sigma^2)| has CDF 2 Phi(x/sigma) - 1 on x >= 0.
  for (double x : {0.2, 1.0, 2.5})
    EXPECT_NEAR(bdsim::half_normal_cdf(x, 2.0),
                2.0 * bdsim::normal_cdf(x / 2.0) - 1.0, 1e-13);
  EXPECT_EQ(bdsim::half_normal_cdf(-0.5, 1.0), 0.0);
  EXPECT_NEAR(bdsim::exponential_cdf(3.0, 3.0), 1.0 - std::exp(-1.0), 1e-14);
  EXPECT_EQ(bdsim::exponential_cdf(-1.0, 3.0), 0.0);
}

TEST(DistributionFunctions, RegularizedGammaClosedForms) {
  EXPECT_EQ(bdsim::gamma_p(0.5, 0.0), 0.0);
  // P(1/2, x) = erf(sqrt(x)).
  EXPECT_NEAR(bdsim::gamma_p(0.5, 0.25), 0.52049987781304652, 1e-12);
  // P(1, x) = 1 - e^{-x}.
  EXPECT_NEAR(bdsim::gamma_p(1.0, 2.0), 1.0 - std::exp(-2.0), 1e-12);
  // Integer a: Poisson tail identity at a = 5, x = 5.
  EXPECT_NEAR(bdsim::gamma_p(5.0, 5.0), 0.55950671493478765, 1e-12);
  // Half-integer a: P(3/2, x) = erf(sqrt(x)) - 2 sqrt(x/pi) e^{-x}.
  EXPECT_NEAR(bdsim::gamma_p(1.5, 2.0), 0.73853587005088928, 1e-12);
}

TEST(DistributionFunctions, Chi2CdfKnownPercentiles) {
  // 1 dof: CDF(z_{0.975}^2) = 0.95; 2 dof: CDF(-2 ln 0.05) = 0.95 exactly.
  EXPECT_NEAR(bdsim::chi2_cdf(3.8414588206941254, 1.0), 0.95, 1e-12);
  EXPECT_NEAR(bdsim::chi2_cdf(5.9914645471079817, 2.0), 0.95, 1e-12);
  // 2 dof is the exponential of mean 2.
  for (double x : {0.5, 4.0})
    EXPECT_NEAR(bdsim::chi2_cdf(x, 2.0), 1.0 - std::exp(-x / 2.0), 1e-13);
}

TEST(SampleStatistics, MeanVarianceQuantileHandWorked) {
  const std::vector<double> xs{1.0, 2.0, 3.0, 4.0};
  EXPECT_NEAR(bdsim::mean(xs), 2.5, 1e-15);
  EXPECT_NEAR(bdsim::variance(xs), 5.0 / 3.0, 1e-15);  // unbiased
  EXPECT_NEAR(bdsim::quantile(xs, 0.0), 1.0, 1e-15);
  EXPECT_NEAR(bdsim::quantile(xs, 1.0), 4.0, 1e-15);
  EXPECT_NEAR(bdsim::quantile(xs, 0.5), 2.5, 1e-15);
  EXPECT_NEAR(bdsim::quantile({4.0, 1.0, 3.0, 2.0}, 1.0 / 3.0), 2.0, 1e-12);
}

TEST(KolmogorovSmirnov, ExactStatisticOnTinySample) {
  // Against U(0,1): D = max(1/3 - 0.1, 0.9 - 2/3) = 7/30.
  const bdsim::KsResult r = bdsim::ks_test(
      {0.9, 0.1, 0.5}, [](double x) { return x; });
  EXPECT_NEAR(r.statistic, 7.0 / 30.0, 1e-14);
  EXPECT_NEAR(r.n_effective, 3.0, 1e-15);
}

TEST(KolmogorovSmirnov, PValueCalibrationMetaTest) {
  // 100 uniform samples of size 400: the p-values must themselves be uniform.
  std::vector<double> ps;
  for (uint64_t r = 0; r < 100; ++r) {
    bdsim::RngStream rng = bdsim::RngStream::derive(987654, r);
    std::vector<double> xs(400);
    for (double& x : xs) x = rng.uniform();
    ps.push_back(bdsim::ks_test(std::move(xs), [](double v) { return v; }).p_value);
  }
  const bdsim::KsResult meta =
      bdsim::ks_test(ps, [](double p) { return p; });
  EXPECT_GT(meta.p_value, 0.01);
  // Should not be degenerate either (e.g. all p = 1).
  EXPECT_GT(bdsim::variance(ps), 0.01);
}

TEST(KolmogorovSmirnov, DetectsAShiftedAlternative) {
  bdsim::RngStream rng = bdsim::RngStream::derive(24680, 0);
  std::vector<double> xs(2000);
  for (double& x : xs) x = rng.normal() + 0.3;
  const bdsim::KsResult r =
      bdsim::ks_test(std::move(xs), [](double v) { return bdsim::normal_cdf(v); });
  EXPECT_LT(r.p_value, 1e-6);
}

TEST(KolmogorovSmirnov, TwoSampleExactAndCalibrated) {
  // ECDFs of {1,3} and {2,4} sit 0.5 apart on [1,2).
  const bdsim::KsResult tiny = bdsim::ks_two_sample({1.0, 3.0}, {2.0, 4.0});
  EXPECT_NEAR(tiny.statistic, 0.5, 1e-14);

  bdsim::RngStream ra = bdsim::RngStream::derive(1357, 0);
  bdsim::RngStream rb = bdsim::RngStream::derive(1357, 1);
  std::vector<double> a(1500), b(1500), c(1500);
  for (double& x : a) x = ra.exponential(1.0);
  for (double& x : b) x = rb.exponential(1.0);
  EXPECT_GT(bdsim::ks_two_sample(a, b).p_value, 0.01);
  for (size_t i = 0; i < c.size(); ++i) c[i] = b[i] + 0.5;
  EXPECT_LT(bdsim::ks_two_sample(a, c).p_value, 1e-4);
}

TEST(ChiSquare, HandWorkedTwoBins) {
  const bdsim::Chi2Result r = bdsim::chi2_test({55.0, 45.0}, {50.0, 50.0});
  EXPECT_NEAR(r.statistic, 1.0, 1e-13);
  EXPECT_NEAR(r.dof, 1.0, 1e-15);
  EXPECT_NEAR(r.p_value, 0.31731050786291415, 1e-10);
  const bdsim::Chi2Result fitted =
      bdsim::chi2_test({30.0, 40.0, 30.0}, {33.0, 34.0, 33.0}, 1);
  EXPECT_NEAR(fitted.dof, 1.0, 1e-15);
}

TEST(WilsonInterval, KnownValueAndEdgeCases) {
  const bdsim::Interval iv = bdsim::wilson_interval(50, 100);
  EXPECT_NEAR(iv.lo, 0.40383153036599567, 1e-12);
  EXPECT_NEAR(iv.hi, 0.59616846963400438, 1e-12);
  EXPECT_TRUE(iv.contains(0.5));
  EXPECT_FALSE(iv.contains(0.61));
  EXPECT_NEAR(bdsim::wilson_interval(0, 50).lo, 0.0, 1e-12);
  EXPECT_NEAR(bdsim::wilson_interval(50, 50).hi, 1.0, 1e-12);
}

TEST(BatchMeans, IidMatchesNaiveSeWhileAr1Inflates) {
  const int n = 3200;
  bdsim::RngStream rng = bdsim::RngStream::derive(102030, 0);
  std::vector<double> iid(n), ar(n);
  for (double& x : iid) x = rng.normal();
  double prev = 0.0;
  const double rho = 0.9, innov = std::sqrt(1.0 - rho * rho);
  for (double& x : ar) {
    prev = rho * prev + innov * rng.normal();
    x = prev;
  }
  const double naive_iid =
      std::sqrt(bdsim::variance(iid) / static_cast<double>(n));
  const double se_iid = bdsim::batch_means_se(iid);
  EXPECT_GT(se_iid, 0.6 * naive_iid);
  EXPECT_LT(se_iid, 1.6 * naive_iid);

  // AR(1) with rho = 0.9: true SE is sqrt(19) = 4.36x the naive value.
  const double naive_ar =
      std::sqrt(bdsim::variance(ar) / static_cast<double>(n));
  const double se_ar = bdsim::batch_means_se(ar);
  EXPECT_GT(se_ar, 2.5 * naive_ar);
  EXPECT_LT(se_ar, 7.0 * naive_ar);
}

}  // namespace
