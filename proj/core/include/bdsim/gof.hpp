#pragma once

#include <functional>
#include <vector>

namespace bdsim {

double normal_cdf(double z);
double half_normal_cdf(double x, double sigma);  // law of |N(0, sigma^2)|
double exponential_cdf(double x, double mean);

// Regularized lower incomplete gamma P(a, x).
double gamma_p(double a, double x);
double chi2_cdf(double x, double dof);

double mean(const std::vector<double>& xs);
double variance(const std::vector<double>& xs);  // unbiased
// q-th empirical quantile (linear interpolation); xs need not be sorted.
double quantile(std::vector<double> xs, double q);

struct KsResult {
  double statistic = 0.0;  // sup-distance D
  double n_effective = 0.0;
  double p_value = 1.0;
};

// One-sample Kolmogorov-Smirnov against a continuous CDF.
KsResult ks_test(std::vector<double> sample,
                 const std::function<double(double)>& cdf);
// Two-sample Kolmogorov-Smirnov.
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

struct Chi2Result {
  double statistic = 0.0;
  double dof = 0.0;
  double p_value = 1.0;
};

// Pearson chi-square with given expected counts (same length, all > 0).
// dof = bins - 1 - fitted_params.
Chi2Result chi2_test(const std::vector<double>& observed,
                     const std::vector<double>& expected, int fitted_params = 0);

struct Interval {
  double lo = 0.0, hi = 0.0;
  bool contains(double v) const { return lo <= v && v <= hi; }
};

// Wilson score interval for a binomial proportion.
Interval wilson_interval(long successes, long trials, double z = 1.959963984540054);

// Standard error of the mean of a correlated sequence via batch means.
double batch_means_se(const std::vector<double>& xs, int batches = 32);

}  // namespace bdsim
