#include "bdsim/gof.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "bdsim/common.hpp"

namespace bdsim {
namespace {

// Kolmogorov tail Q(lambda) = 2 sum_{j>=1} (-1)^{j-1} exp(-2 j^2 lambda^2).
double kolmogorov_q(double lambda) {
  if (lambda < 1e-8) return 1.0;
  double sum = 0.0;
  double sign = 1.0;
  for (int j = 1; j <= 200; ++j) {
    const double term = std::exp(-2.0 * j * j * lambda * lambda);
    sum += sign * term;
    if (term < 1e-16 * std::abs(sum) || term < 1e-300) break;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

double ks_pvalue(double d, double n_eff) {
  const double rn = std::sqrt(n_eff);
  return kolmogorov_q((rn + 0.12 + 0.11 / rn) * d);
}

double gamma_p_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int i = 0; i < 10000; ++i) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::abs(del) < std::abs(sum) * 1e-15)
      return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
  }
  throw std::runtime_error("gamma_p series failed to converge");
}

// Continued fraction for Q(a, x) = 1 - P(a, x), modified Lentz.
double gamma_q_cf(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 10000; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-15)
      return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
  }
  throw std::runtime_error("gamma_q continued fraction failed to converge");
}

}  // namespace

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double half_normal_cdf(double x, double sigma) {
  if (x <= 0.0) return 0.0;
  return std::erf(x / (sigma * std::sqrt(2.0)));
}

double exponential_cdf(double x, double mean) {
  if (x <= 0.0) return 0.0;
  return -std::expm1(-x / mean);
}

double gamma_p(double a, double x) {
  if (a <= 0.0 || x < 0.0) throw ConfigError("gamma_p requires a > 0, x >= 0");
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) return gamma_p_series(a, x);
  return 1.0 - gamma_q_cf(a, x);
}

double chi2_cdf(double x, double dof) {
  if (x <= 0.0) return 0.0;
  return gamma_p(0.5 * dof, 0.5 * x);
}

double mean(const std::vector<double>& xs) {
  if (xs.empty()) throw ConfigError("mean of empty sample");
  double s = 0.0;
  for (double v : xs) s += v;
  return s / static_cast<double>(xs.size());
}

double variance(const std::vector<double>& xs) {
  if (xs.size() < 2) throw ConfigError("variance needs at least two values");
  const double m = mean(xs);
  double s = 0.0;
  for (double v : xs) s += (v - m) * (v - m);
  return s / static_cast<double>(xs.size() - 1);
}

double quantile(std::vector<double> xs, double q) {
  if (xs.empty()) throw ConfigError("quantile of empty sample");
  q = std::clamp(q, 0.0, 1.0);
  std::sort(xs.begin(), xs.end());
  const double pos = q * (static_cast<double>(xs.size()) - 1.0);
  const size_t i = static_cast<size_t>(pos);
  if (i + 1 >= xs.size()) return xs.back();
  const double w = pos - static_cast<double>(i);
  return xs[i] * (1.0 - w) + xs[i + 1] * w;
}

KsResult ks_test(std::vector<double> sample,
                 const std::function<double(double)>& cdf) {
  if (sample.empty()) throw ConfigError("KS test needs a non-empty sample");
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    d = std::max(d, std::abs(f - static_cast<double>(i) / n));
    d = std::max(d, std::abs(static_cast<double>(i + 1) / n - f));
  }
  KsResult r;
  r.statistic = d;
  r.n_effective = n;
  r.p_value = ks_pvalue(d, n);
  return r;
}

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty())
    throw ConfigError("two-sample KS needs non-empty samples");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  double d = 0.0;
  size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= v) ++i;
    while (j < b.size() && b[j] <= v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na -
                             static_cast<double>(j) / nb));
  }
  KsResult r;
  r.statistic = d;
  r.n_effective = na * nb / (na + nb);
  r.p_value = ks_pvalue(d, r.n_effective);
  return r;
}

Chi2Result chi2_test(const std::vector<double>& observed,
                     const std::vector<double>& expected, int fitted_params) {
  if (observed.size() != expected.size() || observed.empty())
    throw ConfigError("chi2 test needs matching non-empty bins");
  double stat = 0.0;
  for (size_t k = 0; k < observed.size(); ++k) {
    if (expected[k] <= 0.0)
      throw ConfigError("chi2 expected counts must be positive");
    const double diff = observed[k] - expected[k];
    stat += diff * diff / expected[k];
  }
  Chi2Result r;
  r.statistic = stat;
  r.dof = static_cast<double>(observed.size()) - 1.0 - fitted_params;
  if (r.dof <= 0.0) throw ConfigError("chi2 test has no degrees of freedom");
  r.p_value = 1.0 - chi2_cdf(stat, r.dof);
  return r;
}

Interval wilson_interval(long successes, long trials, double z) {
  if (trials <= 0 || successes < 0 || successes > trials)
    throw ConfigError("wilson_interval needs 0 <= successes <= trials");
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (p + z2 / (2.0 * n)) / denom;
  const double half =
      z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  return {center - half, center + half};
}

double batch_means_se(const std::vector<double>& xs, int batches) {
  if (batches < 2 || xs.size() < static_cast<size_t>(2 * batches))
    throw ConfigError("batch_means_se needs at least two points per batch");
  const size_t per = xs.size() / static_cast<size_t>(batches);
  std::vector<double> bm;
  bm.reserve(static_cast<size_t>(batches));
  for (int k = 0; k < batches; ++k) {
    double s = 0.0;
    for (size_t i = static_cast<size_t>(k) * per; i < static_cast<size_t>(k + 1) * per; ++i)
      s += xs[i];
    bm.push_back(s / static_cast<double>(per));
  }
  return std::sqrt(variance(bm) / static_cast<double>(batches));
}

}  // namespace bdsim
