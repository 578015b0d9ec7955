#include "bdsim/offspring.hpp"

#include <algorithm>
#include <cmath>

#include "bdsim/common.hpp"

namespace bdsim {

OffspringDistribution::OffspringDistribution(const std::vector<int>& ks,
                                             const std::vector<double>& ps) {
  if (ks.empty() || ks.size() != ps.size())
    throw ConfigError("offspring pmf needs matching nonempty k/p lists");
  int kmax = 0;
  for (int k : ks) {
    if (k < 0) throw ConfigError("offspring counts must be nonnegative");
    kmax = std::max(kmax, k);
  }
  p_.assign(static_cast<size_t>(kmax) + 1, 0.0);
  for (size_t i = 0; i < ks.size(); ++i) {
    if (!(ps[i] >= 0.0) || !std::isfinite(ps[i]))
      throw ConfigError("offspring probabilities must be finite and >= 0");
    if (p_[static_cast<size_t>(ks[i])] != 0.0)
      throw ConfigError("duplicate offspring count in pmf");
    p_[static_cast<size_t>(ks[i])] = ps[i];
  }
  finalize();
}

OffspringDistribution OffspringDistribution::deterministic(int k) {
  return OffspringDistribution({k}, {1.0});
}

void OffspringDistribution::finalize() {
  double sum = 0.0;
  mean_ = 0.0;
  ea2_ = 0.0;
  cdf_.resize(p_.size());
  for (size_t k = 0; k < p_.size(); ++k) {
    sum += p_[k];
    mean_ += static_cast<double>(k) * p_[k];
    ea2_ += static_cast<double>(k) * static_cast<double>(k) * p_[k];
    cdf_[k] = sum;
  }
  if (std::abs(sum - 1.0) > 1e-12)
    throw ConfigError("offspring pmf must sum to 1 within 1e-12");
  cdf_.back() = 1.0;  // guard the sampler against the residual 1e-12 slack
}

double OffspringDistribution::pmf(int k) const {
  if (k < 0 || k > max_k()) return 0.0;
  return p_[static_cast<size_t>(k)];
}

double OffspringDistribution::gf(double s) const {
  // Horner on p_K, ..., p_0.
  double acc = 0.0;
  for (size_t k = p_.size(); k-- > 0;) acc = acc * s + p_[k];
  return acc;
}

int OffspringDistribution::sample(RngStream& rng) const {
  const double u = rng.uniform();
  const auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
  return static_cast<int>(it - cdf_.begin());
}

OffspringDistribution OffspringDistribution::size_biased() const {
  if (!(mean_ > 0.0))
    throw ConfigError("size-biased law undefined for zero-mean offspring");
  OffspringDistribution sb;
  sb.p_.assign(p_.size(), 0.0);
  for (size_t k = 1; k < p_.size(); ++k)
    sb.p_[k] = static_cast<double>(k) * p_[k] / mean_;
  sb.finalize();
  return sb;
}

double critical_beta(double lambda1, double mean_offspring) {
  if (!(mean_offspring > 1.0))
    throw ConfigError("critical branching rate needs mean offspring > 1");
  if (!(lambda1 > 0.0)) throw ConfigError("principal eigenvalue must be positive");
  return lambda1 / (mean_offspring - 1.0);
}

}  // namespace bdsim
