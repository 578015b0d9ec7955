#pragma once

#include <vector>

#include "bdsim/rng.hpp"

namespace bdsim {

// Finite-support offspring law. The size-biased companion (k p_k / m) drives
// the spine construction. Supercriticality (m > 1) is demanded where it
// matters (critical_beta), not here, so sub/critical laws remain expressible.
class OffspringDistribution {
 public:
  OffspringDistribution(const std::vector<int>& ks, const std::vector<double>& ps);
  static OffspringDistribution deterministic(int k);

  double pmf(int k) const;
  int max_k() const { return static_cast<int>(p_.size()) - 1; }
  double mean() const { return mean_; }
  double second_moment() const { return ea2_; }
  // E (A-1)^2, the branching factor in the quadratic-variation density.
  double var_about_one() const { return ea2_ - 2.0 * mean_ + 1.0; }
  // Generating function E s^A.
  double gf(double s) const;

  int sample(RngStream& rng) const;
  OffspringDistribution size_biased() const;

 private:
  OffspringDistribution() = default;
  void finalize();
  std::vector<double> p_;    // dense pmf over 0..max_k
  std::vector<double> cdf_;  // inclusive cumulative
  double mean_ = 0.0, ea2_ = 0.0;
};

// beta_c = lambda / (m - 1); the branching rate at which mean growth exactly
// offsets the ground-state decay.
double critical_beta(double lambda1, double mean_offspring);

}  // namespace bdsim
