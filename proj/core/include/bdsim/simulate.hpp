#pragma once

#include <limits>

#include "bdsim/diffusion.hpp"
#include "bdsim/domain.hpp"
#include "bdsim/offspring.hpp"
#include "bdsim/rng.hpp"
#include "bdsim/spectral.hpp"
#include "bdsim/tree.hpp"

namespace bdsim {

struct SimulationParams {
  Domain domain = Domain::interval(0.0, 3.141592653589793);
  OffspringDistribution offspring = OffspringDistribution::deterministic(2);
  double beta = 0.5;  // branching rate; 0 disables branching
  Vec x0{1.5707963267948966};
  double horizon = std::numeric_limits<double>::infinity();
  // Cap on simulated node records: once reached, every still-pending
  // particle is recorded as a zero-length censored stub (so sibling counts
  // stay intact) and no further randomness is drawn. Total records can
  // therefore exceed the cap by the size of the pending frontier.
  long particle_cap = 2'000'000;
  // Cap on the total lifetime laid down, i.e. on the exploration clock. The
  // depth-first simulation order makes the prefix up to the budget exact even
  // when the tree is truncated beyond it.
  double lifetime_budget = std::numeric_limits<double>::infinity();
  StepParams step{};
  bool store_paths = false;
  int path_stride = 10;  // keep every path_stride-th Euler step
};

// One tree of the branching diffusion: particles diffuse with boundary
// absorption, branch at rate beta into iid offspring counts, and everything
// is censored at the horizon. Node order is depth-first. Each node consumes
// its randomness in a fixed order (lifetime exponential, diffusion steps,
// offspring count), so output is a pure function of (params, rng state).
MarkedTree simulate_tree(const SimulationParams& params, RngStream& rng);

// Tree under the size-biased (martingale) change of measure: one marked spine
// particle diffuses conditioned on survival (Doob transform by the principal
// eigenfunction), branches at rate m*beta into size-biased offspring counts,
// and hands the mark to a uniformly chosen child; all other particles run
// ordinary subtrees. Spine nodes carry on_spine = true.
MarkedTree simulate_spine_tree(const SimulationParams& params, RngStream& rng);

int count_alive(const MarkedTree& tree, double t);

// Sum of phi over the population at time t.
double sum_phi(const MarkedTree& tree, const EigenPair& ep, double t);

// The martingale e^{(lambda1 - beta(m-1)) t} * sum_u phi(X_u(t)); at the
// critical rate the prefactor is 1.
double martingale_M(const MarkedTree& tree, const EigenPair& ep, double beta,
                    double mean_offspring, double t);

// Radon-Nikodym weight M_t / phi(x0) carried by a tree started at x0.
double rn_weight(const MarkedTree& tree, const EigenPair& ep, double beta,
                 double mean_offspring, double t, const Vec& x0);

}  // namespace bdsim
