#include "bdsim/simulate.hpp"

#include <cmath>
#include <optional>
#include <vector>

namespace bdsim {
namespace {

struct Pending {
  int32_t parent;
  int32_t rank;
  double birth;
  Vec x_birth;
  bool on_spine;
};

struct LifelineResult {
  Terminal terminal;
  double death;
  Vec x_death;
};

// Runs one particle from (birth, x) to its branch time, absorption, or the
// horizon. The branch candidate is drawn before any stepping. The particle
// takes floor(candidate/h) full Euler steps and branches at the resulting
// position (no partial step); an absorbed step ends at the step's midpoint in
// time with the position projected onto the face; a horizon crossing takes
// one partial step so the final sample sits exactly at the horizon.
LifelineResult run_lifeline(TreeNode& node, const SimulationParams& p,
                            const EigenPair* spine_ep, double rate,
                            RngStream& rng) {
  const double candidate = rng.exponential(rate);
  const double local_horizon = p.horizon - node.birth;
  const double until = std::min(candidate, local_horizon);
  const double h = p.step.h;

  Vec x = node.x_birth;
  double t = 0.0;  // local time
  long step_index = 0;
  while (t + h <= until) {
    if (spine_ep != nullptr) {
      x = step_conditioned(*spine_ep, x, p.step, rng);
    } else {
      KilledStep s = step_killed(p.domain, x, p.step, rng);
      if (s.absorbed)
        return {Terminal::Killed, node.birth + t + s.time_frac * h, s.pos};
      x = s.pos;
    }
    t += h;
    ++step_index;
    if (p.store_paths && step_index % p.path_stride == 0 && t < until)
      node.interior.push_back({node.birth + t, x});
  }

  if (candidate <= local_horizon)
    return {Terminal::Branch, node.birth + candidate, x};

  // Horizon first: finish the remainder with one short step so the stored
  // endpoint is the position at the horizon itself.
  const double rem = local_horizon - t;
  if (rem > 0.0) {
    if (spine_ep != nullptr) {
      StepParams sp = p.step;
      sp.h = rem;
      x = step_conditioned(*spine_ep, x, sp, rng);
    } else {
      StepParams sp = p.step;
      sp.h = rem;
      KilledStep s = step_killed(p.domain, x, sp, rng);
      if (s.absorbed)
        return {Terminal::Killed, node.birth + t + s.time_frac * rem, s.pos};
      x = s.pos;
    }
  }
  return {Terminal::CensoredHorizon, p.horizon, x};
}

MarkedTree simulate_impl(const SimulationParams& params, RngStream& rng,
                         bool spine) {
  if (!params.domain.contains(params.x0))
    throw ConfigError("start position must lie inside the open domain");
  if (params.beta < 0.0) throw ConfigError("branching rate must be >= 0");
  if (params.horizon <= 0.0) throw ConfigError("horizon must be positive");
  if (params.path_stride < 1) throw ConfigError("path_stride must be >= 1");

  std::optional<EigenPair> ep;
  std::optional<OffspringDistribution> biased;
  double rate = params.beta;
  double spine_rate = params.beta;
  if (spine) {
    ep.emplace(first_eigenpair(params.domain));
    biased = params.offspring.size_biased();
    spine_rate = params.beta * params.offspring.mean();
  }

  MarkedTree tree;
  tree.horizon = params.horizon;

  std::vector<Pending> stack;
  stack.push_back({-1, 1, 0.0, params.x0, spine});

  while (!stack.empty()) {
    const Pending pend = stack.back();
    stack.pop_back();

    const bool truncate =
        tree.size() >= params.particle_cap ||
        tree.total_lifetime > params.lifetime_budget;
    if (tree.size() >= params.particle_cap) tree.hit_particle_cap = true;
    if (tree.total_lifetime > params.lifetime_budget)
      tree.hit_lifetime_budget = true;

    const int32_t id = static_cast<int32_t>(tree.size());
    tree.nodes.emplace_back();
    TreeNode& node = tree.nodes.back();
    node.parent = pend.parent;
    node.rank = pend.rank;
    node.birth = pend.birth;
    node.x_birth = pend.x_birth;
    node.x_death = pend.x_birth;
    node.on_spine = pend.on_spine;
    if (pend.parent >= 0)
      tree.nodes[static_cast<size_t>(pend.parent)].children.push_back(id);

    if (truncate) {
      // Past the cap: record a zero-length stub so the parent's offspring
      // count stays intact, but draw nothing and descend no further.
      node.death = node.birth;
      node.terminal = Terminal::CensoredBudget;
      continue;
    }

    const bool on_spine = pend.on_spine;
    LifelineResult res = run_lifeline(
        node, params, on_spine ? &*ep : nullptr,
        on_spine ? spine_rate : rate, rng);
    node.death = res.death;
    node.x_death = res.x_death;
    node.terminal = res.terminal;
    tree.total_lifetime += node.lifetime();

    if (res.terminal != Terminal::Branch) continue;

    int count;
    int32_t spine_rank = 0;
    if (on_spine) {
      count = biased->sample(rng);
      spine_rank = 1 + static_cast<int32_t>(rng.below(
                           static_cast<uint64_t>(count)));
    } else {
      count = params.offspring.sample(rng);
    }
    // Push in reverse rank order so rank 1 pops first (depth-first order).
    for (int r = count; r >= 1; --r)
      stack.push_back({id, r, node.death, node.x_death,
                       on_spine && r == spine_rank});
  }
  return tree;
}

}  // namespace

MarkedTree simulate_tree(const SimulationParams& params, RngStream& rng) {
  return simulate_impl(params, rng, false);
}

MarkedTree simulate_spine_tree(const SimulationParams& params,
                               RngStream& rng) {
  if (params.offspring.mean() <= 0.0)
    throw ConfigError("spine simulation needs a positive offspring mean");
  if (params.beta <= 0.0)
    throw ConfigError("spine simulation needs a positive branching rate");
  return simulate_impl(params, rng, true);
}

int count_alive(const MarkedTree& tree, double t) {
  int n = 0;
  for (int i = 0; i < tree.size(); ++i)
    if (tree.alive_at(i, t)) ++n;
  return n;
}

double sum_phi(const MarkedTree& tree, const EigenPair& ep, double t) {
  double s = 0.0;
  for (int i = 0; i < tree.size(); ++i)
    if (tree.alive_at(i, t)) s += ep.phi(tree.position_at(i, t));
  return s;
}

double martingale_M(const MarkedTree& tree, const EigenPair& ep, double beta,
                    double mean_offspring, double t) {
  const double drift = ep.lambda() - beta * (mean_offspring - 1.0);
  return std::exp(drift * t) * sum_phi(tree, ep, t);
}

double rn_weight(const MarkedTree& tree, const EigenPair& ep, double beta,
                 double mean_offspring, double t, const Vec& x0) {
  return martingale_M(tree, ep, beta, mean_offspring, t) / ep.phi(x0);
}

}  // namespace bdsim
