#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <vector>

#include "bdsim/common.hpp"

namespace bdsim {

enum class Terminal : uint8_t {
  Branch,           // died branching into children.size() offspring (possibly 0)
  Killed,           // absorbed at the boundary; offspring 0
  CensoredHorizon,  // alive when the time horizon closed
  CensoredBudget,   // truncated by the particle cap or the lifetime budget
};

struct PathSample {
  double t;  // absolute tree time
  Vec x;
};

struct TreeNode {
  int32_t parent = -1;  // -1 at the root
  int32_t rank = 1;     // 1-based position among siblings
  std::vector<int32_t> children;  // node indices in rank order
  double birth = 0.0, death = 0.0;
  Vec x_birth, x_death;
  // Interior path samples, strictly between birth and death; endpoints live
  // in x_birth/x_death. Empty unless path storage was requested.
  std::vector<PathSample> interior;
  Terminal terminal = Terminal::Branch;
  bool on_spine = false;

  double lifetime() const { return death - birth; }
  int offspring() const { return static_cast<int>(children.size()); }
};

// Labelled tree of particle lifelines. Nodes are stored in depth-first
// (lexicographic label) order with the root at index 0; simulation emits them
// in that order, which is also the exploration order.
struct MarkedTree {
  std::vector<TreeNode> nodes;
  double horizon = std::numeric_limits<double>::infinity();
  bool hit_particle_cap = false;
  bool hit_lifetime_budget = false;
  double total_lifetime = 0.0;  // sum of all lifetimes (the exploration length)

  int size() const { return static_cast<int>(nodes.size()); }

  // Membership of the population at time t: birth <= t < death, except that a
  // horizon-censored node still counts at t == death (it was alive when the
  // clock stopped, and the horizon is exactly where runs get evaluated).
  bool alive_at(int node, double t) const {
    const TreeNode& n = nodes[static_cast<size_t>(node)];
    if (n.terminal == Terminal::CensoredBudget) return false;
    if (t < n.birth || t > n.death) return false;
    if (t < n.death) return true;
    return n.terminal == Terminal::CensoredHorizon;
  }

  std::vector<int> alive_set(double t) const {
    std::vector<int> out;
    for (int i = 0; i < size(); ++i)
      if (alive_at(i, t)) out.push_back(i);
    return out;
  }

  // Linear interpolation between the stored samples bracketing t.
  Vec position_at(int node, double t) const {
    const TreeNode& n = nodes[static_cast<size_t>(node)];
    if (t <= n.birth) return n.x_birth;
    if (t >= n.death) return n.x_death;
    double t0 = n.birth, t1 = n.death;
    Vec x0 = n.x_birth, x1 = n.x_death;
    if (!n.interior.empty()) {
      const auto it = std::lower_bound(
          n.interior.begin(), n.interior.end(), t,
          [](const PathSample& s, double v) { return s.t < v; });
      if (it != n.interior.end() && it->t < t1) {
        t1 = it->t;
        x1 = it->x;
      }
      if (it != n.interior.begin()) {
        t0 = (it - 1)->t;
        x0 = (it - 1)->x;
      }
    }
    if (t1 <= t0) return x1;
    return lerp(x0, x1, (t - t0) / (t1 - t0));
  }

  // Label as the chain of sibling ranks from the root (root label is empty).
  std::vector<int> label_of(int node) const {
    std::vector<int> lab;
    for (int u = node; u > 0; u = nodes[static_cast<size_t>(u)].parent)
      lab.push_back(nodes[static_cast<size_t>(u)].rank);
    std::reverse(lab.begin(), lab.end());
    return lab;
  }

  int depth_of(int node) const {
    int d = 0;
    for (int u = node; u > 0; u = nodes[static_cast<size_t>(u)].parent) ++d;
    return d;
  }
};

}  // namespace bdsim
