#pragma once

#include <optional>
#include <vector>

#include "bdsim/spectral.hpp"
#include "bdsim/tree.hpp"

namespace bdsim {

// One exploration event: the depth-first visit of a single lifeline. The
// exploration clock runs through lifelines in depth-first order, so event i
// occupies [start, start + len). Within an event the height process rises
// with slope one from `birth`; `ysum` is the sum of phi at the birth
// positions of the younger siblings hanging off the ancestral line (constant
// during the event).
struct ExplorationEvent {
  int32_t node = 0;   // node index within its tree
  int32_t tree = 0;   // tree index within the forest (0-based)
  double start = 0.0;
  double len = 0.0;
  double birth = 0.0;
  double ysum = 0.0;
  double phi_birth = 0.0;  // phi at the node's birth position
  double qv_cum = 0.0;     // quadratic-variation integral up to `start`
};

// Depth-first exploration of a forest of trees sharing a common root start
// position. Trees are appended one at a time; evaluators answer queries at
// any exploration clock below length().
//
// The centered path S̄(t) = phi(V_t) + ysum(t) - phi(x0) * Lambda(t) (with
// Lambda the 1-based index of the current tree) is the forest version of the
// additive functional whose rescaling gives the Brownian limit; its
// quadratic variation accrues at rate beta E(A-1)^2 phi^2(V) + sum_i a_i
// (d_i phi)^2(V) along the motion.
class Exploration {
 public:
  explicit Exploration(const Domain& domain);
  // Enables qv_integral(): beta is the branching rate, var_about_one is
  // E(A-1)^2 under the offspring law.
  Exploration(const Domain& domain, double beta, double var_about_one);

  // Appends a tree (depth-first node order required, i.e. as simulated).
  // A budget-truncated tree contributes its exact explored prefix and closes
  // the forest: adding another tree afterwards throws.
  void add_tree(MarkedTree tree);

  double length() const { return length_; }
  bool truncated() const { return truncated_; }
  int tree_count() const { return static_cast<int>(trees_.size()); }
  const MarkedTree& tree(int i) const { return trees_[static_cast<size_t>(i)]; }
  const std::vector<ExplorationEvent>& events() const { return events_; }
  const EigenPair& eigen() const { return ep_; }
  double phi_root() const { return phi_root_; }

  // Largest height reached on [0, length()): max over events of birth + len.
  double sup_height() const { return sup_height_; }

  int event_index(double t) const;  // event whose interval contains t

  double height(double t) const;
  Vec position(double t) const;
  double ysum_at(double t) const;
  // 1-based index of the tree being explored at clock t.
  int lambda_at(double t) const;
  // S(t) = phi(V_t) + ysum(t); the single-tree path functional.
  double s_value(double t) const;
  // S̄(t) = S(t) - phi(x0) * Lambda(t); the forest-centered path.
  double s_centered(double t) const;
  // Jump part of the centered path: S̄'(t) = ysum(t) - phi(x0) * Lambda(t)
  // (piecewise constant between events).
  double s_prime(double t) const;
  // Running infimum of the jump part, I'(t) = min_{s <= t} S̄'(s). Attained
  // at the current root event, so it equals -phi(x0) * Lambda(t) pathwise;
  // computed independently here so that identity can be asserted.
  double i_prime(double t) const;
  // Integral of the quadratic-variation rate along the exploration up to t
  // (trapezoid over the stored path samples; requires the qv constructor).
  double qv_integral(double t) const;

  // Exact infimum of the height process over [a, b] (a <= b): the height
  // rises within events, so the infimum is attained at a or at the start of
  // an event opening in (a, b].
  double inf_height(double a, double b) const;
  // Infimum of S over [a, b] at event resolution: min of the endpoint values
  // and the event-start values of events opening in (a, b].
  double inf_s(double a, double b) const;

 private:
  void check_clock(double t) const;
  double qv_segment(const MarkedTree& tr, int node, double upto) const;

  Domain domain_;
  EigenPair ep_;
  std::optional<std::pair<double, double>> qv_;  // (beta, E(A-1)^2)
  std::vector<MarkedTree> trees_;
  std::vector<ExplorationEvent> events_;
  std::vector<int> tree_first_event_;
  std::vector<double> run_min_jump_;  // per event: running min of S̄'
  double length_ = 0.0;
  double qv_total_ = 0.0;
  double sup_height_ = 0.0;
  double phi_root_ = 0.0;
  bool truncated_ = false;
  bool have_root_ = false;
};

// Distance matrices over k sampled exploration clocks. d_star is the raw
// path pseudo-metric H_r + H_w - 2 inf H. d_height is (H_i + H_j - 2 h_ij)/t
// where h_ij joins the two lifelines at the death of their most recent
// common ancestor (or at the lower sample height when one is an ancestor of
// the other, or at height zero across distinct trees); with that join rule
// t * d_height == d_star identically. d_s is (Y_i + Y_j - 2 Y_mrca)/t built
// from the vertex sibling-weights Y = ysum (zero across distinct trees);
// b * d_s approaches d_height only in the scaling limit.
struct DistanceMatrices {
  std::vector<double> clocks;    // the k sampled clocks, as given
  std::vector<double> d_star;    // k*k row-major, symmetric, zero diag
  std::vector<double> d_height;  // time-metric matrix, rescaled by 1/t
  std::vector<double> d_s;       // path-metric matrix, rescaled by 1/t
};

DistanceMatrices distance_matrices(const Exploration& ex,
                                   const std::vector<double>& clocks,
                                   double t);

// Most recent common ancestor of two nodes of one tree (node indices).
int mrca(const MarkedTree& tree, int u, int v);

}  // namespace bdsim
