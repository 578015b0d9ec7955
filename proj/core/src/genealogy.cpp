#include "bdsim/genealogy.hpp"

#include <algorithm>
#include <cmath>

namespace bdsim {
namespace {

// Quadratic-variation rate of the centered path at position x.
double qv_rate(const Domain& d, const EigenPair& ep, double beta,
               double var_about_one, const Vec& x) {
  const double p = ep.phi(x);
  const Vec g = ep.grad_phi(x);
  double s = beta * var_about_one * p * p;
  for (int i = 0; i < d.dim(); ++i) s += d.coeff(i) * g[i] * g[i];
  return s;
}

}  // namespace

Exploration::Exploration(const Domain& domain)
    : domain_(domain), ep_(first_eigenpair(domain)) {}

Exploration::Exploration(const Domain& domain, double beta,
                         double var_about_one)
    : domain_(domain), ep_(first_eigenpair(domain)),
      qv_(std::make_pair(beta, var_about_one)) {}

void Exploration::add_tree(MarkedTree tree) {
  if (truncated_)
    throw ConfigError("cannot extend an exploration past a truncated tree");
  if (tree.nodes.empty()) throw ConfigError("empty tree");
  if (!have_root_) {
    phi_root_ = ep_.phi(tree.nodes[0].x_birth);
    have_root_ = true;
  } else if (!(tree.nodes[0].x_birth == trees_[0].nodes[0].x_birth)) {
    throw ConfigError("forest trees must share the root start position");
  }

  const int tree_idx = static_cast<int>(trees_.size());
  tree_first_event_.push_back(static_cast<int>(events_.size()));

  // Younger-sibling weight: ysum(child r of u) = ysum(u) + (A_u - r) phi(y_u)
  // with y_u the branch position; the root carries 0.
  std::vector<double> ysum(tree.nodes.size(), 0.0);
  bool seen_stub = false;
  for (size_t id = 0; id < tree.nodes.size(); ++id) {
    const TreeNode& n = tree.nodes[id];
    if (n.parent >= 0) {
      const TreeNode& par = tree.nodes[static_cast<size_t>(n.parent)];
      ysum[id] = ysum[static_cast<size_t>(n.parent)] +
                 (par.offspring() - n.rank) * ep_.phi(par.x_death);
    }
    if (n.terminal == Terminal::CensoredBudget) {
      seen_stub = true;
      continue;
    }
    if (seen_stub)
      throw ConfigError(
          "truncated tree must keep its budget stubs in a trailing block");

    ExplorationEvent ev;
    ev.node = static_cast<int32_t>(id);
    ev.tree = tree_idx;
    ev.start = length_;
    ev.len = n.lifetime();
    ev.birth = n.birth;
    ev.ysum = ysum[id];
    ev.phi_birth = ep_.phi(n.x_birth);
    ev.qv_cum = qv_total_;
    if (qv_) qv_total_ += qv_segment(tree, static_cast<int>(id), ev.len);
    const double jump_part = ev.ysum - phi_root_ * (tree_idx + 1);
    run_min_jump_.push_back(
        run_min_jump_.empty() ? jump_part
                              : std::min(run_min_jump_.back(), jump_part));
    events_.push_back(ev);
    length_ += ev.len;
    sup_height_ = std::max(sup_height_, ev.birth + ev.len);
  }
  if (seen_stub) truncated_ = true;
  trees_.push_back(std::move(tree));
}

int Exploration::event_index(double t) const {
  check_clock(t);
  if (t >= length_) {
    // Clamp to the final positive-length event.
    for (int i = static_cast<int>(events_.size()) - 1; i >= 0; --i)
      if (events_[static_cast<size_t>(i)].len > 0.0) return i;
    throw ConfigError("exploration has zero length");
  }
  auto it = std::upper_bound(
      events_.begin(), events_.end(), t,
      [](double v, const ExplorationEvent& e) { return v < e.start; });
  return static_cast<int>(it - events_.begin()) - 1;
}

double Exploration::height(double t) const {
  const ExplorationEvent& e = events_[static_cast<size_t>(event_index(t))];
  return e.birth + std::min(t - e.start, e.len);
}

Vec Exploration::position(double t) const {
  const ExplorationEvent& e = events_[static_cast<size_t>(event_index(t))];
  const MarkedTree& tr = trees_[static_cast<size_t>(e.tree)];
  return tr.position_at(e.node, e.birth + std::min(t - e.start, e.len));
}

double Exploration::ysum_at(double t) const {
  return events_[static_cast<size_t>(event_index(t))].ysum;
}

int Exploration::lambda_at(double t) const {
  return events_[static_cast<size_t>(event_index(t))].tree + 1;
}

double Exploration::s_value(double t) const {
  const ExplorationEvent& e = events_[static_cast<size_t>(event_index(t))];
  const MarkedTree& tr = trees_[static_cast<size_t>(e.tree)];
  const Vec v = tr.position_at(e.node, e.birth + std::min(t - e.start, e.len));
  return ep_.phi(v) + e.ysum;
}

double Exploration::s_centered(double t) const {
  return s_value(t) - phi_root_ * lambda_at(t);
}

double Exploration::s_prime(double t) const {
  const ExplorationEvent& e = events_[static_cast<size_t>(event_index(t))];
  return e.ysum - phi_root_ * (e.tree + 1);
}

double Exploration::i_prime(double t) const {
  return run_min_jump_[static_cast<size_t>(event_index(t))];
}

// Integral of the qv rate over the first `upto` time units of a lifeline,
// trapezoid over its stored samples.
double Exploration::qv_segment(const MarkedTree& tr, int node,
                               double upto) const {
  const TreeNode& n = tr.nodes[static_cast<size_t>(node)];
  if (upto <= 0.0 || n.lifetime() <= 0.0) return 0.0;
  upto = std::min(upto, n.lifetime());
  const auto [beta, var1] = *qv_;

  double acc = 0.0;
  double t_prev = n.birth;
  double f_prev = qv_rate(domain_, ep_, beta, var1, n.x_birth);
  const double t_end = n.birth + upto;
  auto step_to = [&](double t, const Vec& x) {
    const double f = qv_rate(domain_, ep_, beta, var1, x);
    acc += 0.5 * (f + f_prev) * (t - t_prev);
    t_prev = t;
    f_prev = f;
  };
  for (const PathSample& s : n.interior) {
    if (s.t >= t_end) break;
    step_to(s.t, s.x);
  }
  step_to(t_end, tr.position_at(node, t_end));
  return acc;
}

double Exploration::qv_integral(double t) const {
  if (!qv_)
    throw ConfigError("exploration was built without quadratic-variation parameters");
  const int idx = event_index(t);
  const ExplorationEvent& e = events_[static_cast<size_t>(idx)];
  return e.qv_cum +
         qv_segment(trees_[static_cast<size_t>(e.tree)], e.node, t - e.start);
}

double Exploration::inf_height(double a, double b) const {
  if (b < a) std::swap(a, b);
  double best = height(a);
  const size_t ia = static_cast<size_t>(event_index(a));
  for (size_t i = ia + 1; i < events_.size(); ++i) {
    const ExplorationEvent& e = events_[i];
    if (e.start > b) break;
    best = std::min(best, e.birth);
  }
  return best;
}

double Exploration::inf_s(double a, double b) const {
  if (b < a) std::swap(a, b);
  double best = std::min(s_value(a), s_value(b));
  const size_t ia = static_cast<size_t>(event_index(a));
  for (size_t i = ia + 1; i < events_.size(); ++i) {
    const ExplorationEvent& e = events_[i];
    if (e.start > b) break;
    best = std::min(best, e.phi_birth + e.ysum);
  }
  return best;
}

void Exploration::check_clock(double t) const {
  if (!(t >= 0.0) || !(t <= length_))
    throw ConfigError("exploration clock out of range");
}

int mrca(const MarkedTree& tree, int u, int v) {
  int du = tree.depth_of(u), dv = tree.depth_of(v);
  while (du > dv) { u = tree.nodes[static_cast<size_t>(u)].parent; --du; }
  while (dv > du) { v = tree.nodes[static_cast<size_t>(v)].parent; --dv; }
  while (u != v) {
    u = tree.nodes[static_cast<size_t>(u)].parent;
    v = tree.nodes[static_cast<size_t>(v)].parent;
  }
  return u;
}

// Sibling weight of a single vertex, rebuilt root-first along its ancestry
// (the same floating-point order as the incremental exploration recurrence).
static double vertex_ysum(const MarkedTree& tr, const EigenPair& ep,
                          int node) {
  std::vector<int> chain;
  for (int u = node; u > 0; u = tr.nodes[static_cast<size_t>(u)].parent)
    chain.push_back(u);
  double acc = 0.0;
  for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
    const TreeNode& c = tr.nodes[static_cast<size_t>(*it)];
    const TreeNode& par = tr.nodes[static_cast<size_t>(c.parent)];
    acc += (par.offspring() - c.rank) * ep.phi(par.x_death);
  }
  return acc;
}

DistanceMatrices distance_matrices(const Exploration& ex,
                                   const std::vector<double>& clocks,
                                   double t) {
  if (!(t > 0.0)) throw ConfigError("distance matrices need t > 0");
  const size_t k = clocks.size();
  DistanceMatrices out;
  out.clocks = clocks;
  out.d_star.assign(k * k, 0.0);
  out.d_height.assign(k * k, 0.0);
  out.d_s.assign(k * k, 0.0);

  for (size_t i = 0; i < k; ++i) {
    for (size_t j = i + 1; j < k; ++j) {
      const double r = std::min(clocks[i], clocks[j]);
      const double w = std::max(clocks[i], clocks[j]);
      const double hr = ex.height(r), hw = ex.height(w);

      const double d_star = hr + hw - 2.0 * ex.inf_height(r, w);

      // Genealogical route: join the lifelines at the death of the most
      // recent common ancestor when it is a strict ancestor of both sampled
      // lifelines; when one lifeline is an ancestor of the other (or they
      // coincide) the join sits at the lower sampled height; across distinct
      // trees the join is the forest floor at height zero. The same join
      // cases give the sibling-weight value at the common ancestor.
      const auto& er = ex.events()[static_cast<size_t>(ex.event_index(r))];
      const auto& ew = ex.events()[static_cast<size_t>(ex.event_index(w))];
      double join, y_join;
      if (er.tree != ew.tree) {
        join = 0.0;
        y_join = 0.0;
      } else if (er.node == ew.node) {
        join = std::min(hr, hw);
        y_join = er.ysum;
      } else {
        const MarkedTree& tr = ex.tree(er.tree);
        const int m = mrca(tr, er.node, ew.node);
        if (m != er.node && m != ew.node) {
          join = tr.nodes[static_cast<size_t>(m)].death;
          y_join = vertex_ysum(tr, ex.eigen(), m);
        } else {
          join = std::min(hr, hw);
          y_join = m == er.node ? er.ysum : ew.ysum;
        }
      }

      out.d_star[i * k + j] = out.d_star[j * k + i] = d_star;
      out.d_height[i * k + j] = out.d_height[j * k + i] =
          (hr + hw - 2.0 * join) / t;
      out.d_s[i * k + j] = out.d_s[j * k + i] =
          (er.ysum + ew.ysum - 2.0 * y_join) / t;
    }
  }
  return out;
}

}  // namespace bdsim
