#include "bdsim/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "bdsim/crt.hpp"
#include "bdsim/genealogy.hpp"
#include "bdsim/simulate.hpp"

namespace bdsim {
namespace {

using nlohmann::json;

constexpr uint64_t kSaltSurvival = 0x53555256;
constexpr uint64_t kSaltMoments = 0x4D4F4D54;
constexpr uint64_t kSaltMartM = 0x4D415254;
constexpr uint64_t kSaltMartS = 0x4D545350;
constexpr uint64_t kSaltYaglom = 0x5941474C;
constexpr uint64_t kSaltDensity = 0x44454E53;
constexpr uint64_t kSaltSpine = 0x5350494E;
constexpr uint64_t kSaltPathwise = 0x50415448;
constexpr uint64_t kSaltErgodic = 0x4552474F;
constexpr uint64_t kSaltClt = 0x434C5420;
constexpr uint64_t kSaltDmatrix = 0x444D4154;
constexpr uint64_t kSaltCrtSim = 0x43525453;
constexpr uint64_t kSaltCrtRef = 0x43525452;
constexpr uint64_t kSaltPhase = 0x50485345;

constexpr double kInf = std::numeric_limits<double>::infinity();

struct MeanSe {
  double s = 0.0, s2 = 0.0;
  long n = 0;
  void add(double x) {
    s += x;
    s2 += x * x;
    ++n;
  }
  double mean() const { return s / static_cast<double>(n); }
  double se() const {
    const double m = mean();
    const double var =
        (s2 - static_cast<double>(n) * m * m) / static_cast<double>(n - 1);
    return std::sqrt(std::max(var, 0.0) / static_cast<double>(n));
  }
};

double max_death(const MarkedTree& t) {
  double m = 0.0;
  for (const TreeNode& n : t.nodes) m = std::max(m, n.death);
  return m;
}

// Horizon-batch runs must see every lifeline through to the horizon: a
// truncated tree would silently read as extinct and bias the estimate.
void require_complete(const MarkedTree& t) {
  if (t.hit_particle_cap)
    throw CapExceeded("particle cap exceeded during a horizon run");
  if (t.hit_lifetime_budget)
    throw CapExceeded("lifetime budget exceeded during a horizon run");
}

// Population at the horizon of a horizon-censored run.
void horizon_population(const MarkedTree& t, long& count, double& sphi,
                        const EigenPair& ep) {
  count = 0;
  sphi = 0.0;
  for (const TreeNode& n : t.nodes) {
    if (n.terminal == Terminal::CensoredHorizon) {
      ++count;
      sphi += ep.phi(n.x_death);
    }
  }
}

// Normalized CDF of the axis-0 marginal of phi: (1 - cos(f u')) / 2.
double phi_marginal_cdf(const Domain& d, double x) {
  const double f = 3.141592653589793 / d.length(0);
  const double u = std::clamp(x - d.lo(0), 0.0, d.length(0));
  return 0.5 * (1.0 - std::cos(f * u));
}

// Normalized CDF of the axis-0 marginal of phi^2: u/L - sin(2 f u)/(2 f L).
double phi2_marginal_cdf(const Domain& d, double x) {
  const double L = d.length(0);
  const double f = 3.141592653589793 / L;
  const double u = std::clamp(x - d.lo(0), 0.0, L);
  return u / L - std::sin(2.0 * f * u) / (2.0 * f * L);
}

json j_ks(const KsResult& k) {
  return json{{"D", k.statistic}, {"n_eff", k.n_effective}, {"p", k.p_value}};
}

json j_chi2(const Chi2Result& c) {
  return json{{"stat", c.statistic}, {"dof", c.dof}, {"p", c.p_value}};
}

json j_moment(const MomentEstimate& m) {
  return json{{"mean", m.mean}, {"se", m.se}, {"expected", m.expected},
              {"z", m.z()}};
}

json artifact(const char* name, const ExperimentConfig& cfg) {
  json j;
  j["experiment"] = name;
  j["config"] = json::parse(cfg.to_json());
  return j;
}

}  // namespace

RngStream replica_stream(uint64_t seed, uint64_t experiment_salt,
                         uint64_t replica) {
  return RngStream::derive(seed ^ mix64(experiment_salt), replica);
}

SurvivalReport run_survival(const ExperimentConfig& cfg,
                            const std::vector<double>& ts, long replicas) {
  if (ts.empty()) throw ConfigError("run_survival needs at least one time");
  const double tmax = *std::max_element(ts.begin(), ts.end());
  if (tmax <= 0.0) throw ConfigError("survival times must be positive");

  SimulationParams p = cfg.simulation_params();
  p.horizon = tmax;
  p.store_paths = false;

  std::vector<long> surv(ts.size(), 0);
  for (long r = 0; r < replicas; ++r) {
    RngStream rng = replica_stream(cfg.seed, kSaltSurvival, static_cast<uint64_t>(r));
    const MarkedTree tree = simulate_tree(p, rng);
    require_complete(tree);
    double md = 0.0;
    bool censored = false;
    for (const TreeNode& n : tree.nodes) {
      md = std::max(md, n.death);
      censored = censored || n.terminal == Terminal::CensoredHorizon;
    }
    for (size_t i = 0; i < ts.size(); ++i)
      if (ts[i] >= tmax ? censored : md > ts[i]) ++surv[i];
  }

  SurvivalReport rep;
  rep.b_phi_x0 = cfg.constants.b * cfg.constants.phi_x0;
  for (size_t i = 0; i < ts.size(); ++i) {
    SurvivalPoint pt;
    pt.t = ts[i];
    pt.trees = replicas;
    pt.survivors = surv[i];
    pt.p_hat = static_cast<double>(surv[i]) / static_cast<double>(replicas);
    pt.wilson = wilson_interval(surv[i], replicas);
    pt.t_p_hat = ts[i] * pt.p_hat;
    pt.target = rep.b_phi_x0;
    rep.points.push_back(pt);
  }
  return rep;
}

MomentReport run_moments(const ExperimentConfig& cfg, double t, long replicas) {
  SimulationParams p = cfg.simulation_params();
  p.horizon = t;
  p.store_paths = false;

  const EigenPair ep = first_eigenpair(cfg.domain);
  const double drift =
      ep.lambda() - cfg.beta * (cfg.offspring.mean() - 1.0);

  MeanSe count, phi_sum, phi_sq, mart;
  for (long r = 0; r < replicas; ++r) {
    RngStream rng = replica_stream(cfg.seed, kSaltMoments, static_cast<uint64_t>(r));
    const MarkedTree tree = simulate_tree(p, rng);
    require_complete(tree);
    long n = 0;
    double sphi = 0.0;
    horizon_population(tree, n, sphi, ep);
    count.add(static_cast<double>(n));
    phi_sum.add(sphi);
    phi_sq.add(sphi * sphi);
    mart.add(std::exp(drift * t) * sphi);
  }

  const SpectralSeries series(cfg.domain);
  MomentReport rep;
  rep.t = t;
  rep.trees = replicas;
  rep.count = {count.mean(), count.se(),
               expected_count(series, cfg.offspring, cfg.beta, t, cfg.x0)};
  rep.phi_sum = {phi_sum.mean(), phi_sum.se(),
                 expected_phi_sum(series, cfg.offspring, cfg.beta, t, cfg.x0)};
  rep.phi_sum_sq = {phi_sq.mean(), phi_sq.se(),
                    second_moment_phi_sum(series, cfg.offspring, cfg.beta, t,
                                          cfg.x0)};
  rep.martingale = {mart.mean(), mart.se(), cfg.constants.phi_x0};
  return rep;
}

MartingaleReport run_martingale(const ExperimentConfig& cfg,
                                const std::vector<double>& ts, long replicas) {
  if (ts.empty()) throw ConfigError("run_martingale needs at least one time");
  const double tmax = *std::max_element(ts.begin(), ts.end());
  if (tmax <= 0.0) throw ConfigError("martingale times must be positive");

  const EigenPair ep = first_eigenpair(cfg.domain);
  const double drift = ep.lambda() - cfg.beta * (cfg.offspring.mean() - 1.0);
  const double phx = cfg.constants.phi_x0;

  MartingaleReport rep;
  rep.ts = ts;
  rep.trees_m = replicas;
  rep.trees_s = replicas;
  rep.s_budget = tmax + 1.0;

  // Tree-time martingale: one horizon-censored batch per time.
  for (size_t ti = 0; ti < ts.size(); ++ti) {
    SimulationParams p = cfg.simulation_params();
    p.horizon = ts[ti];
    p.store_paths = false;
    MeanSe m;
    for (long r = 0; r < replicas; ++r) {
      RngStream rng = replica_stream(cfg.seed, kSaltMartM + ti,
                                     static_cast<uint64_t>(r));
      const MarkedTree tree = simulate_tree(p, rng);
      require_complete(tree);
      long n = 0;
      double sphi = 0.0;
      horizon_population(tree, n, sphi, ep);
      m.add(std::exp(drift * ts[ti]) * sphi);
    }
    rep.martingale.push_back({m.mean(), m.se(), phx});
  }

  // Exploration-clock martingale: one batch run to extinction (the budget is
  // only a guard; the path value is stopped at the end of the exploration,
  // and the budget exceeds every clock we read). Per-step path storage keeps
  // the interpolated position of the current particle within one grid cell.
  SimulationParams p = cfg.simulation_params();
  p.horizon = kInf;
  p.lifetime_budget = rep.s_budget;
  p.store_paths = true;
  p.path_stride = 1;
  std::vector<MeanSe> s(ts.size());
  for (long r = 0; r < replicas; ++r) {
    RngStream rng = replica_stream(cfg.seed, kSaltMartS, static_cast<uint64_t>(r));
    Exploration ex(cfg.domain);
    ex.add_tree(simulate_tree(p, rng));
    for (size_t ti = 0; ti < ts.size(); ++ti)
      s[ti].add(ex.s_value(std::min(ts[ti], ex.length())));
  }
  for (MeanSe& acc : s) rep.s_value.push_back({acc.mean(), acc.se(), phx});
  return rep;
}

YaglomReport run_yaglom(const ExperimentConfig& cfg, double t, long replicas) {
  SimulationParams p = cfg.simulation_params();
  p.horizon = t;
  p.store_paths = false;

  const EigenPair ep = first_eigenpair(cfg.domain);
  YaglomReport rep;
  rep.t = t;
  rep.trees = replicas;
  rep.target_phi_mean = cfg.constants.yaglom_mean_phi;
  rep.target_count_mean = cfg.constants.int_phi / cfg.constants.b;

  for (long r = 0; r < replicas; ++r) {
    RngStream rng = replica_stream(cfg.seed, kSaltYaglom, static_cast<uint64_t>(r));
    const MarkedTree tree = simulate_tree(p, rng);
    require_complete(tree);
    long n = 0;
    double sphi = 0.0;
    horizon_population(tree, n, sphi, ep);
    if (n == 0) continue;
    ++rep.survivors;
    rep.phi_loads.push_back(sphi / t);
    rep.count_loads.push_back(static_cast<double>(n) / t);
  }
  if (rep.survivors < 10)
    throw ConfigError("too few surviving trees for the conditional-limit check");

  rep.mean_phi_load = mean(rep.phi_loads);
  rep.mean_count_load = mean(rep.count_loads);
  const double mp = rep.target_phi_mean;
  const double mc = rep.target_count_mean;
  rep.ks_phi = ks_test(rep.phi_loads,
                       [mp](double x) { return exponential_cdf(x, mp); });
  rep.ks_count = ks_test(rep.count_loads,
                         [mc](double x) { return exponential_cdf(x, mc); });
  return rep;
}

DensityReport run_density(const ExperimentConfig& cfg, double t, long replicas,
                          int bins) {
  if (bins < 4) throw ConfigError("density check needs at least 4 bins");
  SimulationParams p = cfg.simulation_params();
  p.horizon = t;
  p.store_paths = false;

  DensityReport rep;
  rep.t = t;
  rep.trees = replicas;
  rep.bins = bins;

  std::vector<double> pooled;
  for (long r = 0; r < replicas; ++r) {
    RngStream rng = replica_stream(cfg.seed, kSaltDensity, static_cast<uint64_t>(r));
    const MarkedTree tree = simulate_tree(p, rng);
    require_complete(tree);
    std::vector<int> alive;
    for (int i = 0; i < tree.size(); ++i)
      if (tree.nodes[static_cast<size_t>(i)].terminal == Terminal::CensoredHorizon)
        alive.push_back(i);
    if (alive.empty()) continue;
    ++rep.survivors;
    // One uniformly picked particle per surviving tree keeps the sample iid
    // across trees (within-tree positions are strongly correlated).
    const int pick = alive[rng.below(alive.size())];
    rep.picks.push_back(tree.nodes[static_cast<size_t>(pick)].x_death[0]);
    for (int i : alive) pooled.push_back(tree.nodes[static_cast<size_t>(i)].x_death[0]);
  }
  if (rep.survivors < 10)
    throw ConfigError("too few surviving trees for the density check");

  const double lo = cfg.domain.lo(0), width = cfg.domain.length(0) / bins;
  std::vector<double> observed(static_cast<size_t>(bins), 0.0);
  for (double x : rep.picks) {
    int b = static_cast<int>((x - lo) / width);
    b = std::clamp(b, 0, bins - 1);
    observed[static_cast<size_t>(b)] += 1.0;
  }
  std::vector<double> expected(static_cast<size_t>(bins), 0.0);
  const double n = static_cast<double>(rep.picks.size());
  for (int b = 0; b < bins; ++b)
    expected[static_cast<size_t>(b)] =
        n * (phi_marginal_cdf(cfg.domain, lo + (b + 1) * width) -
             phi_marginal_cdf(cfg.domain, lo + b * width));
  rep.chi2 = chi2_test(observed, expected);
  const Domain& dom = cfg.domain;
  rep.ks = ks_test(rep.picks,
                   [&dom](double x) { return phi_marginal_cdf(dom, x); });
  rep.pooled_n = static_cast<long>(pooled.size());
  rep.pooled_ks_d =
      ks_test(pooled, [&dom](double x) { return phi_marginal_cdf(dom, x); })
          .statistic;
  return rep;
}

SpineReport run_spine_occupation(const ExperimentConfig& cfg,
                                 double total_time, double burn_in,
                                 double thin_dt, int bins) {
  if (bins < 4) throw ConfigError("occupation check needs at least 4 bins");
  if (total_time <= burn_in)
    throw ConfigError("total_time must exceed burn_in");

  const EigenPair ep = first_eigenpair(cfg.domain);
  RngStream rng = replica_stream(cfg.seed, kSaltSpine, 0);
  Vec x = cfg.x0;
  const double h = cfg.step.h;
  const long nsteps = std::lround(total_time / h);
  const long burn = std::lround(burn_in / h);
  const long every = std::max<long>(1, std::lround(thin_dt / h));

  SpineReport rep;
  rep.total_time = total_time;
  rep.burn_in = burn_in;
  rep.thin_dt = static_cast<double>(every) * h;
  rep.bins = bins;
  rep.target_mean_phi = cfg.constants.int_phi3;

  const double lo = cfg.domain.lo(0), width = cfg.domain.length(0) / bins;
  std::vector<double> observed(static_cast<size_t>(bins), 0.0);
  std::vector<double> phis;
  for (long s = 1; s <= nsteps; ++s) {
    x = step_conditioned(ep, x, cfg.step, rng);
    if (s > burn && (s - burn) % every == 0) {
      int b = static_cast<int>((x[0] - lo) / width);
      b = std::clamp(b, 0, bins - 1);
      observed[static_cast<size_t>(b)] += 1.0;
      phis.push_back(ep.phi(x));
    }
  }
  rep.samples = static_cast<long>(phis.size());

  std::vector<double> expected(static_cast<size_t>(bins), 0.0);
  for (int b = 0; b < bins; ++b)
    expected[static_cast<size_t>(b)] =
        static_cast<double>(rep.samples) *
        (phi2_marginal_cdf(cfg.domain, lo + (b + 1) * width) -
         phi2_marginal_cdf(cfg.domain, lo + b * width));
  rep.chi2 = chi2_test(observed, expected);
  rep.mean_phi = mean(phis);
  rep.se_mean_phi = batch_means_se(phis);
  return rep;
}

PathwiseReport run_pathwise_checks(const ExperimentConfig& cfg, long trees,
                                   long pairs, double lifetime_budget) {
  Exploration ex(cfg.domain);
  SimulationParams p = cfg.simulation_params();
  p.horizon = kInf;
  p.lifetime_budget = lifetime_budget;
  p.store_paths = false;

  // Only complete trees enter the forest: a tree that outgrows the budget is
  // discarded and resimulated from the next stream. The identities below are
  // pathwise-exact for any tree, so conditioning on total length does not
  // bias them, and it keeps the forest free of censored stubs.
  PathwiseReport rep;
  uint64_t idx = 0;
  while (ex.tree_count() < trees) {
    RngStream rng = replica_stream(cfg.seed, kSaltPathwise, idx++);
    MarkedTree tree = simulate_tree(p, rng);
    if (tree.hit_lifetime_budget || tree.hit_particle_cap) {
      ++rep.rejected;
      continue;
    }
    ex.add_tree(std::move(tree));
  }
  rep.trees = ex.tree_count();
  rep.length = ex.length();

  const EigenPair& ep = ex.eigen();
  const auto& evs = ex.events();

  // Node-to-event map per tree (no stubs here: trees ran to extinction).
  std::vector<std::vector<int>> node_event(static_cast<size_t>(ex.tree_count()));
  for (size_t e = 0; e < evs.size(); ++e) {
    auto& m = node_event[static_cast<size_t>(evs[e].tree)];
    if (static_cast<size_t>(evs[e].node) >= m.size())
      m.resize(static_cast<size_t>(evs[e].node) + 1, -1);
    m[static_cast<size_t>(evs[e].node)] = static_cast<int>(e);
  }

  const double phx = ex.phi_root();
  double run_min = kInf;  // running minimum of the jump part J over events
  for (const ExplorationEvent& ev : evs) {
    const MarkedTree& tr = ex.tree(ev.tree);
    const TreeNode& nd = tr.nodes[static_cast<size_t>(ev.node)];

    if (ev.node == 0) {
      rep.max_root_dev = std::max(rep.max_root_dev, std::abs(ev.ysum));
      const double sc = ex.s_centered(ev.start);
      const double want = phx * (1.0 - static_cast<double>(ev.tree + 1));
      rep.max_root_dev = std::max(rep.max_root_dev, std::abs(sc - want));
    }

    // Reflection identities: J = ysum - phi(x0) (Lambda - 1) is constant
    // within an event, so its running minimum over event starts is exact.
    // The sibling weight is the path reflected at its running minimum, and
    // that minimum sits at the current root, pinning it to -phi(x0) Lambda
    // after the phi(x0) offset.
    {
      const double jump_part = ev.ysum - phx * static_cast<double>(ev.tree);
      run_min = std::min(run_min, jump_part);
      rep.max_reflect_dev = std::max(rep.max_reflect_dev,
                                     std::abs(ev.ysum - (jump_part - run_min)));
      rep.max_inf_dev = std::max(
          rep.max_inf_dev,
          std::abs((run_min - phx) -
                   (-phx * static_cast<double>(ev.tree + 1))));
    }

    // Recurrence vs an independent ancestry walk (summed root-first to keep
    // the floating-point addition order of the incremental construction).
    {
      std::vector<int> chain;
      for (int u = ev.node; u > 0; u = tr.nodes[static_cast<size_t>(u)].parent)
        chain.push_back(u);
      double acc = 0.0;
      for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
        const TreeNode& c = tr.nodes[static_cast<size_t>(*it)];
        const TreeNode& par = tr.nodes[static_cast<size_t>(c.parent)];
        acc += (par.offspring() - c.rank) * ep.phi(par.x_death);
      }
      rep.max_ysum_dev = std::max(rep.max_ysum_dev, std::abs(acc - ev.ysum));
    }

    if (nd.terminal == Terminal::Branch && nd.offspring() > 0) {
      const int ce = node_event[static_cast<size_t>(ev.tree)]
                               [static_cast<size_t>(nd.children[0])];
      const double phi_y = ep.phi(nd.x_death);
      const double s_parent_end = phi_y + ev.ysum;
      const double s_child = evs[static_cast<size_t>(ce)].phi_birth +
                             evs[static_cast<size_t>(ce)].ysum;
      const double want = (nd.offspring() - 1) * phi_y;
      rep.max_jump_dev = std::max(
          rep.max_jump_dev, std::abs((s_child - s_parent_end) - want));
    }
  }

  RngStream prng = replica_stream(cfg.seed, kSaltPathwise, 1u << 30);
  rep.pairs = pairs;
  for (long q = 0; q < pairs; ++q) {
    const double c1 = prng.uniform() * ex.length();
    const double c2 = prng.uniform() * ex.length();
    const DistanceMatrices dm = distance_matrices(ex, {c1, c2}, 1.0);
    rep.max_dstar_gen_dev = std::max(
        rep.max_dstar_gen_dev, std::abs(dm.d_star[1] - dm.d_height[1]));
  }
  return rep;
}

ErgodicReport run_ergodic(const ExperimentConfig& cfg, double clock,
                          int batches) {
  if (clock <= 0.0) throw ConfigError("clock must be positive");
  if (batches < 2) throw ConfigError("need at least 2 batches");

  RngStream rng = replica_stream(cfg.seed, kSaltErgodic, 0);
  Exploration ex(cfg.domain, cfg.beta, cfg.offspring.var_about_one());
  SimulationParams p = cfg.simulation_params();
  p.horizon = kInf;
  p.store_paths = true;
  while (ex.length() < clock && !ex.truncated()) {
    p.lifetime_budget = clock - ex.length() + 1.0;
    ex.add_tree(simulate_tree(p, rng));
  }

  // Cumulative occupation integrals of 1 and phi at the batch boundaries,
  // one trapezoid pass over the stored path samples with exact splits at
  // the boundaries (the integrand is linearly interpolated between samples).
  const size_t nb = static_cast<size_t>(batches);
  std::vector<double> cum_one(nb + 1, 0.0), cum_phi(nb + 1, 0.0);
  {
    const EigenPair& eig = ex.eigen();
    size_t bi = 1;  // next boundary to cross
    double acc_one = 0.0, acc_phi = 0.0;
    double t_prev = 0.0, f_prev = eig.phi(ex.tree(0).nodes[0].x_birth);
    auto advance = [&](double t_abs, double f) {
      while (bi <= nb && t_abs >= clock * static_cast<double>(bi) / batches) {
        const double tb = clock * static_cast<double>(bi) / batches;
        const double fb =
            t_abs > t_prev
                ? f_prev + (f - f_prev) * (tb - t_prev) / (t_abs - t_prev)
                : f;
        acc_one += tb - t_prev;
        acc_phi += 0.5 * (fb + f_prev) * (tb - t_prev);
        cum_one[bi] = acc_one;
        cum_phi[bi] = acc_phi;
        t_prev = tb;
        f_prev = fb;
        ++bi;
      }
      acc_one += t_abs - t_prev;
      acc_phi += 0.5 * (f + f_prev) * (t_abs - t_prev);
      t_prev = t_abs;
      f_prev = f;
    };
    for (const ExplorationEvent& e : ex.events()) {
      if (e.start >= clock) break;
      const MarkedTree& tr = ex.tree(e.tree);
      const TreeNode& n = tr.nodes[static_cast<size_t>(e.node)];
      const double local_end = e.birth + std::min(e.len, clock - e.start);
      advance(e.start, eig.phi(n.x_birth));
      for (const PathSample& s : n.interior) {
        if (s.t >= local_end) break;
        advance(e.start + (s.t - e.birth), eig.phi(s.x));
      }
      advance(e.start + (local_end - e.birth),
              eig.phi(tr.position_at(e.node, local_end)));
    }
  }

  ErgodicReport rep;
  rep.clock = clock;
  rep.trees = ex.tree_count();
  rep.batches = batches;
  rep.mean_one = cum_one[nb] / clock;
  rep.mean_phi = cum_phi[nb] / clock;
  rep.target_mean_phi = 1.0 / cfg.constants.int_phi;  // (phi,phi)=1
  rep.mean_qv = ex.qv_integral(clock) / clock;
  rep.target_qv = cfg.constants.sigma2;

  // Batch-means standard errors over equal exploration windows.
  std::vector<double> wm_phi, wm_qv;
  const double wlen = clock / batches;
  for (size_t i = 0; i < nb; ++i) {
    wm_phi.push_back((cum_phi[i + 1] - cum_phi[i]) / wlen);
    const double a = ex.qv_integral(wlen * static_cast<double>(i));
    const double b = ex.qv_integral(wlen * static_cast<double>(i + 1));
    wm_qv.push_back((b - a) / wlen);
  }
  rep.se_mean_phi = std::sqrt(variance(wm_phi) / static_cast<double>(batches));
  rep.se_mean_qv = std::sqrt(variance(wm_qv) / static_cast<double>(batches));
  return rep;
}

CltReport run_clt(const ExperimentConfig& cfg, double clock,
                  const std::vector<double>& t_grid, long replicas) {
  if (clock <= 0.0) throw ConfigError("clock must be positive");
  if (t_grid.empty()) throw ConfigError("clt grid must be nonempty");
  const double tg_max = *std::max_element(t_grid.begin(), t_grid.end());
  if (tg_max <= 0.0) throw ConfigError("clt grid times must be positive");
  const double sigma = std::sqrt(cfg.constants.sigma2);
  const double rthc = std::sqrt(clock);
  const double phx = cfg.constants.phi_x0;
  const double end = clock * tg_max;

  std::vector<std::vector<double>> xs(t_grid.size()), ys(t_grid.size()),
      ls(t_grid.size());
  MeanSe qv;
  for (long r = 0; r < replicas; ++r) {
    RngStream rng = replica_stream(cfg.seed, kSaltClt, static_cast<uint64_t>(r));
    Exploration ex(cfg.domain, cfg.beta, cfg.offspring.var_about_one());
    SimulationParams p = cfg.simulation_params();
    p.horizon = kInf;
    p.store_paths = true;
    while (ex.length() < end && !ex.truncated()) {
      p.lifetime_budget = end - ex.length() + 1.0;
      ex.add_tree(simulate_tree(p, rng));
    }
    for (size_t ti = 0; ti < t_grid.size(); ++ti) {
      const double u = clock * t_grid[ti];
      xs[ti].push_back(ex.s_centered(u) / rthc);
      ys[ti].push_back(ex.ysum_at(u) / rthc);
      ls[ti].push_back(phx * static_cast<double>(ex.lambda_at(u)) / rthc);
    }
    qv.add(ex.qv_integral(end) / end);
  }

  CltReport rep;
  rep.clock = clock;
  rep.replicas = replicas;
  rep.sigma = sigma;
  rep.target_sigma2 = cfg.constants.sigma2;
  for (size_t ti = 0; ti < t_grid.size(); ++ti) {
    CltPoint pt;
    pt.t = t_grid[ti];
    const double sc = sigma * std::sqrt(t_grid[ti]);
    pt.ks_centered =
        ks_test(xs[ti], [sc](double v) { return normal_cdf(v / sc); });
    pt.ks_ysum =
        ks_test(ys[ti], [sc](double v) { return half_normal_cdf(v, sc); });
    pt.ks_lambda =
        ks_test(ls[ti], [sc](double v) { return half_normal_cdf(v, sc); });
    pt.var_centered = variance(xs[ti]);
    pt.var_target = cfg.constants.sigma2 * t_grid[ti];
    rep.points.push_back(pt);
  }
  rep.mean_qv_over_clock = qv.mean();
  rep.se_qv_over_clock = qv.se();
  return rep;
}

DistanceReport run_dmatrix(const ExperimentConfig& cfg, double t_cond,
                           long trees, double lifetime_budget, int k) {
  if (k < 2) throw ConfigError("distance matrices need at least 2 clocks");
  SimulationParams p = cfg.simulation_params();
  p.horizon = kInf;
  p.lifetime_budget = lifetime_budget;
  p.store_paths = false;

  DistanceReport rep;
  rep.t_cond = t_cond;
  rep.k = k;
  std::vector<double> reldevs;
  const size_t uk = static_cast<size_t>(k);

  long collected = 0;
  while (collected < trees) {
    RngStream rng = replica_stream(cfg.seed, kSaltDmatrix,
                                   static_cast<uint64_t>(rep.attempts));
    ++rep.attempts;
    MarkedTree tree = simulate_tree(p, rng);
    if (max_death(tree) < t_cond) continue;
    if (tree.hit_lifetime_budget || tree.hit_particle_cap) {
      ++rep.truncated;
      continue;
    }
    Exploration ex(cfg.domain);
    ex.add_tree(std::move(tree));
    const double L = ex.length();
    std::vector<double> clocks(uk);
    for (double& c : clocks) c = rng.uniform() * L;
    const DistanceMatrices dm = distance_matrices(ex, clocks, t_cond);
    const double binv = 1.0 / cfg.constants.b;
    double frob2 = 0.0;
    for (size_t i = 0; i < uk; ++i)
      for (size_t j = i + 1; j < uk; ++j) {
        const double dh = dm.d_height[i * uk + j];
        const double ds = dm.d_s[i * uk + j];
        rep.max_exact_dev =
            std::max(rep.max_exact_dev,
                     std::abs(dm.d_star[i * uk + j] - t_cond * dh));
        frob2 += 2.0 * (binv * dh - ds) * (binv * dh - ds);
        if (dm.d_star[i * uk + j] >= 1.0 && dh > 0.0)
          reldevs.push_back(std::abs(ds / (binv * dh) - 1.0));
      }
    rep.norms.push_back(std::sqrt(frob2));
    // Disjoint halves keep the two ensembles independent for the KS check.
    if (collected % 2 == 0)
      rep.d_h_samples.push_back(binv * dm.d_height[1]);
    else
      rep.d_s_samples.push_back(dm.d_s[1]);
    ++collected;
  }
  rep.trees = collected;
  rep.ks_s_vs_height = ks_two_sample(rep.d_h_samples, rep.d_s_samples);
  rep.median_rel_dev = reldevs.empty() ? 0.0 : quantile(reldevs, 0.5);
  rep.q90_norm = rep.norms.empty() ? 0.0 : quantile(rep.norms, 0.9);
  rep.truncated_fraction =
      static_cast<double>(rep.truncated) /
      static_cast<double>(std::max<long>(rep.truncated + rep.trees, 1));
  // Truncated conditioned trees are scored +infinity (their norm is unknown
  // and they are the largest trees), which shifts the 0.9-quantile to level
  // 0.9/(1-f) within the finite sample.
  const double level = 0.9 / (1.0 - rep.truncated_fraction);
  rep.q90_norm_all = (level >= 1.0 || rep.norms.empty())
                         ? kInf
                         : quantile(rep.norms, level);
  return rep;
}

CrtReport run_crt_compare(const ExperimentConfig& cfg, double t_cond,
                          long n_per_side, double lifetime_budget,
                          double excursion_dt) {
  CrtReport rep;
  rep.t_cond = t_cond;
  rep.bsigma = cfg.constants.b * std::sqrt(cfg.constants.sigma2);
  rep.level = 1.0 / rep.bsigma;
  rep.zeta_cap = lifetime_budget / (t_cond * t_cond);

  SimulationParams p = cfg.simulation_params();
  p.horizon = kInf;
  p.lifetime_budget = lifetime_budget;
  p.store_paths = false;

  std::vector<double> sim_h, sim_m, sim_d;
  while (rep.sim_n < n_per_side) {
    RngStream rng = replica_stream(cfg.seed, kSaltCrtSim,
                                   static_cast<uint64_t>(rep.sim_attempts));
    ++rep.sim_attempts;
    MarkedTree tree = simulate_tree(p, rng);
    if (max_death(tree) < t_cond) continue;
    if (tree.hit_lifetime_budget || tree.hit_particle_cap) {
      ++rep.sim_truncated;
      continue;
    }
    Exploration ex(cfg.domain);
    ex.add_tree(std::move(tree));
    const double L = ex.length();
    sim_h.push_back(ex.sup_height() / t_cond);
    sim_m.push_back(L / (t_cond * t_cond));
    const double r = rng.uniform() * L, w = rng.uniform() * L;
    sim_d.push_back((ex.height(r) + ex.height(w) -
                     2.0 * ex.inf_height(std::min(r, w), std::max(r, w))) /
                    t_cond);
    ++rep.sim_n;
  }

  std::vector<double> ref_h, ref_m, ref_d;
  for (long r = 0; r < n_per_side; ++r) {
    RngStream rng = replica_stream(cfg.seed, kSaltCrtRef, static_cast<uint64_t>(r));
    const ConditionedExcursion e = sample_conditioned_excursion(
        rep.level, rep.zeta_cap, excursion_dt, rng, 1e4, &rep.ref_truncated);
    ref_h.push_back(rep.bsigma * e.sup);
    ref_m.push_back(e.zeta);
    const double u = rng.uniform() * e.zeta, v = rng.uniform() * e.zeta;
    ref_d.push_back(rep.bsigma * (excursion_value(e, u) + excursion_value(e, v) -
                                  2.0 * excursion_min(e, u, v)));
  }
  rep.ref_n = n_per_side;

  rep.ks_height = ks_two_sample(sim_h, ref_h);
  rep.ks_mass = ks_two_sample(sim_m, ref_m);
  rep.ks_distance = ks_two_sample(sim_d, ref_d);
  return rep;
}

PhaseReport run_phase(const ExperimentConfig& cfg,
                      const std::vector<double>& factors,
                      const std::vector<double>& ts, long replicas) {
  if (ts.empty()) throw ConfigError("run_phase needs at least one time");
  const double tmax = *std::max_element(ts.begin(), ts.end());
  if (tmax <= 0.0) throw ConfigError("phase times must be positive");

  PhaseReport rep;
  rep.ts = ts;
  const double b_phi = cfg.constants.b * cfg.constants.phi_x0;
  for (size_t fi = 0; fi < factors.size(); ++fi) {
    const double f = factors[fi];
    SimulationParams p = cfg.simulation_params();
    p.beta = f * cfg.constants.beta_critical;
    p.horizon = tmax;
    p.store_paths = false;

    PhasePoint pt;
    pt.factor = f;
    pt.beta = p.beta;
    pt.trees = replicas;
    std::vector<long> surv(ts.size(), 0);
    double pop = 0.0;
    for (long r = 0; r < replicas; ++r) {
      RngStream rng = replica_stream(cfg.seed, kSaltPhase + fi,
                                     static_cast<uint64_t>(r));
      const MarkedTree tree = simulate_tree(p, rng);
      require_complete(tree);
      double md = 0.0;
      long n = 0;
      for (const TreeNode& nd : tree.nodes) {
        md = std::max(md, nd.death);
        if (nd.terminal == Terminal::CensoredHorizon) ++n;
      }
      for (size_t i = 0; i < ts.size(); ++i)
        if (ts[i] >= tmax ? n > 0 : md > ts[i]) ++surv[i];
      pop += static_cast<double>(n);
    }
    for (size_t i = 0; i < ts.size(); ++i) {
      SurvivalPoint sp;
      sp.t = ts[i];
      sp.trees = replicas;
      sp.survivors = surv[i];
      sp.p_hat = static_cast<double>(surv[i]) / static_cast<double>(replicas);
      sp.wilson = wilson_interval(surv[i], replicas);
      sp.t_p_hat = ts[i] * sp.p_hat;
      sp.target = f == 1.0 ? b_phi : 0.0;
      pt.survival.push_back(sp);
    }
    pt.mean_population = pop / static_cast<double>(replicas);
    rep.points.push_back(pt);
  }
  return rep;
}

std::string report_json(const SurvivalReport& r, const ExperimentConfig& cfg) {
  json j = artifact("survival", cfg);
  j["results"]["b_phi_x0"] = r.b_phi_x0;
  j["results"]["points"] = json::array();
  for (const SurvivalPoint& p : r.points) {
    j["results"]["points"].push_back(
        json{{"t", p.t},
             {"trees", p.trees},
             {"survivors", p.survivors},
             {"p_hat", p.p_hat},
             {"wilson_lo", p.wilson.lo},
             {"wilson_hi", p.wilson.hi},
             {"t_p_hat", p.t_p_hat},
             {"target", p.target}});
  }
  return j.dump(2);
}

std::string report_json(const MomentReport& r, const ExperimentConfig& cfg) {
  json j = artifact("moments", cfg);
  j["results"]["t"] = r.t;
  j["results"]["trees"] = r.trees;
  j["results"]["count"] = j_moment(r.count);
  j["results"]["phi_sum"] = j_moment(r.phi_sum);
  j["results"]["phi_sum_sq"] = j_moment(r.phi_sum_sq);
  j["results"]["martingale"] = j_moment(r.martingale);
  return j.dump(2);
}

std::string report_json(const MartingaleReport& r,
                        const ExperimentConfig& cfg) {
  json j = artifact("martingale", cfg);
  j["results"]["ts"] = r.ts;
  j["results"]["trees_m"] = r.trees_m;
  j["results"]["trees_s"] = r.trees_s;
  j["results"]["s_budget"] = r.s_budget;
  j["results"]["martingale"] = json::array();
  for (const MomentEstimate& m : r.martingale)
    j["results"]["martingale"].push_back(j_moment(m));
  j["results"]["s_value"] = json::array();
  for (const MomentEstimate& m : r.s_value)
    j["results"]["s_value"].push_back(j_moment(m));
  return j.dump(2);
}

std::string report_json(const YaglomReport& r, const ExperimentConfig& cfg) {
  json j = artifact("yaglom", cfg);
  j["results"]["t"] = r.t;
  j["results"]["trees"] = r.trees;
  j["results"]["survivors"] = r.survivors;
  j["results"]["target_phi_mean"] = r.target_phi_mean;
  j["results"]["target_count_mean"] = r.target_count_mean;
  j["results"]["mean_phi_load"] = r.mean_phi_load;
  j["results"]["mean_count_load"] = r.mean_count_load;
  j["results"]["ks_phi"] = j_ks(r.ks_phi);
  j["results"]["ks_count"] = j_ks(r.ks_count);
  return j.dump(2);
}

std::string report_json(const DensityReport& r, const ExperimentConfig& cfg) {
  json j = artifact("density", cfg);
  j["results"]["t"] = r.t;
  j["results"]["trees"] = r.trees;
  j["results"]["survivors"] = r.survivors;
  j["results"]["bins"] = r.bins;
  j["results"]["chi2"] = j_chi2(r.chi2);
  j["results"]["ks"] = j_ks(r.ks);
  j["results"]["pooled_ks_d"] = r.pooled_ks_d;
  j["results"]["pooled_n"] = r.pooled_n;
  return j.dump(2);
}

std::string report_json(const SpineReport& r, const ExperimentConfig& cfg) {
  json j = artifact("spine_occupation", cfg);
  j["results"]["total_time"] = r.total_time;
  j["results"]["burn_in"] = r.burn_in;
  j["results"]["thin_dt"] = r.thin_dt;
  j["results"]["samples"] = r.samples;
  j["results"]["bins"] = r.bins;
  j["results"]["chi2"] = j_chi2(r.chi2);
  j["results"]["mean_phi"] = r.mean_phi;
  j["results"]["se_mean_phi"] = r.se_mean_phi;
  j["results"]["target_mean_phi"] = r.target_mean_phi;
  return j.dump(2);
}

std::string report_json(const PathwiseReport& r, const ExperimentConfig& cfg) {
  json j = artifact("pathwise_identities", cfg);
  j["results"]["trees"] = r.trees;
  j["results"]["rejected"] = r.rejected;
  j["results"]["length"] = r.length;
  j["results"]["pairs"] = r.pairs;
  j["results"]["max_root_dev"] = r.max_root_dev;
  j["results"]["max_ysum_dev"] = r.max_ysum_dev;
  j["results"]["max_jump_dev"] = r.max_jump_dev;
  j["results"]["max_reflect_dev"] = r.max_reflect_dev;
  j["results"]["max_inf_dev"] = r.max_inf_dev;
  j["results"]["max_dstar_gen_dev"] = r.max_dstar_gen_dev;
  return j.dump(2);
}

std::string report_json(const ErgodicReport& r, const ExperimentConfig& cfg) {
  json j = artifact("ergodic_average", cfg);
  j["results"]["clock"] = r.clock;
  j["results"]["trees"] = r.trees;
  j["results"]["batches"] = r.batches;
  j["results"]["mean_one"] = r.mean_one;
  j["results"]["mean_phi"] = r.mean_phi;
  j["results"]["se_mean_phi"] = r.se_mean_phi;
  j["results"]["target_mean_phi"] = r.target_mean_phi;
  j["results"]["mean_qv"] = r.mean_qv;
  j["results"]["se_mean_qv"] = r.se_mean_qv;
  j["results"]["target_qv"] = r.target_qv;
  return j.dump(2);
}

std::string report_json(const CltReport& r, const ExperimentConfig& cfg) {
  json j = artifact("exploration_clt", cfg);
  j["results"]["clock"] = r.clock;
  j["results"]["replicas"] = r.replicas;
  j["results"]["sigma"] = r.sigma;
  j["results"]["target_sigma2"] = r.target_sigma2;
  j["results"]["points"] = json::array();
  for (const CltPoint& p : r.points) {
    j["results"]["points"].push_back(json{{"t", p.t},
                                          {"ks_centered", j_ks(p.ks_centered)},
                                          {"ks_ysum", j_ks(p.ks_ysum)},
                                          {"ks_lambda", j_ks(p.ks_lambda)},
                                          {"var_centered", p.var_centered},
                                          {"var_target", p.var_target}});
  }
  j["results"]["mean_qv_over_clock"] = r.mean_qv_over_clock;
  j["results"]["se_qv_over_clock"] = r.se_qv_over_clock;
  return j.dump(2);
}

std::string report_json(const DistanceReport& r, const ExperimentConfig& cfg) {
  json j = artifact("distance_matrices", cfg);
  j["results"]["t_cond"] = r.t_cond;
  j["results"]["trees"] = r.trees;
  j["results"]["k"] = r.k;
  j["results"]["attempts"] = r.attempts;
  j["results"]["truncated"] = r.truncated;
  j["results"]["max_exact_dev"] = r.max_exact_dev;
  j["results"]["ks_s_vs_height"] = j_ks(r.ks_s_vs_height);
  j["results"]["median_rel_dev"] = r.median_rel_dev;
  j["results"]["q90_norm"] = r.q90_norm;
  j["results"]["q90_norm_all"] = r.q90_norm_all;
  j["results"]["truncated_fraction"] = r.truncated_fraction;
  return j.dump(2);
}

std::string report_json(const CrtReport& r, const ExperimentConfig& cfg) {
  json j = artifact("crt_compare", cfg);
  j["results"]["t_cond"] = r.t_cond;
  j["results"]["sim_n"] = r.sim_n;
  j["results"]["ref_n"] = r.ref_n;
  j["results"]["sim_attempts"] = r.sim_attempts;
  j["results"]["sim_truncated"] = r.sim_truncated;
  j["results"]["ref_truncated"] = r.ref_truncated;
  j["results"]["bsigma"] = r.bsigma;
  j["results"]["level"] = r.level;
  j["results"]["zeta_cap"] = r.zeta_cap;
  j["results"]["ks_height"] = j_ks(r.ks_height);
  j["results"]["ks_mass"] = j_ks(r.ks_mass);
  j["results"]["ks_distance"] = j_ks(r.ks_distance);
  return j.dump(2);
}

std::string report_json(const PhaseReport& r, const ExperimentConfig& cfg) {
  json j = artifact("phase", cfg);
  j["results"]["ts"] = r.ts;
  j["results"]["points"] = json::array();
  for (const PhasePoint& p : r.points) {
    json pj{{"factor", p.factor},
            {"beta", p.beta},
            {"trees", p.trees},
            {"mean_population", p.mean_population}};
    pj["survival"] = json::array();
    for (const SurvivalPoint& sp : p.survival)
      pj["survival"].push_back(json{{"t", sp.t},
                                    {"survivors", sp.survivors},
                                    {"p_hat", sp.p_hat},
                                    {"wilson_lo", sp.wilson.lo},
                                    {"wilson_hi", sp.wilson.hi},
                                    {"t_p_hat", sp.t_p_hat}});
    j["results"]["points"].push_back(pj);
  }
  return j.dump(2);
}

}  // namespace bdsim
