#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bdsim/config.hpp"
#include "bdsim/gof.hpp"

namespace bdsim {

// Deterministic per-replica stream: replicas are independent of each other
// and of every other experiment run from the same master seed.
RngStream replica_stream(uint64_t seed, uint64_t experiment_salt,
                         uint64_t replica);

// --- survival asymptotics: t * P(alive at t) -> b phi(x) ------------------

struct SurvivalPoint {
  double t = 0.0;
  long trees = 0, survivors = 0;
  double p_hat = 0.0;
  Interval wilson{};
  double t_p_hat = 0.0;   // t * p_hat
  double target = 0.0;    // b phi(x0)
};

struct SurvivalReport {
  std::vector<SurvivalPoint> points;
  double b_phi_x0 = 0.0;
};

// One batch of trees run to max(ts); survival at each t read off the same
// batch (a lifeline crossing t exists iff the population is alive at t).
SurvivalReport run_survival(const ExperimentConfig& cfg,
                            const std::vector<double>& ts, long replicas);

// --- moment identities at a fixed time ------------------------------------

struct MomentEstimate {
  double mean = 0.0, se = 0.0, expected = 0.0;
  double z() const { return se > 0.0 ? (mean - expected) / se : 0.0; }
};

struct MomentReport {
  double t = 0.0;
  long trees = 0;
  MomentEstimate count;        // E |N_t|            (one-particle route)
  MomentEstimate phi_sum;      // E sum phi          (eigen route)
  MomentEstimate phi_sum_sq;   // E (sum phi)^2      (two-particle route)
  MomentEstimate martingale;   // E M_t = phi(x0)
};

MomentReport run_moments(const ExperimentConfig& cfg, double t, long replicas);

// --- martingale means: tree time and exploration clock ---------------------

struct MartingaleReport {
  std::vector<double> ts;
  long trees_m = 0, trees_s = 0;
  double s_budget = 0.0;  // exploration budget for the S batch
  // Both families of means equal phi(x0): M_t over the population at tree
  // time t, and the single-tree path value S at exploration clock t (stopped
  // at the end of the exploration, where it sits at zero).
  std::vector<MomentEstimate> martingale;  // aligned with ts
  std::vector<MomentEstimate> s_value;     // aligned with ts
};

MartingaleReport run_martingale(const ExperimentConfig& cfg,
                                const std::vector<double>& ts, long replicas);

// --- conditioned load: t^{-1} sum phi | survival => exponential ------------

struct YaglomReport {
  double t = 0.0;
  long trees = 0, survivors = 0;
  double target_phi_mean = 0.0;    // 1/b
  double target_count_mean = 0.0;  // (1, phi)/b
  double mean_phi_load = 0.0, mean_count_load = 0.0;
  KsResult ks_phi{}, ks_count{};
  std::vector<double> phi_loads, count_loads;
};

YaglomReport run_yaglom(const ExperimentConfig& cfg, double t, long replicas);

// --- conditioned particle positions => phi / (1, phi) ----------------------

struct DensityReport {
  double t = 0.0;
  long trees = 0, survivors = 0;
  int bins = 0;
  Chi2Result chi2{};  // one uniformly picked particle per surviving tree
  KsResult ks{};      // same picks against the axis-0 marginal CDF
  std::vector<double> picks;  // axis-0 coordinates
  // Diagnostic only: KS distance of every alive particle pooled together.
  // Within-tree positions are correlated, so no p-value is attached.
  double pooled_ks_d = 0.0;
  long pooled_n = 0;
};

DensityReport run_density(const ExperimentConfig& cfg, double t, long replicas,
                          int bins);

// --- spine occupation: conditioned diffusion equilibrates at phi^2 ---------

struct SpineReport {
  double total_time = 0.0, burn_in = 0.0, thin_dt = 0.0;
  long samples = 0;
  int bins = 0;
  Chi2Result chi2{};          // thinned occupation vs integral of phi^2
  double mean_phi = 0.0;      // time-average of phi along the path
  double se_mean_phi = 0.0;   // batch means
  double target_mean_phi = 0.0;  // integral of phi^3
};

SpineReport run_spine_occupation(const ExperimentConfig& cfg, double total_time,
                                 double burn_in, double thin_dt, int bins);

// --- exact pathwise identities of the exploration --------------------------

struct PathwiseReport {
  long trees = 0;
  long rejected = 0;  // trees discarded for exceeding the lifetime budget
  double length = 0.0;
  long pairs = 0;
  // All of these are identities; deviations are pure floating-point noise.
  double max_root_dev = 0.0;   // centered path at each root event start
  double max_ysum_dev = 0.0;   // sibling-weight recurrence vs ancestry walk
  double max_jump_dev = 0.0;   // branch jump vs (A-1) phi(branch position)
  // Reflection identities of the jump part J = ysum - phi(x0)*(Lambda - 1):
  // ysum = J - min J, and min J - phi(x0) = -phi(x0) * Lambda.
  double max_reflect_dev = 0.0;
  double max_inf_dev = 0.0;
  double max_dstar_gen_dev = 0.0;  // exploration metric vs genealogy join
};

PathwiseReport run_pathwise_checks(const ExperimentConfig& cfg, long trees,
                                   long pairs,
                                   double lifetime_budget = 2000.0);

// --- ergodic averages along the forest exploration -------------------------

struct ErgodicReport {
  double clock = 0.0;  // exploration horizon
  long trees = 0;
  int batches = 0;
  double mean_one = 0.0;  // time-average of 1; equals 1 up to rounding
  double mean_phi = 0.0, se_mean_phi = 0.0;
  double target_mean_phi = 0.0;  // (phi, phi) / (1, phi)
  double mean_qv = 0.0, se_mean_qv = 0.0;
  double target_qv = 0.0;  // sigma^2
};

ErgodicReport run_ergodic(const ExperimentConfig& cfg, double clock,
                          int batches = 32);

// --- forest CLT: centered path at clock n*t --------------------------------

struct CltPoint {
  double t = 0.0;
  KsResult ks_centered{};     // S̄(nt)/sqrt(n) vs N(0, sigma^2 t)
  KsResult ks_ysum{};         // ysum(nt)/sqrt(n) vs |N(0, sigma^2 t)|
  KsResult ks_lambda{};       // phi(x0) Lambda(nt)/sqrt(n) vs same
  double var_centered = 0.0;  // empirical variance of S̄(nt)/sqrt(n)
  double var_target = 0.0;    // sigma^2 t
};

struct CltReport {
  double clock = 0.0;  // n
  long replicas = 0;
  double sigma = 0.0;  // model sigma
  double target_sigma2 = 0.0;
  std::vector<CltPoint> points;    // one per grid time
  double mean_qv_over_clock = 0.0; // qv integral / (n * max t)
  double se_qv_over_clock = 0.0;
};

CltReport run_clt(const ExperimentConfig& cfg, double clock,
                  const std::vector<double>& t_grid, long replicas);

// --- sampled distance matrices on conditioned trees ------------------------

struct DistanceReport {
  double t_cond = 0.0;
  long trees = 0;
  int k = 2;  // uniform clocks sampled per tree
  long attempts = 0, truncated = 0;
  double max_exact_dev = 0.0;  // max |d_star - t * d_height| over all pairs
  // One (1,2) entry per tree from each route; iid across trees.
  std::vector<double> d_h_samples;  // b^{-1} (D^H)_12
  std::vector<double> d_s_samples;  // (D^S)_12
  KsResult ks_s_vs_height{};
  double median_rel_dev = 0.0;  // paired |b^{-1}D^H/D^S - 1| on large pairs
  // Per-tree Euclidean (Frobenius) norm of b^{-1} D^H - D^S over the full
  // k x k matrices; both carry the 1/t rescaling in their definition.
  std::vector<double> norms;
  double q90_norm = 0.0;  // 0.9-quantile over the collected (finite) trees
  // Conservative 0.9-quantile with every budget-truncated conditioned tree
  // scored +infinity: equals the finite-sample quantile at level 0.9/(1-f),
  // f = truncated/(truncated+trees), or +infinity when f >= 0.1.
  double q90_norm_all = 0.0;
  double truncated_fraction = 0.0;
};

DistanceReport run_dmatrix(const ExperimentConfig& cfg, double t_cond,
                           long trees, double lifetime_budget, int k = 2);

// --- continuum-limit comparison against the conditioned excursion ----------

struct CrtReport {
  double t_cond = 0.0;
  long sim_n = 0, ref_n = 0;
  long sim_attempts = 0, sim_truncated = 0, ref_truncated = 0;
  double bsigma = 0.0, level = 0.0, zeta_cap = 0.0;
  KsResult ks_height{};    // sup H / t  vs  b sigma sup e
  KsResult ks_mass{};      // L / t^2    vs  zeta
  KsResult ks_distance{};  // sampled pair distance / t vs excursion distance
};

CrtReport run_crt_compare(const ExperimentConfig& cfg, double t_cond,
                          long n_per_side, double lifetime_budget,
                          double excursion_dt);

// --- off-critical phases ----------------------------------------------------

struct PhasePoint {
  double factor = 0.0, beta = 0.0;
  long trees = 0;
  std::vector<SurvivalPoint> survival;  // aligned with PhaseReport::ts
  double mean_population = 0.0;         // at the final time
};

struct PhaseReport {
  std::vector<double> ts;
  std::vector<PhasePoint> points;
};

PhaseReport run_phase(const ExperimentConfig& cfg,
                      const std::vector<double>& factors,
                      const std::vector<double>& ts, long replicas);

// --- artifact serialization -------------------------------------------------

std::string report_json(const SurvivalReport& r, const ExperimentConfig& cfg);
std::string report_json(const MomentReport& r, const ExperimentConfig& cfg);
std::string report_json(const MartingaleReport& r, const ExperimentConfig& cfg);
std::string report_json(const YaglomReport& r, const ExperimentConfig& cfg);
std::string report_json(const DensityReport& r, const ExperimentConfig& cfg);
std::string report_json(const SpineReport& r, const ExperimentConfig& cfg);
std::string report_json(const PathwiseReport& r, const ExperimentConfig& cfg);
std::string report_json(const ErgodicReport& r, const ExperimentConfig& cfg);
std::string report_json(const CltReport& r, const ExperimentConfig& cfg);
std::string report_json(const DistanceReport& r, const ExperimentConfig& cfg);
std::string report_json(const CrtReport& r, const ExperimentConfig& cfg);
std::string report_json(const PhaseReport& r, const ExperimentConfig& cfg);

}  // namespace bdsim
