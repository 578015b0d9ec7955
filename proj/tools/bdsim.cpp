// Experiment runner for the branching-diffusion library: binds TOML configs
// to the experiment drivers, prints human-readable summaries with pass/fail
// gates, and persists JSON/CSV/JSONL artifacts for deterministic replay.
//
// Exit codes: 0 ok, 2 config error, 3 resource cap exceeded, 4 gate failure.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "bdsim/config.hpp"
#include "bdsim/experiments.hpp"
#include "bdsim/simulate.hpp"
#include "bdsim/tree_io.hpp"

namespace {

using bdsim::ExperimentConfig;

constexpr uint64_t kSaltSimulate = 0x53494D55;  // tree-dump replica streams

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string g6(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string ks_str(const bdsim::KsResult& k) {
  return "D=" + g6(k.statistic) + " n=" + g6(k.n_effective) +
         " p=" + g6(k.p_value);
}

std::string chi2_str(const bdsim::Chi2Result& c) {
  return "chi2=" + g6(c.statistic) + " dof=" + g6(c.dof) +
         " p=" + g6(c.p_value);
}

std::string mom_str(const bdsim::MomentEstimate& m) {
  return g6(m.mean) + " +- " + g6(m.se) + " vs " + g6(m.expected) +
         " (z=" + g6(m.z()) + ")";
}

// Single-line JSON header with the resolved config and master seed; every
// artifact file opens with it (CSV as a '#' comment, JSONL as line one).
std::string header_line(const ExperimentConfig& cfg) {
  nlohmann::json h;
  h["config"] = nlohmann::json::parse(cfg.to_json());
  h["seed"] = cfg.seed;
  return h.dump();
}

struct Artifacts {
  std::string dir;
  const ExperimentConfig* cfg = nullptr;

  bool enabled() const { return !dir.empty(); }

  void write(const std::string& name, const std::string& content) const {
    if (!enabled()) return;
    const std::filesystem::path p = std::filesystem::path(dir) / name;
    std::ofstream os(p, std::ios::binary);
    if (!os)
      throw bdsim::ConfigError("cannot open " + p.string() + " for writing");
    os << content;
    os.flush();
    if (!os) throw bdsim::ConfigError("failed writing " + p.string());
    std::printf("wrote %s\n", p.string().c_str());
  }

  void csv(const std::string& name, const std::string& columns,
           const std::vector<std::string>& rows) const {
    if (!enabled()) return;
    std::string s = "# " + header_line(*cfg) + "\n" + columns + "\n";
    for (const std::string& r : rows) {
      s += r;
      s += '\n';
    }
    write(name, s);
  }
};

// Collects named checks; any failure turns the subcommand's exit code into 4.
struct Gate {
  bool pass = true;

  void check(const std::string& name, bool ok, const std::string& detail) {
    std::printf("  [%s] %s: %s\n", ok ? " ok " : "FAIL", name.c_str(),
                detail.c_str());
    pass = pass && ok;
  }

  int finish(const char* sub) const {
    std::printf("%s: %s\n", sub, pass ? "PASS" : "FAIL");
    return pass ? 0 : 4;
  }
};

// --- constants ---------------------------------------------------------------

int cmd_constants(const ExperimentConfig& cfg, const Artifacts& art) {
  const bdsim::ModelConstants& mc = cfg.constants;
  std::printf("b=%s, sigma2=%s, beta_c=%s\n", g6(mc.b).c_str(),
              g6(mc.sigma2).c_str(), g6(mc.beta_critical).c_str());
  struct Row {
    const char* name;
    double v;
  };
  const Row rows[] = {
      {"lambda1", mc.lambda1},
      {"mean_offspring", mc.mean_offspring},
      {"second_moment_offspring", mc.second_moment_offspring},
      {"beta_critical", mc.beta_critical},
      {"beta", cfg.beta},
      {"phi_x0", mc.phi_x0},
      {"int_phi", mc.int_phi},
      {"int_phi3", mc.int_phi3},
      {"b", mc.b},
      {"b_phi_x0", mc.b * mc.phi_x0},
      {"sigma2", mc.sigma2},
      {"yaglom_mean_phi", mc.yaglom_mean_phi},
  };
  for (const Row& r : rows)
    std::printf("  %-26s %s\n", r.name, g17(r.v).c_str());
  if (art.enabled()) {
    nlohmann::json j;
    j["experiment"] = "constants";
    j["config"] = nlohmann::json::parse(cfg.to_json());
    for (const Row& r : rows) j["constants"][r.name] = r.v;
    art.write("constants.json", j.dump(2) + "\n");
    std::vector<std::string> lines;
    for (const Row& r : rows)
      lines.push_back(std::string(r.name) + "," + g17(r.v));
    art.csv("constants.csv", "name,value", lines);
  }
  return 0;
}

// --- simulate ----------------------------------------------------------------

int cmd_simulate(const ExperimentConfig& cfg, const Artifacts& art,
                 double horizon, double budget, bool store_paths) {
  bdsim::SimulationParams p = cfg.simulation_params();
  p.horizon = horizon;
  p.lifetime_budget = budget;
  p.store_paths = store_paths;

  std::vector<bdsim::MarkedTree> trees;
  trees.reserve(static_cast<size_t>(cfg.replicas));
  long nodes = 0, truncated = 0;
  double total_lifetime = 0.0;
  for (long r = 0; r < cfg.replicas; ++r) {
    bdsim::RngStream rng =
        bdsim::replica_stream(cfg.seed, kSaltSimulate, static_cast<uint64_t>(r));
    trees.push_back(bdsim::simulate_tree(p, rng));
    const bdsim::MarkedTree& t = trees.back();
    nodes += t.size();
    truncated += (t.hit_particle_cap || t.hit_lifetime_budget) ? 1 : 0;
    total_lifetime += t.total_lifetime;
  }

  std::ostringstream dump;
  dump << header_line(cfg) << '\n';
  bdsim::write_trees_jsonl(dump, trees);

  if (art.enabled()) {
    art.write("trees.jsonl", dump.str());
    nlohmann::json j;
    j["experiment"] = "simulate";
    j["config"] = nlohmann::json::parse(cfg.to_json());
    j["trees"] = cfg.replicas;
    j["nodes"] = nodes;
    j["truncated"] = truncated;
    j["total_lifetime"] = total_lifetime;
    art.write("simulate.json", j.dump(2) + "\n");
    std::printf("simulate: %ld trees, %ld nodes, %ld truncated\n", cfg.replicas,
                nodes, truncated);
  } else {
    std::fputs(dump.str().c_str(), stdout);
    std::fprintf(stderr, "simulate: %ld trees, %ld nodes, %ld truncated\n",
                 cfg.replicas, nodes, truncated);
  }
  return 0;
}

// --- survival ----------------------------------------------------------------

int cmd_survival(const ExperimentConfig& cfg, const Artifacts& art,
                 const std::vector<double>& times) {
  const bdsim::SurvivalReport rep = bdsim::run_survival(cfg, times, cfg.replicas);
  std::printf("survival: %ld trees, target b*phi(x0) = %s\n", cfg.replicas,
              g6(rep.b_phi_x0).c_str());
  for (const bdsim::SurvivalPoint& pt : rep.points)
    std::printf("  t=%-6s p_hat=%s [%s, %s]  t*p_hat=%s\n", g6(pt.t).c_str(),
                g6(pt.p_hat).c_str(), g6(pt.wilson.lo).c_str(),
                g6(pt.wilson.hi).c_str(), g6(pt.t_p_hat).c_str());

  Gate gate;
  bool mono = true;
  for (size_t i = 1; i < rep.points.size(); ++i)
    mono = mono && rep.points[i].t_p_hat > rep.points[i - 1].t_p_hat;
  if (rep.points.size() > 1)
    gate.check("monotone trend", mono, "t*p_hat increasing toward the limit");
  const bdsim::SurvivalPoint& last = rep.points.back();
  const double rel = std::abs(last.t_p_hat / rep.b_phi_x0 - 1.0);
  gate.check("limit at t=" + g6(last.t), rel <= cfg.tolerances.survival_rel,
             "relative deviation " + g6(rel) + " (limit " +
                 g6(cfg.tolerances.survival_rel) + ")");

  art.write("survival.json", bdsim::report_json(rep, cfg));
  std::vector<std::string> rows;
  for (const bdsim::SurvivalPoint& pt : rep.points)
    rows.push_back(g17(pt.t) + "," + std::to_string(pt.trees) + "," +
                   std::to_string(pt.survivors) + "," + g17(pt.p_hat) + "," +
                   g17(pt.wilson.lo) + "," + g17(pt.wilson.hi) + "," +
                   g17(pt.t_p_hat) + "," + g17(pt.target));
  art.csv("survival.csv",
          "t,trees,survivors,p_hat,wilson_lo,wilson_hi,t_p_hat,target", rows);
  return gate.finish("survival");
}

// --- moments -----------------------------------------------------------------

int cmd_moments(const ExperimentConfig& cfg, const Artifacts& art,
                const std::vector<double>& times) {
  Gate gate;
  nlohmann::json all = nlohmann::json::array();
  std::vector<std::string> rows;
  for (double t : times) {
    const bdsim::MomentReport rep = bdsim::run_moments(cfg, t, cfg.replicas);
    std::printf("moments t=%s (%ld trees)\n", g6(t).c_str(), rep.trees);
    struct Row {
      const char* name;
      const bdsim::MomentEstimate* e;
    };
    const Row rs[] = {{"count", &rep.count},
                      {"phi_sum", &rep.phi_sum},
                      {"phi_sum_sq", &rep.phi_sum_sq},
                      {"martingale", &rep.martingale}};
    for (const Row& r : rs) {
      gate.check(std::string(r.name) + " t=" + g6(t),
                 std::abs(r.e->z()) <= cfg.tolerances.z_limit, mom_str(*r.e));
      rows.push_back(g17(t) + "," + r.name + "," + g17(r.e->mean) + "," +
                     g17(r.e->se) + "," + g17(r.e->expected) + "," +
                     g17(r.e->z()));
    }
    all.push_back(nlohmann::json::parse(bdsim::report_json(rep, cfg)));
  }
  art.write("moments.json", all.dump(2) + "\n");
  art.csv("moments.csv", "t,quantity,mc_mean,mc_se,expected,z", rows);
  return gate.finish("moments");
}

// --- martingale --------------------------------------------------------------

int cmd_martingale(const ExperimentConfig& cfg, const Artifacts& art,
                   const std::vector<double>& times) {
  const bdsim::MartingaleReport rep =
      bdsim::run_martingale(cfg, times, cfg.replicas);
  std::printf("martingale: %ld population trees, %ld exploration trees\n",
              rep.trees_m, rep.trees_s);
  Gate gate;
  std::vector<std::string> rows;
  for (size_t i = 0; i < rep.ts.size(); ++i) {
    const double t = rep.ts[i];
    gate.check("M mean t=" + g6(t),
               std::abs(rep.martingale[i].z()) <= cfg.tolerances.z_limit,
               mom_str(rep.martingale[i]));
    gate.check("S mean t=" + g6(t),
               std::abs(rep.s_value[i].z()) <= cfg.tolerances.z_limit,
               mom_str(rep.s_value[i]));
    rows.push_back(g17(t) + ",M," + g17(rep.martingale[i].mean) + "," +
                   g17(rep.martingale[i].se) + "," +
                   g17(rep.martingale[i].expected) + "," +
                   g17(rep.martingale[i].z()));
    rows.push_back(g17(t) + ",S," + g17(rep.s_value[i].mean) + "," +
                   g17(rep.s_value[i].se) + "," + g17(rep.s_value[i].expected) +
                   "," + g17(rep.s_value[i].z()));
  }
  art.write("martingale.json", bdsim::report_json(rep, cfg));
  art.csv("martingale.csv", "t,family,mean,se,expected,z", rows);
  return gate.finish("martingale");
}

// --- yaglom ------------------------------------------------------------------

int cmd_yaglom(const ExperimentConfig& cfg, const Artifacts& art, double t) {
  const bdsim::YaglomReport rep = bdsim::run_yaglom(cfg, t, cfg.replicas);
  std::printf("yaglom t=%s: %ld/%ld survivors\n", g6(t).c_str(), rep.survivors,
              rep.trees);
  std::printf("  phi load mean %s (target %s), count load mean %s (target %s)\n",
              g6(rep.mean_phi_load).c_str(), g6(rep.target_phi_mean).c_str(),
              g6(rep.mean_count_load).c_str(), g6(rep.target_count_mean).c_str());
  Gate gate;
  gate.check("exponential phi load",
             rep.ks_phi.p_value > cfg.tolerances.p_value, ks_str(rep.ks_phi));
  gate.check("exponential count load",
             rep.ks_count.p_value > cfg.tolerances.p_value,
             ks_str(rep.ks_count));
  art.write("yaglom.json", bdsim::report_json(rep, cfg));
  std::vector<std::string> rows;
  rows.push_back("phi," + g17(rep.mean_phi_load) + "," +
                 g17(rep.target_phi_mean) + "," + g17(rep.ks_phi.statistic) +
                 "," + g17(rep.ks_phi.p_value));
  rows.push_back("count," + g17(rep.mean_count_load) + "," +
                 g17(rep.target_count_mean) + "," +
                 g17(rep.ks_count.statistic) + "," +
                 g17(rep.ks_count.p_value));
  art.csv("yaglom.csv", "load,mc_mean,target_mean,ks_d,ks_p", rows);
  return gate.finish("yaglom");
}

// --- density -----------------------------------------------------------------

int cmd_density(const ExperimentConfig& cfg, const Artifacts& art, double t,
                int bins) {
  const bdsim::DensityReport rep = bdsim::run_density(cfg, t, cfg.replicas, bins);
  std::printf("density t=%s: %ld/%ld survivors, %ld pooled particles\n",
              g6(t).c_str(), rep.survivors, rep.trees, rep.pooled_n);
  std::printf("  pooled KS distance %s (diagnostic; within-tree correlation)\n",
              g6(rep.pooled_ks_d).c_str());
  Gate gate;
  gate.check("chi2 vs phi density", rep.chi2.p_value > cfg.tolerances.p_value,
             chi2_str(rep.chi2));
  gate.check("KS vs phi density", rep.ks.p_value > cfg.tolerances.p_value,
             ks_str(rep.ks));
  art.write("density.json", bdsim::report_json(rep, cfg));
  std::vector<std::string> rows;
  rows.push_back("chi2," + g17(rep.chi2.statistic) + "," + g17(rep.chi2.dof) +
                 "," + g17(rep.chi2.p_value));
  rows.push_back("ks," + g17(rep.ks.statistic) + "," +
                 g17(rep.ks.n_effective) + "," + g17(rep.ks.p_value));
  rows.push_back("pooled_ks," + g17(rep.pooled_ks_d) + "," +
                 g17(static_cast<double>(rep.pooled_n)) + ",");
  art.csv("density.csv", "test,statistic,dof_or_n,p_value", rows);
  return gate.finish("density");
}

// --- spine -------------------------------------------------------------------

int cmd_spine(const ExperimentConfig& cfg, const Artifacts& art,
              double total_time, double burn_in, double thin_dt, int bins) {
  const bdsim::SpineReport rep =
      bdsim::run_spine_occupation(cfg, total_time, burn_in, thin_dt, bins);
  std::printf("spine: horizon %s, %ld thinned samples\n", g6(total_time).c_str(),
              rep.samples);
  Gate gate;
  gate.check("chi2 vs phi^2 density", rep.chi2.p_value > cfg.tolerances.p_value,
             chi2_str(rep.chi2));
  const double z = rep.se_mean_phi > 0.0
                       ? (rep.mean_phi - rep.target_mean_phi) / rep.se_mean_phi
                       : 0.0;
  gate.check("mean phi along path", std::abs(z) <= cfg.tolerances.z_limit,
             g6(rep.mean_phi) + " +- " + g6(rep.se_mean_phi) + " vs " +
                 g6(rep.target_mean_phi) + " (z=" + g6(z) + ")");
  art.write("spine.json", bdsim::report_json(rep, cfg));
  std::vector<std::string> rows;
  rows.push_back("chi2," + g17(rep.chi2.statistic) + "," + g17(rep.chi2.dof) +
                 "," + g17(rep.chi2.p_value));
  rows.push_back("mean_phi," + g17(rep.mean_phi) + "," + g17(rep.se_mean_phi) +
                 "," + g17(rep.target_mean_phi));
  art.csv("spine.csv", "test,statistic,scale,target_or_p", rows);
  return gate.finish("spine");
}

// --- pathwise ----------------------------------------------------------------

int cmd_pathwise(const ExperimentConfig& cfg, const Artifacts& art, long trees,
                 long pairs, double budget) {
  const bdsim::PathwiseReport rep =
      bdsim::run_pathwise_checks(cfg, trees, pairs, budget);
  std::printf("pathwise: %ld trees (%ld rejected over budget), %ld pairs, "
              "exploration length %s\n",
              rep.trees, rep.rejected, rep.pairs, g6(rep.length).c_str());
  Gate gate;
  struct Row {
    const char* name;
    double v;
  };
  const Row rows[] = {
      {"root start value", rep.max_root_dev},
      {"sibling-weight recurrence", rep.max_ysum_dev},
      {"branch jump size", rep.max_jump_dev},
      {"reflection identity", rep.max_reflect_dev},
      {"running-infimum identity", rep.max_inf_dev},
      {"metric vs genealogy join", rep.max_dstar_gen_dev},
  };
  std::vector<std::string> lines;
  for (const Row& r : rows) {
    gate.check(r.name, r.v <= cfg.tolerances.exact_abs,
               "max deviation " + g6(r.v));
    lines.push_back(std::string(r.name) + "," + g17(r.v));
  }
  art.write("pathwise.json", bdsim::report_json(rep, cfg));
  art.csv("pathwise.csv", "identity,max_abs_deviation", lines);
  return gate.finish("pathwise");
}

// --- ergodic -----------------------------------------------------------------

int cmd_ergodic(const ExperimentConfig& cfg, const Artifacts& art, double clock,
                int batches) {
  const bdsim::ErgodicReport rep = bdsim::run_ergodic(cfg, clock, batches);
  std::printf("ergodic: clock %s over %ld trees, %d batches\n",
              g6(clock).c_str(), rep.trees, rep.batches);
  Gate gate;
  gate.check("unit average", std::abs(rep.mean_one - 1.0) <= cfg.tolerances.exact_abs,
             "mean " + g17(rep.mean_one));
  const double zphi =
      rep.se_mean_phi > 0.0
          ? (rep.mean_phi - rep.target_mean_phi) / rep.se_mean_phi
          : 0.0;
  gate.check("phi average", std::abs(zphi) <= cfg.tolerances.z_limit,
             g6(rep.mean_phi) + " +- " + g6(rep.se_mean_phi) + " vs " +
                 g6(rep.target_mean_phi) + " (z=" + g6(zphi) + ")");
  const double zqv = rep.se_mean_qv > 0.0
                         ? (rep.mean_qv - rep.target_qv) / rep.se_mean_qv
                         : 0.0;
  gate.check("quadratic-variation rate", std::abs(zqv) <= cfg.tolerances.z_limit,
             g6(rep.mean_qv) + " +- " + g6(rep.se_mean_qv) + " vs " +
                 g6(rep.target_qv) + " (z=" + g6(zqv) + ")");
  art.write("ergodic.json", bdsim::report_json(rep, cfg));
  std::vector<std::string> rows;
  rows.push_back("one," + g17(rep.mean_one) + ",0," + g17(1.0));
  rows.push_back("phi," + g17(rep.mean_phi) + "," + g17(rep.se_mean_phi) + "," +
                 g17(rep.target_mean_phi));
  rows.push_back("qv," + g17(rep.mean_qv) + "," + g17(rep.se_mean_qv) + "," +
                 g17(rep.target_qv));
  art.csv("ergodic.csv", "average,mean,se,target", rows);
  return gate.finish("ergodic");
}

// --- clt ---------------------------------------------------------------------

int cmd_clt(const ExperimentConfig& cfg, const Artifacts& art, double clock,
            const std::vector<double>& grid) {
  const bdsim::CltReport rep = bdsim::run_clt(cfg, clock, grid, cfg.replicas);
  std::printf("clt: n=%s, %ld replicas, sigma2=%s\n", g6(clock).c_str(),
              rep.replicas, g6(rep.target_sigma2).c_str());
  std::printf("  qv integral / clock: %s +- %s\n",
              g6(rep.mean_qv_over_clock).c_str(),
              g6(rep.se_qv_over_clock).c_str());
  Gate gate;
  std::vector<std::string> rows;
  for (const bdsim::CltPoint& pt : rep.points) {
    const std::string at = " t=" + g6(pt.t);
    gate.check("centered path normal" + at,
               pt.ks_centered.p_value > cfg.tolerances.p_value,
               ks_str(pt.ks_centered));
    gate.check("reflected path half-normal" + at,
               pt.ks_ysum.p_value > cfg.tolerances.p_value, ks_str(pt.ks_ysum));
    gate.check("tree-count term half-normal" + at,
               pt.ks_lambda.p_value > cfg.tolerances.p_value,
               ks_str(pt.ks_lambda));
    const double ratio = pt.var_centered / pt.var_target;
    gate.check("variance ratio" + at,
               std::abs(ratio - 1.0) <= cfg.tolerances.var_rel,
               g6(pt.var_centered) + " / " + g6(pt.var_target) + " = " +
                   g6(ratio));
    rows.push_back(g17(pt.t) + "," + g17(pt.ks_centered.statistic) + "," +
                   g17(pt.ks_centered.p_value) + "," +
                   g17(pt.ks_ysum.statistic) + "," + g17(pt.ks_ysum.p_value) +
                   "," + g17(pt.ks_lambda.statistic) + "," +
                   g17(pt.ks_lambda.p_value) + "," + g17(pt.var_centered) +
                   "," + g17(pt.var_target));
  }
  art.write("clt.json", bdsim::report_json(rep, cfg));
  art.csv("clt.csv",
          "t,ks_centered_d,ks_centered_p,ks_half_d,ks_half_p,ks_count_d,"
          "ks_count_p,var,var_target",
          rows);
  return gate.finish("clt");
}

// --- dmatrix -----------------------------------------------------------------

int cmd_dmatrix(const ExperimentConfig& cfg, const Artifacts& art, double t,
                long trees, double budget, int k) {
  const bdsim::DistanceReport rep =
      bdsim::run_dmatrix(cfg, t, trees, budget, k);
  std::printf("dmatrix t=%s k=%d: %ld trees (%ld attempts, %ld truncated)\n",
              g6(t).c_str(), rep.k, rep.trees, rep.attempts, rep.truncated);
  std::printf("  two-route KS (diagnostic): %s; median relative deviation %s\n",
              ks_str(rep.ks_s_vs_height).c_str(),
              g6(rep.median_rel_dev).c_str());
  Gate gate;
  gate.check("metric equals genealogy route",
             rep.max_exact_dev <= cfg.tolerances.exact_abs,
             "max deviation " + g6(rep.max_exact_dev));
  if (t >= 5.0) {
    gate.check("norm 0.9-quantile", rep.q90_norm <= cfg.tolerances.q90_norm,
               g6(rep.q90_norm) + " (limit " + g6(cfg.tolerances.q90_norm) +
                   "; truncated-at-+inf envelope " + g6(rep.q90_norm_all) +
                   ", truncated fraction " + g6(rep.truncated_fraction) + ")");
  } else {
    std::printf("  [skip] norm 0.9-quantile %s: no gate below t=5 "
                "(pre-asymptotic)\n",
                g6(rep.q90_norm).c_str());
  }
  art.write("dmatrix.json", bdsim::report_json(rep, cfg));
  std::vector<std::string> rows;
  for (size_t i = 0; i < rep.norms.size(); ++i) {
    const size_t half = i / 2;
    const bool h_route = (i % 2 == 0);
    const double sample = h_route
                              ? (half < rep.d_h_samples.size()
                                     ? rep.d_h_samples[half]
                                     : 0.0)
                              : (half < rep.d_s_samples.size()
                                     ? rep.d_s_samples[half]
                                     : 0.0);
    rows.push_back(std::to_string(i) + "," + g17(rep.norms[i]) + "," +
                   (h_route ? "height" : "sibling") + "," + g17(sample));
  }
  art.csv("dmatrix.csv", "tree,norm,sample_route,sample_value", rows);
  return gate.finish("dmatrix");
}

// --- crt-compare -------------------------------------------------------------

int cmd_crt(const ExperimentConfig& cfg, const Artifacts& art, double t,
            long per_side, double budget, double dt) {
  const bdsim::CrtReport rep =
      bdsim::run_crt_compare(cfg, t, per_side, budget, dt);
  std::printf("crt-compare t=%s: %ld vs %ld samples (sim: %ld attempts, %ld "
              "truncated; excursions over cap: %ld)\n",
              g6(t).c_str(), rep.sim_n, rep.ref_n, rep.sim_attempts,
              rep.sim_truncated, rep.ref_truncated);
  std::printf("  b*sigma=%s, excursion level %s, duration cap %s\n",
              g6(rep.bsigma).c_str(), g6(rep.level).c_str(),
              g6(rep.zeta_cap).c_str());
  Gate gate;
  gate.check("pairwise distance law",
             rep.ks_distance.p_value > cfg.tolerances.p_value,
             ks_str(rep.ks_distance));
  std::printf("  [diag] height-max law: %s\n", ks_str(rep.ks_height).c_str());
  std::printf("  [diag] total-mass law: %s\n", ks_str(rep.ks_mass).c_str());
  art.write("crt_compare.json", bdsim::report_json(rep, cfg));
  std::vector<std::string> rows;
  rows.push_back("distance," + g17(rep.ks_distance.statistic) + "," +
                 g17(rep.ks_distance.n_effective) + "," +
                 g17(rep.ks_distance.p_value));
  rows.push_back("height," + g17(rep.ks_height.statistic) + "," +
                 g17(rep.ks_height.n_effective) + "," +
                 g17(rep.ks_height.p_value));
  rows.push_back("mass," + g17(rep.ks_mass.statistic) + "," +
                 g17(rep.ks_mass.n_effective) + "," + g17(rep.ks_mass.p_value));
  art.csv("crt_compare.csv", "statistic,ks_d,n_effective,p_value", rows);
  return gate.finish("crt-compare");
}

// --- phase -------------------------------------------------------------------

int cmd_phase(const ExperimentConfig& cfg, const Artifacts& art,
              const std::vector<double>& factors,
              const std::vector<double>& times) {
  const bdsim::PhaseReport rep =
      bdsim::run_phase(cfg, factors, times, cfg.replicas);
  Gate gate;
  std::vector<std::string> rows;
  for (const bdsim::PhasePoint& pp : rep.points) {
    std::printf("phase beta/beta_c=%s (beta=%s, %ld trees):", g6(pp.factor).c_str(),
                g6(pp.beta).c_str(), pp.trees);
    for (const bdsim::SurvivalPoint& pt : pp.survival)
      std::printf("  p(%s)=%s", g6(pt.t).c_str(), g6(pt.p_hat).c_str());
    std::printf("  mean pop %s\n", g6(pp.mean_population).c_str());
    for (const bdsim::SurvivalPoint& pt : pp.survival)
      rows.push_back(g17(pp.factor) + "," + g17(pp.beta) + "," + g17(pt.t) +
                     "," + std::to_string(pt.trees) + "," +
                     std::to_string(pt.survivors) + "," + g17(pt.p_hat) + "," +
                     g17(pt.wilson.lo) + "," + g17(pt.wilson.hi) + "," +
                     g17(pt.t_p_hat));

    const bdsim::SurvivalPoint& first = pp.survival.front();
    const bdsim::SurvivalPoint& last = pp.survival.back();
    const std::string label = "beta/beta_c=" + g6(pp.factor);
    if (first.p_hat <= 0.0) {
      gate.check(label, false, "no survivors at t=" + g6(first.t));
      continue;
    }
    const double drop = 1.0 - last.p_hat / first.p_hat;
    if (pp.factor > 1.0) {
      gate.check(label + " stabilizes", drop < cfg.tolerances.phase_flat,
                 "relative drop " + g6(drop) + " from t=" + g6(first.t) +
                     " to t=" + g6(last.t));
    } else {
      gate.check(label + " decays", drop > cfg.tolerances.phase_decay,
                 "relative drop " + g6(drop) + " from t=" + g6(first.t) +
                     " to t=" + g6(last.t));
    }
  }
  art.write("phase.json", bdsim::report_json(rep, cfg));
  art.csv("phase.csv",
          "factor,beta,t,trees,survivors,p_hat,wilson_lo,wilson_hi,t_p_hat",
          rows);
  return gate.finish("phase");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"branching-diffusion experiments: simulation, limit laws, and "
               "genealogy scaling checks"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  uint64_t seed = 0;
  long replicas = 0;
  int threads = 1;
  app.add_option("--config", config_path, "TOML experiment config file");
  app.add_option("--seed", seed, "Master seed (overrides the config)");
  app.add_option("--replicas", replicas,
                 "Replica count (overrides the config; statistical precision "
                 "only, never the per-replica streams)")
      ->check(CLI::PositiveNumber);
  app.add_option("--threads", threads,
                 "Worker threads; results are independent of this value")
      ->check(CLI::PositiveNumber);
  app.add_option("--out", out_dir, "Artifact directory (JSON/CSV/JSONL)");

  auto* sub_constants =
      app.add_subcommand("constants", "Print the model's limit constants");

  double sim_horizon = -1.0, sim_budget = -1.0;
  bool sim_paths = false;
  auto* sub_simulate = app.add_subcommand(
      "simulate", "Dump simulated trees as JSONL (byte-stable per seed)");
  sub_simulate->add_option("--horizon", sim_horizon,
                           "Census horizon (default: config horizon)");
  sub_simulate->add_option("--budget", sim_budget,
                           "Total-lifetime budget per tree (default: none)");
  sub_simulate->add_flag("--store-paths", sim_paths,
                         "Keep thinned diffusion paths on every node");

  std::vector<double> surv_times{10.0, 20.0, 40.0};
  auto* sub_survival = app.add_subcommand(
      "survival", "Survival probability decay toward the 1/t law");
  sub_survival->add_option("--times", surv_times, "Census times")
      ->delimiter(',');

  std::vector<double> mom_times{1.0, 2.0, 4.0};
  auto* sub_moments = app.add_subcommand(
      "moments", "Population moments against the spectral oracles");
  sub_moments->add_option("--times", mom_times, "Census times")
      ->delimiter(',');

  std::vector<double> mart_times{0.5, 1.0, 2.0, 4.0};
  auto* sub_martingale = app.add_subcommand(
      "martingale",
      "Mean of the population martingale and of the exploration path value");
  sub_martingale->add_option("--times", mart_times, "Evaluation times")
      ->delimiter(',');

  double yag_t = 30.0;
  auto* sub_yaglom = app.add_subcommand(
      "yaglom", "Conditioned population load against its exponential limit");
  sub_yaglom->add_option("--t", yag_t, "Conditioning time");

  double den_t = 20.0;
  int den_bins = 50;
  auto* sub_density = app.add_subcommand(
      "density", "Conditioned particle positions against the phi density");
  sub_density->add_option("--t", den_t, "Conditioning time");
  sub_density->add_option("--bins", den_bins, "Histogram bins")
      ->check(CLI::PositiveNumber);

  double sp_total = 1e5, sp_burn = 50.0, sp_thin = 3.0;
  int sp_bins = 50;
  auto* sub_spine = app.add_subcommand(
      "spine", "Conditioned single-particle occupation against phi^2");
  sub_spine->add_option("--total-time", sp_total, "Path horizon");
  sub_spine->add_option("--burn-in", sp_burn, "Discarded initial stretch");
  sub_spine->add_option("--thin", sp_thin, "Sampling interval");
  sub_spine->add_option("--bins", sp_bins, "Histogram bins")
      ->check(CLI::PositiveNumber);

  long pw_trees = 1000, pw_pairs = 1000;
  double pw_budget = 2000.0;
  auto* sub_pathwise = app.add_subcommand(
      "pathwise", "Exact exploration-path identities (deviations are fp noise)");
  sub_pathwise->add_option("--trees", pw_trees, "Trees to explore")
      ->check(CLI::PositiveNumber);
  sub_pathwise->add_option("--pairs", pw_pairs, "Random clock pairs per run")
      ->check(CLI::NonNegativeNumber);
  sub_pathwise->add_option("--budget", pw_budget,
                           "Per-tree total-lifetime budget (rejection bound)");

  double erg_clock = 1e4;
  int erg_batches = 32;
  auto* sub_ergodic = app.add_subcommand(
      "ergodic", "Time averages along the forest exploration");
  sub_ergodic->add_option("--clock", erg_clock, "Exploration horizon");
  sub_ergodic->add_option("--batches", erg_batches, "Batch-means batches")
      ->check(CLI::PositiveNumber);

  double clt_clock = 1e4;
  std::vector<double> clt_grid{1.0};
  auto* sub_clt = app.add_subcommand(
      "clt", "Scaling limit of the centered exploration path");
  sub_clt->add_option("--clock", clt_clock, "Scale n of the exploration clock");
  sub_clt->add_option("--grid", clt_grid, "Evaluation times t (clock = n*t)")
      ->delimiter(',');

  double dm_t = 30.0, dm_budget = 20000.0;
  long dm_trees = 0;
  int dm_k = 2;
  auto* sub_dmatrix = app.add_subcommand(
      "dmatrix",
      "Sampled distance matrices: height route against sibling-weight route");
  sub_dmatrix->add_option("--t", dm_t, "Conditioning time");
  sub_dmatrix->add_option("--k", dm_k, "Sampled clocks per tree")
      ->check(CLI::Range(2, 64));
  sub_dmatrix->add_option("--trees", dm_trees,
                          "Conditioned trees (default: --replicas)");
  sub_dmatrix->add_option("--budget", dm_budget,
                          "Per-tree total-lifetime budget");

  double crt_t = 30.0, crt_budget = 20000.0, crt_dt = 1e-3;
  long crt_side = 0;
  auto* sub_crt = app.add_subcommand(
      "crt-compare",
      "Rescaled genealogy against the conditioned Brownian excursion tree");
  sub_crt->add_option("--t", crt_t, "Conditioning time");
  sub_crt->add_option("--per-side", crt_side,
                      "Samples per ensemble (default: --replicas)");
  sub_crt->add_option("--budget", crt_budget, "Per-tree total-lifetime budget");
  sub_crt->add_option("--dt", crt_dt, "Excursion grid step");

  std::vector<double> ph_factors{0.8, 1.0, 1.2};
  std::vector<double> ph_times{20.0, 40.0};
  auto* sub_phase = app.add_subcommand(
      "phase", "Survival curves across sub/critical/supercritical rates");
  sub_phase->add_option("--factors", ph_factors, "beta/beta_c factors")
      ->delimiter(',');
  sub_phase->add_option("--times", ph_times, "Census times")->delimiter(',');

  for (CLI::App* s : app.get_subcommands(nullptr)) s->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    ExperimentConfig cfg = config_path.empty()
                               ? ExperimentConfig::reference()
                               : ExperimentConfig::from_file(config_path);
    if (app.count("--seed") > 0) cfg.seed = seed;
    if (app.count("--replicas") > 0) cfg.replicas = replicas;
    (void)threads;  // reserved; execution is serial and stream-stable

    Artifacts art;
    art.cfg = &cfg;
    if (!out_dir.empty()) {
      std::filesystem::create_directories(out_dir);
      art.dir = out_dir;
    }

    if (*sub_constants) return cmd_constants(cfg, art);
    if (*sub_simulate) {
      const double horizon = sim_horizon > 0.0 ? sim_horizon : cfg.horizon;
      const double budget = sim_budget > 0.0
                                ? sim_budget
                                : std::numeric_limits<double>::infinity();
      return cmd_simulate(cfg, art, horizon, budget, sim_paths);
    }
    if (*sub_survival) return cmd_survival(cfg, art, surv_times);
    if (*sub_moments) return cmd_moments(cfg, art, mom_times);
    if (*sub_martingale) return cmd_martingale(cfg, art, mart_times);
    if (*sub_yaglom) return cmd_yaglom(cfg, art, yag_t);
    if (*sub_density) return cmd_density(cfg, art, den_t, den_bins);
    if (*sub_spine) return cmd_spine(cfg, art, sp_total, sp_burn, sp_thin, sp_bins);
    if (*sub_pathwise) return cmd_pathwise(cfg, art, pw_trees, pw_pairs, pw_budget);
    if (*sub_ergodic) return cmd_ergodic(cfg, art, erg_clock, erg_batches);
    if (*sub_clt) return cmd_clt(cfg, art, clt_clock, clt_grid);
    if (*sub_dmatrix)
      return cmd_dmatrix(cfg, art, dm_t, dm_trees > 0 ? dm_trees : cfg.replicas,
                         dm_budget, dm_k);
    if (*sub_crt)
      return cmd_crt(cfg, art, crt_t, crt_side > 0 ? crt_side : cfg.replicas,
                     crt_budget, crt_dt);
    if (*sub_phase) return cmd_phase(cfg, art, ph_factors, ph_times);
    std::fprintf(stderr, "no subcommand selected\n");
    return 2;
  } catch (const bdsim::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const bdsim::CapExceeded& e) {
    std::fprintf(stderr, "cap exceeded: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
