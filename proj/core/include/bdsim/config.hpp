#pragma once

#include <cstdint>
#include <string>

#include "bdsim/domain.hpp"
#include "bdsim/offspring.hpp"
#include "bdsim/simulate.hpp"
#include "bdsim/spectral.hpp"
#include "bdsim/toml.hpp"

namespace bdsim {

// Pass/fail thresholds for the experiment gates. Kept in configuration so a
// report's pass flag is a pure function of its stored numbers and these
// values, never of anything baked into code paths.
struct Tolerances {
  double p_value = 0.01;       // KS / chi-squared gates
  double z_limit = 3.0;        // moment and martingale mean gates, in SEs
  double survival_rel = 0.10;  // |t p_hat / (b phi) - 1| at the largest t
  double var_rel = 0.10;       // variance-ratio gates
  double q90_norm = 0.30;      // distance-matrix norm 0.9-quantile gate (pilot-calibrated)
  double exact_abs = 1e-9;     // pathwise identity gates
  double phase_flat = 0.20;    // supercritical survival: max relative drop
  double phase_decay = 0.40;   // (sub)critical survival: min relative drop
};

// Fully resolved experiment configuration. Built from a TOML file (every key
// optional, falling back to the reference model: unit-coefficient interval
// (0, pi), binary fission A = 2 at the critical rate, start at the midpoint)
// or programmatically. `beta_spec` keeps the requested value ("critical" or a
// number); `beta` is the resolved rate.
struct ExperimentConfig {
  Domain domain = Domain::interval(0.0, 3.141592653589793);
  OffspringDistribution offspring = OffspringDistribution::deterministic(2);
  std::string beta_spec = "critical";
  double beta = 0.0;
  Vec x0{1.5707963267948966};
  StepParams step{};
  long particle_cap = 2'000'000;
  int path_stride = 10;
  uint64_t seed = 20260816;
  long replicas = 1000;
  double horizon = 4.0;
  Tolerances tolerances{};

  ModelConstants constants{};  // derived from domain/offspring/x0

  static ExperimentConfig reference();
  static ExperimentConfig from_toml(const TomlDoc& doc);
  static ExperimentConfig from_file(const std::string& path);

  // Re-derives beta and the model constants after field edits.
  void resolve();

  SimulationParams simulation_params() const;

  // Resolved config as a JSON string (embedded in experiment artifacts).
  std::string to_json() const;
};

}  // namespace bdsim
