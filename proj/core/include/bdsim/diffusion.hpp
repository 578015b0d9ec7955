#pragma once

#include "bdsim/domain.hpp"
#include "bdsim/rng.hpp"
#include "bdsim/spectral.hpp"

namespace bdsim {

struct StepParams {
  double h = 1e-3;               // Euler step
  bool bridge_correction = true; // Brownian-bridge interior-exit test
  int substep_cap = 1 << 14;     // total substeps allowed per conditioned step
  double drift_guard = 0.5;      // halve while |drift| h > guard * boundary distance
};

struct KilledStep {
  bool absorbed = false;
  Vec pos;           // endpoint if alive; exact boundary point if absorbed
  double time_frac;  // fraction of h elapsed (0.5 at absorption: midpoint rule)
};

// One Euler step of the killed diffusion: Gaussian increment with per-axis
// variance a_i h, endpoint-exit detection, and (optionally) the
// Brownian-bridge hit probability 1 - exp(-2 d_in d_out / (a_i h)) per face,
// independent across faces. Absorption reports the exact face point.
KilledStep step_killed(const Domain& d, const Vec& x, const StepParams& sp,
                       RngStream& rng);

// One step of the phi-conditioned diffusion (drift a grad phi / phi). Never
// absorbed: steps recursively halve while the drift would move more than
// guard * distance-to-boundary, and overshoot reflects back inside. Throws
// CapExceeded when one call needs more than substep_cap substeps.
Vec step_conditioned(const EigenPair& ep, const Vec& x, const StepParams& sp,
                     RngStream& rng);

// Draw from the spine equilibrium density phi^2 by rejection from the uniform
// envelope sup phi^2 on the domain.
Vec sample_phi2(const EigenPair& ep, RngStream& rng);

}  // namespace bdsim
