#pragma once

#include <vector>

#include "bdsim/rng.hpp"

namespace bdsim {

// A grid realization of a standard Brownian excursion conditioned to reach a
// given level, the reference object for the continuum-tree comparisons.
// path[0] = path.back() = 0 and path[i] is the value at time i*dt.
struct ConditionedExcursion {
  double dt = 0.0;
  double zeta = 0.0;  // duration = (path.size()-1) * dt
  double sup = 0.0;
  std::vector<double> path;
};

// Scans a driftless Brownian path on a dt-grid, cutting it into excursions at
// sign changes, until one excursion both reaches `level` and has duration at
// most zeta_cap; returns its absolute value. Excursions longer than zeta_cap
// are discarded whole (the caller applies the same truncation to whatever
// ensemble this is compared against). scan_cap bounds the Brownian time spent
// per scan before the search restarts afresh; the restart discards mass
// ~ level * sqrt(2/(pi*scan_cap)), negligible at the default.
// discarded_long, when given, accumulates the number of excursions that
// reached the level but overran zeta_cap.
ConditionedExcursion sample_conditioned_excursion(double level,
                                                  double zeta_cap, double dt,
                                                  RngStream& rng,
                                                  double scan_cap = 1e4,
                                                  long* discarded_long = nullptr);

// Value at time s by linear interpolation between grid points.
double excursion_value(const ConditionedExcursion& e, double s);

// Minimum over [a, b] (grid resolution).
double excursion_min(const ConditionedExcursion& e, double a, double b);

// Pairwise tree distances among sample times on the excursion:
// d(r, w) = e_r + e_w - 2 min_{[r,w]} e, scaled by `height_scale`.
// Returns a k*k row-major symmetric matrix.
std::vector<double> excursion_distance_matrix(const ConditionedExcursion& e,
                                              const std::vector<double>& times,
                                              double height_scale);

}  // namespace bdsim
