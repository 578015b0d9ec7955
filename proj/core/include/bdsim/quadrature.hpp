#pragma once

#include <functional>

namespace bdsim {

struct QuadResult {
  double value = 0.0;
  double error_bound = 0.0;
  long segments = 0;
};

// Adaptive Gauss–Kronrod 15(7) on [a, b] to an absolute tolerance.
// Throws CapExceeded past max_segments (default 10^6 per the numerics policy).
QuadResult quad(const std::function<double(double)>& f, double a, double b,
                double abs_tol = 1e-10, long max_segments = 1'000'000);

inline double integrate(const std::function<double(double)>& f, double a, double b,
                        double abs_tol = 1e-10, long max_segments = 1'000'000) {
  return quad(f, a, b, abs_tol, max_segments).value;
}

}  // namespace bdsim
