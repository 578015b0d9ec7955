#include "bdsim/crt.hpp"

#include <algorithm>
#include <cmath>

#include "bdsim/common.hpp"

namespace bdsim {

ConditionedExcursion sample_conditioned_excursion(double level,
                                                  double zeta_cap, double dt,
                                                  RngStream& rng,
                                                  double scan_cap,
                                                  long* discarded_long) {
  if (level <= 0.0 || dt <= 0.0 || zeta_cap <= dt)
    throw ConfigError("excursion sampler needs level > 0, dt > 0, zeta_cap > dt");
  const double sd = std::sqrt(dt);
  const size_t max_points = static_cast<size_t>(zeta_cap / dt) + 2;

  for (;;) {  // scan attempts
    double x = 0.0;
    double elapsed = 0.0;
    // Current excursion state. The buffer holds the path from the last zero;
    // once it overflows zeta_cap the excursion is disqualified and only its
    // end is awaited.
    std::vector<double> buf;
    buf.push_back(0.0);
    bool overflow = false;
    double sup = 0.0;

    while (elapsed < scan_cap) {
      const double next = x + sd * rng.normal();
      elapsed += dt;
      const bool crossed = (x > 0.0 && next <= 0.0) || (x < 0.0 && next >= 0.0);
      if (crossed) {
        if (!overflow && sup >= level) {
          buf.push_back(0.0);
          ConditionedExcursion out;
          out.dt = dt;
          out.path = std::move(buf);
          out.zeta = (static_cast<double>(out.path.size()) - 1.0) * dt;
          out.sup = sup;
          return out;
        }
        if (overflow && sup >= level && discarded_long != nullptr)
          ++*discarded_long;
        // Start the next excursion at this zero.
        buf.clear();
        buf.push_back(0.0);
        overflow = false;
        sup = 0.0;
        // Landing exactly on zero ends one excursion and begins another.
        x = next;
        if (x != 0.0) {
          buf.push_back(std::abs(x));
          sup = std::abs(x);
        }
        continue;
      }
      x = next;
      sup = std::max(sup, std::abs(x));
      if (!overflow) {
        buf.push_back(std::abs(x));
        if (buf.size() > max_points) {
          overflow = true;
          buf.clear();
          buf.push_back(0.0);
        }
      }
    }
    // Scan budget exhausted without a qualifying excursion; start over.
  }
}

double excursion_value(const ConditionedExcursion& e, double s) {
  if (s <= 0.0) return e.path.front();
  if (s >= e.zeta) return e.path.back();
  const double u = s / e.dt;
  const size_t i = static_cast<size_t>(u);
  const double w = u - static_cast<double>(i);
  if (i + 1 >= e.path.size()) return e.path.back();
  return e.path[i] * (1.0 - w) + e.path[i + 1] * w;
}

double excursion_min(const ConditionedExcursion& e, double a, double b) {
  if (b < a) std::swap(a, b);
  double best = std::min(excursion_value(e, a), excursion_value(e, b));
  const size_t lo = static_cast<size_t>(std::ceil(std::max(a, 0.0) / e.dt));
  const size_t hi = static_cast<size_t>(std::floor(std::min(b, e.zeta) / e.dt));
  for (size_t i = lo; i <= hi && i < e.path.size(); ++i)
    best = std::min(best, e.path[i]);
  return best;
}

std::vector<double> excursion_distance_matrix(const ConditionedExcursion& e,
                                              const std::vector<double>& times,
                                              double height_scale) {
  const size_t k = times.size();
  std::vector<double> d(k * k, 0.0);
  for (size_t i = 0; i < k; ++i) {
    for (size_t j = i + 1; j < k; ++j) {
      const double vi = excursion_value(e, times[i]);
      const double vj = excursion_value(e, times[j]);
      const double m = excursion_min(e, times[i], times[j]);
      d[i * k + j] = d[j * k + i] = height_scale * (vi + vj - 2.0 * m);
    }
  }
  return d;
}

}  // namespace bdsim
