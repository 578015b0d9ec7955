#include "bdsim/domain.hpp"

#include <algorithm>
#include <cmath>

namespace bdsim {

Domain Domain::interval(double lo, double hi, double a) {
  return box({{{lo, hi}}}, {a});
}

Domain Domain::box(const std::vector<std::array<double, 2>>& bounds,
                   std::vector<double> a) {
  Domain d;
  if (bounds.empty() || bounds.size() > kMaxDim)
    throw ConfigError("domain dimension must be 1..3");
  d.dim_ = static_cast<int>(bounds.size());
  if (a.empty()) a.assign(bounds.size(), 1.0);
  if (a.size() != bounds.size())
    throw ConfigError("diffusion coefficient count must match dimension");
  for (size_t i = 0; i < bounds.size(); ++i) {
    if (!(bounds[i][0] < bounds[i][1]) || !std::isfinite(bounds[i][0]) ||
        !std::isfinite(bounds[i][1]))
      throw ConfigError("domain bounds must be finite with lo < hi");
    if (!(a[i] > 0.0) || !std::isfinite(a[i]))
      throw ConfigError("diffusion coefficients must be positive (diagonal SPD)");
    d.lo_[i] = bounds[i][0];
    d.hi_[i] = bounds[i][1];
    d.a_[i] = a[i];
  }
  return d;
}

double Domain::volume() const {
  double v = 1.0;
  for (int i = 0; i < dim_; ++i) v *= length(i);
  return v;
}

bool Domain::contains(const Vec& x) const {
  if (x.dim != dim_) return false;
  for (int i = 0; i < dim_; ++i)
    if (!(x[i] > lo(i) && x[i] < hi(i))) return false;
  return true;
}

double Domain::boundary_distance(const Vec& x) const {
  double d = std::numeric_limits<double>::infinity();
  for (int i = 0; i < dim_; ++i)
    d = std::min({d, x[i] - lo(i), hi(i) - x[i]});
  return d;
}

}  // namespace bdsim
