#pragma once

#include <array>
#include <vector>

#include "bdsim/common.hpp"

namespace bdsim {

// Bounded domain with absorbing boundary: an interval or an axis-aligned box,
// carrying a constant diagonal diffusion coefficient per axis (generator
// (1/2) sum_i d_i(a_i d_i .)). Only these admit closed-form Dirichlet
// eigensystems, which is the contract of the spectral layer; anything else is
// rejected at construction.
class Domain {
 public:
  static Domain interval(double lo, double hi, double a = 1.0);
  static Domain box(const std::vector<std::array<double, 2>>& bounds,
                    std::vector<double> a = {});

  int dim() const { return dim_; }
  double lo(int axis) const { return lo_[static_cast<size_t>(axis)]; }
  double hi(int axis) const { return hi_[static_cast<size_t>(axis)]; }
  double length(int axis) const { return hi(axis) - lo(axis); }
  double coeff(int axis) const { return a_[static_cast<size_t>(axis)]; }
  double volume() const;

  bool contains(const Vec& x) const;
  // Distance to the nearest face (L-infinity style: min over axes/faces).
  double boundary_distance(const Vec& x) const;

 private:
  Domain() = default;
  int dim_ = 1;
  std::array<double, kMaxDim> lo_{}, hi_{}, a_{};
};

}  // namespace bdsim
