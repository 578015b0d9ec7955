#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace bdsim {

// Domains are low-dimensional by construction (closed-form eigensystems only).
inline constexpr int kMaxDim = 3;

// Fixed-capacity point. Kept POD-small: path samples store millions of these.
struct Vec {
  std::array<double, kMaxDim> c{};
  int dim = 1;

  Vec() = default;
  explicit Vec(double x) : c{{x, 0.0, 0.0}}, dim(1) {}
  Vec(double x, double y) : c{{x, y, 0.0}}, dim(2) {}
  Vec(double x, double y, double z) : c{{x, y, z}}, dim(3) {}

  double& operator[](int i) { return c[static_cast<size_t>(i)]; }
  double operator[](int i) const { return c[static_cast<size_t>(i)]; }

  bool operator==(const Vec& o) const {
    if (dim != o.dim) return false;
    for (int i = 0; i < dim; ++i)
      if (c[static_cast<size_t>(i)] != o.c[static_cast<size_t>(i)]) return false;
    return true;
  }
};

inline Vec lerp(const Vec& a, const Vec& b, double w) {
  Vec r = a;
  for (int i = 0; i < a.dim; ++i) r[i] = a[i] + w * (b[i] - a[i]);
  return r;
}

// Invalid configuration / malformed input. CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// A hard resource cap was exceeded (particle count, substeps, series terms,
// quadrature segments, excursion horizon). CLI maps this to exit code 3.
class CapExceeded : public std::runtime_error {
 public:
  explicit CapExceeded(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace bdsim
