#pragma once

#include <array>
#include <functional>
#include <vector>

#include "bdsim/domain.hpp"
#include "bdsim/offspring.hpp"

namespace bdsim {

// Dirichlet eigenpair of -(1/2) sum_i d_i(a_i d_i .) on an interval/box,
// product of per-axis sine modes, normalized to unit L2 norm.
class EigenPair {
 public:
  EigenPair(const Domain& d, const std::array<int, kMaxDim>& mode);

  double lambda() const { return lambda_; }
  const Domain& domain() const { return dom_; }
  int mode(int axis) const { return mode_[static_cast<size_t>(axis)]; }

  double phi(const Vec& x) const;
  Vec grad_phi(const Vec& x) const;
  // d/dx_i log phi at coordinate xi (diverges at the faces); the h-transform
  // drift is a_i * dlog_phi(i, x_i) per axis.
  double dlog_phi(int axis, double xi) const;
  // sup_x phi = product of per-axis amplitudes (attained at the center).
  double sup() const;
  double sup_grad_norm() const;

 private:
  Domain dom_;
  std::array<int, kMaxDim> mode_{};
  std::array<double, kMaxDim> amp_{}, freq_{};  // phi_i = amp sin(freq (x-lo))
  double lambda_ = 0.0;
};

EigenPair first_eigenpair(const Domain& d);
// Eigenpairs ordered by increasing eigenvalue (ties broken lexicographically
// by mode index); `count` of them.
std::vector<EigenPair> lowest_eigenpairs(const Domain& d, int count);

struct SeriesValue {
  double value = 0.0;
  long terms = 0;
  double tail_bound = 0.0;
};

// Eigenseries evaluators for the killed semigroup. Truncation is driven by a
// geometric tail bound per axis; evaluation below t = 1e-6 is refused (the
// series is the wrong representation in the Gaussian regime).
class SpectralSeries {
 public:
  explicit SpectralSeries(const Domain& d, double tol = 1e-12, long term_cap = 100000);

  const Domain& domain() const { return dom_; }
  double lambda1() const { return lambda1_; }
  // Smallest nonzero distance lambda_n - lambda_1 (the spectral gap).
  double gap() const;

  // p_t(x, y) of the killed diffusion.
  SeriesValue heat_kernel(double t, const Vec& x, const Vec& y) const;
  // K_t(x,y) = e^{lambda_1 t} p_t(x,y) phi(y)/phi(x): the transition density
  // of the phi-conditioned (h-transform) diffusion.
  SeriesValue conditioned_kernel(double t, const Vec& x, const Vec& y) const;
  // Computable envelope for sup_y |K_t(x,y)/phi(y)^2 - 1|.
  double conditioned_kernel_bound(double t) const;
  // P^x(tau > t).
  SeriesValue survival(double t, const Vec& x) const;
  // P^x[phi^2(X_t) 1_{tau > t}]; continuous limit phi(x)^2 below t = 1e-6.
  SeriesValue expected_phi2(double t, const Vec& x) const;

 private:
  struct Axis {
    double lo, len, a, amp, c;  // c = a pi^2 / (2 len^2); lambda_n = c n^2
  };
  enum class Coeff { Point, One, PhiSq };
  SeriesValue axis_series(int axis, double t, double xi, Coeff family, double yi) const;
  SeriesValue product(double t, const Vec& x, Coeff family, const Vec* y) const;
  void check_t(double t) const;

  Domain dom_;
  std::array<Axis, kMaxDim> ax_{};
  double lambda1_ = 0.0;
  double tol_;
  long term_cap_;
};

// Moments of the ground state by adaptive quadrature (the spec'd
// implementation route; closed forms live in the tests as oracles).
double phi_moment(const Domain& d, int power, double abs_tol = 1e-10);
// (phi, f) over the domain; iterated adaptive quadrature across axes.
double phi_inner(const Domain& d, const std::function<double(const Vec&)>& f,
                 double abs_tol = 1e-10);

// The model's limit constants on a given domain/offspring pair.
struct ModelConstants {
  double lambda1 = 0.0;
  double mean_offspring = 0.0;
  double second_moment_offspring = 0.0;
  double beta_critical = 0.0;
  double int_phi = 0.0;      // (1, phi)
  double int_phi3 = 0.0;     // (1, phi^3)
  double b = 0.0;            // t P^x(survival) -> b phi(x)
  double sigma2 = 0.0;       // 2 / (b (1,phi)); exploration CLT variance
  double yaglom_mean_phi = 0.0;  // (phi,phi)/b = 1/b
  double phi_x0 = 0.0;           // ground state at the configured start point
};

ModelConstants model_constants(const Domain& d, const OffspringDistribution& off,
                               const Vec& x0);

// Yaglom limit mean for observable f: (phi, f) / b.
double yaglom_mean(const Domain& d, const ModelConstants& mc,
                   const std::function<double(const Vec&)>& f);

// Density of the quadratic variation of the exploration martingale:
// beta E(A-1)^2 phi^2 + sum_i a_i (d_i phi)^2.
double qv_integrand(const EigenPair& ep, double beta, double var_about_one,
                    const Vec& x);

// Moment routes used as the non-Monte-Carlo side of the dual checks.
// E^x |N_t| = e^{(m-1) beta t} P^x(tau > t).
double expected_count(const SpectralSeries& s, const OffspringDistribution& off,
                      double beta, double t, const Vec& x);
// E^x sum phi(X_u(t)) = e^{((m-1)beta - lambda_1) t} phi(x).
double expected_phi_sum(const SpectralSeries& s, const OffspringDistribution& off,
                        double beta, double t, const Vec& x);
// E^x (sum phi(X_u(t)))^2 via the pair-decomposition formula; the time
// integral is adaptive quadrature over the phi^2 eigenexpansion.
double second_moment_phi_sum(const SpectralSeries& s, const OffspringDistribution& off,
                             double beta, double t, const Vec& x);

}  // namespace bdsim
