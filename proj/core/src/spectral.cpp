#include "bdsim/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "bdsim/quadrature.hpp"

namespace bdsim {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kMinSeriesTime = 1e-6;
}  // namespace

EigenPair::EigenPair(const Domain& d, const std::array<int, kMaxDim>& mode)
    : dom_(d), mode_(mode) {
  for (int i = 0; i < d.dim(); ++i) {
    const int n = mode_[static_cast<size_t>(i)];
    if (n < 1) throw ConfigError("eigenmode indices are 1-based positive");
    const double len = d.length(i);
    amp_[static_cast<size_t>(i)] = std::sqrt(2.0 / len);
    freq_[static_cast<size_t>(i)] = n * kPi / len;
    lambda_ += 0.5 * d.coeff(i) * freq_[static_cast<size_t>(i)] *
               freq_[static_cast<size_t>(i)];
  }
}

double EigenPair::phi(const Vec& x) const {
  double p = 1.0;
  for (int i = 0; i < dom_.dim(); ++i)
    p *= amp_[static_cast<size_t>(i)] *
         std::sin(freq_[static_cast<size_t>(i)] * (x[i] - dom_.lo(i)));
  return p;
}

Vec EigenPair::grad_phi(const Vec& x) const {
  double s[kMaxDim], c[kMaxDim];
  for (int i = 0; i < dom_.dim(); ++i) {
    const double th = freq_[static_cast<size_t>(i)] * (x[i] - dom_.lo(i));
    s[i] = amp_[static_cast<size_t>(i)] * std::sin(th);
    c[i] = amp_[static_cast<size_t>(i)] * freq_[static_cast<size_t>(i)] * std::cos(th);
  }
  Vec g = x;
  for (int i = 0; i < dom_.dim(); ++i) {
    double p = c[i];
    for (int j = 0; j < dom_.dim(); ++j)
      if (j != i) p *= s[j];
    g[i] = p;
  }
  return g;
}

double EigenPair::dlog_phi(int axis, double xi) const {
  const double f = freq_[static_cast<size_t>(axis)];
  return f / std::tan(f * (xi - dom_.lo(axis)));
}

double EigenPair::sup() const {
  double p = 1.0;
  for (int i = 0; i < dom_.dim(); ++i) p *= amp_[static_cast<size_t>(i)];
  return p;
}

double EigenPair::sup_grad_norm() const {
  // |grad phi| <= sqrt(sum_i (amp_i freq_i prod_{j!=i} amp_j)^2).
  double sq = 0.0;
  for (int i = 0; i < dom_.dim(); ++i) {
    double p = freq_[static_cast<size_t>(i)];
    for (int j = 0; j < dom_.dim(); ++j) p *= amp_[static_cast<size_t>(j)];
    sq += p * p;
  }
  return std::sqrt(sq);
}

EigenPair first_eigenpair(const Domain& d) {
  std::array<int, kMaxDim> ones{};
  for (int i = 0; i < d.dim(); ++i) ones[static_cast<size_t>(i)] = 1;
  return {d, ones};
}

std::vector<EigenPair> lowest_eigenpairs(const Domain& d, int count) {
  if (count < 1) throw ConfigError("eigenpair count must be positive");
  // Enumerate a cube of mode indices comfortably past `count` in every axis,
  // then sort. Fine for the small counts this is meant for.
  const int per_axis = count + 1;
  std::vector<std::array<int, kMaxDim>> modes;
  std::array<int, kMaxDim> idx{};
  for (int i = 0; i < d.dim(); ++i) idx[static_cast<size_t>(i)] = 1;
  for (;;) {
    modes.push_back(idx);
    int axis = 0;
    while (axis < d.dim()) {
      if (++idx[static_cast<size_t>(axis)] <= per_axis) break;
      idx[static_cast<size_t>(axis)] = 1;
      ++axis;
    }
    if (axis == d.dim()) break;
  }
  std::vector<EigenPair> eps;
  eps.reserve(modes.size());
  for (const auto& m : modes) eps.emplace_back(d, m);
  std::stable_sort(eps.begin(), eps.end(), [&](const EigenPair& a, const EigenPair& b) {
    if (a.lambda() != b.lambda()) return a.lambda() < b.lambda();
    for (int i = 0; i < d.dim(); ++i)
      if (a.mode(i) != b.mode(i)) return a.mode(i) < b.mode(i);
    return false;
  });
  eps.erase(eps.begin() + count, eps.end());
  return eps;
}

SpectralSeries::SpectralSeries(const Domain& d, double tol, long term_cap)
    : dom_(d), tol_(tol), term_cap_(term_cap) {
  for (int i = 0; i < d.dim(); ++i) {
    Axis& a = ax_[static_cast<size_t>(i)];
    a.lo = d.lo(i);
    a.len = d.length(i);
    a.a = d.coeff(i);
    a.amp = std::sqrt(2.0 / a.len);
    a.c = a.a * kPi * kPi / (2.0 * a.len * a.len);
    lambda1_ += a.c;
  }
}

double SpectralSeries::gap() const {
  double g = std::numeric_limits<double>::infinity();
  for (int i = 0; i < dom_.dim(); ++i)
    g = std::min(g, 3.0 * ax_[static_cast<size_t>(i)].c);  // (2^2 - 1) c_i
  return g;
}

void SpectralSeries::check_t(double t) const {
  if (!(t >= kMinSeriesTime))
    throw ConfigError(
        "eigenseries evaluation refused below t = 1e-6: use the Gaussian "
        "short-time representation instead");
}

SeriesValue SpectralSeries::axis_series(int axis, double t, double xi,
                                        Coeff family, double yi) const {
  const Axis& a = ax_[static_cast<size_t>(axis)];
  const double u = xi - a.lo;
  SeriesValue out;
  double sum = 0.0;
  for (long n = 1;; ++n) {
    if (n > term_cap_) throw CapExceeded("eigenseries term cap exceeded");
    const double decay = std::exp(-a.c * static_cast<double>(n) * static_cast<double>(n) * t);
    const double phin = a.amp * std::sin(n * kPi * u / a.len);
    double coeff = 0.0;
    switch (family) {
      case Coeff::Point:
        coeff = a.amp * std::sin(n * kPi * (yi - a.lo) / a.len);
        break;
      case Coeff::One:
        coeff = (n % 2 == 1) ? a.amp * 2.0 * a.len / (n * kPi) : 0.0;
        break;
      case Coeff::PhiSq:
        // (phi_n, phi_1^2) on the axis: amp^3 (len/pi) * I_n with
        // I_1 = 4/3, I_n = -4/(n(n^2-4)) for odd n >= 3, 0 for even n.
        if (n % 2 == 1) {
          const double In = (n == 1) ? 4.0 / 3.0
                                     : -4.0 / (static_cast<double>(n) *
                                               (static_cast<double>(n) * n - 4.0));
          coeff = a.amp * a.amp * a.amp * (a.len / kPi) * In;
        } else {
          coeff = 0.0;
        }
        break;
    }
    sum += decay * phin * coeff;
    ++out.terms;
    // Geometric tail: sum_{k>n} e^{-c k^2 t} <= e^{-c(n+1)^2 t} / (1 - q).
    const double np = static_cast<double>(n + 1);
    double coeff_cap = 0.0;
    switch (family) {
      case Coeff::Point:
        coeff_cap = a.amp;
        break;
      case Coeff::One:
        coeff_cap = a.amp * 2.0 * a.len / (np * kPi);
        break;
      case Coeff::PhiSq: {
        // Coefficients vanish for even n, so cap by the next odd index >= 3.
        const double no = std::max(np, 3.0);
        coeff_cap = a.amp * a.amp * a.amp * (a.len / kPi) * 4.0 / (no * no * no - 4.0 * no);
        break;
      }
    }
    const double q = std::exp(-2.0 * a.c * np * t);
    const double tail = a.amp * coeff_cap * std::exp(-a.c * np * np * t) / (1.0 - q);
    if (tail <= tol_) {
      out.tail_bound = tail;
      break;
    }
  }
  out.value = sum;
  return out;
}

SeriesValue SpectralSeries::product(double t, const Vec& x, Coeff family,
                                    const Vec* y) const {
  SeriesValue out;
  double axis_vals[kMaxDim], axis_tails[kMaxDim];
  for (int i = 0; i < dom_.dim(); ++i) {
    const SeriesValue sv =
        axis_series(i, t, x[i], family, y ? (*y)[i] : 0.0);
    axis_vals[i] = sv.value;
    axis_tails[i] = sv.tail_bound;
    out.terms += sv.terms;
  }
  double prod = 1.0;
  for (int i = 0; i < dom_.dim(); ++i) prod *= axis_vals[i];
  out.value = prod;
  // First-order propagation of per-axis tails through the product.
  double tail = 0.0;
  for (int i = 0; i < dom_.dim(); ++i) {
    double rest = 1.0;
    for (int j = 0; j < dom_.dim(); ++j)
      if (j != i) rest *= std::abs(axis_vals[j]) + axis_tails[j];
    tail += axis_tails[i] * rest;
  }
  out.tail_bound = tail;
  return out;
}

SeriesValue SpectralSeries::heat_kernel(double t, const Vec& x, const Vec& y) const {
  check_t(t);
  if (!dom_.contains(x) || !dom_.contains(y)) return {0.0, 0, 0.0};
  return product(t, x, Coeff::Point, &y);
}

SeriesValue SpectralSeries::conditioned_kernel(double t, const Vec& x,
                                               const Vec& y) const {
  check_t(t);
  if (!dom_.contains(x)) throw ConfigError("conditioned kernel: x outside domain");
  const EigenPair ep = first_eigenpair(dom_);
  SeriesValue sv = heat_kernel(t, x, y);
  const double scale = std::exp(lambda1_ * t) / ep.phi(x);
  const double phiy = dom_.contains(y) ? ep.phi(y) : 0.0;
  sv.value *= scale * phiy;
  sv.tail_bound *= scale * std::abs(phiy);
  return sv;
}

double SpectralSeries::conditioned_kernel_bound(double t) const {
  check_t(t);
  // |K_t(x,y)/phi(y)^2 - 1| = |prod_i (1 + R_i) - 1| with per-axis remainder
  // R_i = sum_{n>=2} e^{-(n^2-1) c_i t} s_n(x) s_n(y) / (s_1(x) s_1(y)) and
  // |sin(n th)/sin(th)| <= n, so |R_i| <= sum_{n>=2} n^2 e^{-(n^2-1) c_i t}.
  double bounds[kMaxDim];
  for (int i = 0; i < dom_.dim(); ++i) {
    const Axis& a = ax_[static_cast<size_t>(i)];
    double r = 0.0;
    long n = 2;
    for (;; ++n) {
      if (n > term_cap_) throw CapExceeded("eigenseries term cap exceeded");
      const double nn = static_cast<double>(n);
      r += nn * nn * std::exp(-(nn * nn - 1.0) * a.c * t);
      const double np = nn + 1.0;
      const double q = std::exp(-2.0 * a.c * np * t);
      // sum_{j>=0} (np+j)^2 q^j <= np^2 (1+q)/(1-q)^3 (since (1+j/np)^2 <= (1+j)^2).
      const double tail = np * np * std::exp(-(np * np - 1.0) * a.c * t) *
                          (1.0 + q) / ((1.0 - q) * (1.0 - q) * (1.0 - q));
      if (tail <= tol_) {
        r += tail;
        break;
      }
    }
    bounds[i] = r;
  }
  double prod = 1.0;
  for (int i = 0; i < dom_.dim(); ++i) prod *= 1.0 + bounds[i];
  return prod - 1.0;
}

SeriesValue SpectralSeries::survival(double t, const Vec& x) const {
  check_t(t);
  if (!dom_.contains(x)) return {0.0, 0, 0.0};
  return product(t, x, Coeff::One, nullptr);
}

SeriesValue SpectralSeries::expected_phi2(double t, const Vec& x) const {
  if (!dom_.contains(x)) return {0.0, 0, 0.0};
  if (t < kMinSeriesTime) {
    // Continuous limit; the O(t) error is below any tolerance this feeds.
    const double p = first_eigenpair(dom_).phi(x);
    return {p * p, 0, 0.0};
  }
  return product(t, x, Coeff::PhiSq, nullptr);
}

double phi_moment(const Domain& d, int power, double abs_tol) {
  // prod_i int (amp_i sin)^p over each axis.
  double out = 1.0;
  for (int i = 0; i < d.dim(); ++i) {
    const double amp = std::sqrt(2.0 / d.length(i));
    const double w = kPi / d.length(i);
    const double lo = d.lo(i);
    out *= integrate(
        [&](double x) { return std::pow(amp * std::sin(w * (x - lo)), power); },
        d.lo(i), d.hi(i), abs_tol);
  }
  return out;
}

double phi_inner(const Domain& d, const std::function<double(const Vec&)>& f,
                 double abs_tol) {
  const EigenPair ep = first_eigenpair(d);
  std::function<double(Vec&, int, double)> rec = [&](Vec& x, int axis,
                                                     double tol) -> double {
    return integrate(
        [&](double xi) {
          x[axis] = xi;
          if (axis + 1 == d.dim()) return ep.phi(x) * f(x);
          return rec(x, axis + 1, tol / d.length(axis));
        },
        d.lo(axis), d.hi(axis), tol);
  };
  Vec x;
  x.dim = d.dim();
  return rec(x, 0, abs_tol);
}

ModelConstants model_constants(const Domain& d, const OffspringDistribution& off,
                               const Vec& x0) {
  ModelConstants mc;
  const EigenPair ep = first_eigenpair(d);
  mc.lambda1 = ep.lambda();
  mc.mean_offspring = off.mean();
  mc.second_moment_offspring = off.second_moment();
  mc.beta_critical = critical_beta(mc.lambda1, mc.mean_offspring);
  mc.int_phi = phi_moment(d, 1);
  mc.int_phi3 = phi_moment(d, 3);
  const double varA = mc.second_moment_offspring - mc.mean_offspring;
  mc.b = 2.0 * (mc.mean_offspring - 1.0) / (mc.lambda1 * mc.int_phi3 * varA);
  mc.sigma2 = 2.0 / (mc.b * mc.int_phi);
  mc.yaglom_mean_phi = 1.0 / mc.b;
  mc.phi_x0 = ep.phi(x0);
  return mc;
}

double yaglom_mean(const Domain& d, const ModelConstants& mc,
                   const std::function<double(const Vec&)>& f) {
  return phi_inner(d, f) / mc.b;
}

double qv_integrand(const EigenPair& ep, double beta, double var_about_one,
                    const Vec& x) {
  const double p = ep.phi(x);
  const Vec g = ep.grad_phi(x);
  double quad_form = 0.0;
  for (int i = 0; i < ep.domain().dim(); ++i)
    quad_form += ep.domain().coeff(i) * g[i] * g[i];
  return beta * var_about_one * p * p + quad_form;
}

double expected_count(const SpectralSeries& s, const OffspringDistribution& off,
                      double beta, double t, const Vec& x) {
  return std::exp((off.mean() - 1.0) * beta * t) * s.survival(t, x).value;
}

double expected_phi_sum(const SpectralSeries& s, const OffspringDistribution& off,
                        double beta, double t, const Vec& x) {
  const EigenPair ep = first_eigenpair(s.domain());
  return std::exp(((off.mean() - 1.0) * beta - s.lambda1()) * t) * ep.phi(x);
}

double second_moment_phi_sum(const SpectralSeries& s, const OffspringDistribution& off,
                             double beta, double t, const Vec& x) {
  const double r = (off.mean() - 1.0) * beta;
  const double lam = s.lambda1();
  const double varA = off.second_moment() - off.mean();
  const double single = std::exp(r * t) * s.expected_phi2(t, x).value;
  const double pair =
      beta * varA *
      integrate(
          [&](double u) {
            return std::exp(r * (2.0 * t - u) - 2.0 * lam * (t - u)) *
                   s.expected_phi2(u, x).value;
          },
          0.0, t, 1e-9);
  return single + pair;
}

}  // namespace bdsim
