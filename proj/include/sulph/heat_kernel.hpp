#pragma once

// Gaussian heat kernel G(t,x) = (4 pi t)^{-1/2} exp(-x^2 / 4t), its spatial
// derivatives, and the half-line Dirichlet convolution
//
//   (Gbar(t) *_D f)(x) = int_0^inf [G(t, x-y) - G(t, x+y)] f(y) dy
//
// on a truncated uniform grid. Gridded data are read as piecewise-linear
// interpolants and integrated against the kernel in closed form, so the
// discrete operator is exact for piecewise-linear f, is positive, vanishes
// at x = 0 and stays accurate for any t > 0 (no restriction t >> dx^2).

#include <boost/math/quadrature/exp_sinh.hpp>

#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <span>
#include <vector>

#include "sulph/core.hpp"

namespace sulph {

namespace detail {
inline constexpr double inv_sqrt_pi = 0.56418958354775628694807945156077;  // 1/sqrt(pi)
inline constexpr double inv_sqrt_2pi = 0.39894228040143267793994605993438;
inline constexpr double inv_sqrt2 = 0.70710678118654752440084436210485;

inline void require_positive_time(double t) {
  require(std::isfinite(t) && t > 0.0, "heat kernel: t must be positive");
}

inline double std_normal_pdf(double w) { return inv_sqrt_2pi * std::exp(-0.5 * w * w); }

/// Phi(w1) - Phi(w0) for w0 <= w1, evaluated in the tail that keeps precision.
inline double gauss_mass(double w0, double w1) {
  if (w0 >= 0.0) return 0.5 * (std::erfc(w0 * inv_sqrt2) - std::erfc(w1 * inv_sqrt2));
  if (w1 <= 0.0) return 0.5 * (std::erfc(-w1 * inv_sqrt2) - std::erfc(-w0 * inv_sqrt2));
  return 1.0 - 0.5 * std::erfc(-w0 * inv_sqrt2) - 0.5 * std::erfc(w1 * inv_sqrt2);
}
}  // namespace detail

inline double eval_G(double t, double x) {
  detail::require_positive_time(t);
  return std::exp(-x * x / (4.0 * t)) / std::sqrt(4.0 * std::numbers::pi * t);
}

inline double eval_dxG(double t, double x) {
  detail::require_positive_time(t);
  return -0.25 * detail::inv_sqrt_pi * std::pow(t, -1.5) * x * std::exp(-x * x / (4.0 * t));
}

inline double eval_dxxG(double t, double x) {
  detail::require_positive_time(t);
  return 0.25 * detail::inv_sqrt_pi * (0.5 * x * x / t - 1.0) * std::pow(t, -1.5) * std::exp(-x * x / (4.0 * t));
}

namespace detail {
// Half-line L^p constants, one adaptive quadrature per exponent and thread.
inline double half_line_lp(double p, bool derivative) {
  thread_local std::map<std::pair<double, bool>, double> cache;
  const auto key = std::make_pair(p, derivative);
  if (auto it = cache.find(key); it != cache.end()) return it->second;
  boost::math::quadrature::exp_sinh<double> integrator;
  auto integrand = [p, derivative](double x) {
    const double v = derivative ? std::abs(eval_dxG(1.0, x)) : eval_G(1.0, x);
    return std::pow(v, p);
  };
  const double mass = integrator.integrate(integrand, 0.0, std::numeric_limits<double>::infinity());
  const double c = std::pow(mass, 1.0 / p);
  cache.emplace(key, c);
  return c;
}
}  // namespace detail

/// ||G(t,.)||_{L^p(R_+)} = c_p t^{-(1-1/p)/2}.
inline double lp_norm_G(double t, double p) {
  detail::require_positive_time(t);
  require(std::isfinite(p) && p >= 1.0, "lp_norm_G: p must be >= 1 and finite");
  return detail::half_line_lp(p, false) * std::pow(t, -(1.0 - 1.0 / p) / 2.0);
}

/// ||d_x G(t,.)||_{L^p(R_+)} = c'_p t^{-(2-1/p)/2}.
inline double lp_norm_dxG(double t, double p) {
  detail::require_positive_time(t);
  require(std::isfinite(p) && p >= 1.0, "lp_norm_dxG: p must be >= 1 and finite");
  return detail::half_line_lp(p, true) * std::pow(t, -(2.0 - 1.0 / p) / 2.0);
}

/// Truncation policy: exp(-L^2 / 4T) must be below 1e-12.
inline void assert_truncation(double L, double T) {
  require(std::exp(-L * L / (4.0 * T)) < 1e-12,
          "grid: truncation length L too short for horizon T (need exp(-L^2/4T) < 1e-12)");
}

namespace detail {
/// int_{y0}^{y1} G(t, c - y) (a + b y) dy.
inline double linear_moment(double t, double c, double y0, double y1, double a, double b) {
  const double s = std::sqrt(2.0 * t);
  const double w0 = (y0 - c) / s;
  const double w1 = (y1 - c) / s;
  return (a + b * c) * gauss_mass(w0, w1) + b * s * (std_normal_pdf(w0) - std_normal_pdf(w1));
}

/// d/dc of linear_moment.
inline double linear_moment_dc(double t, double c, double y0, double y1, double a, double b) {
  const double s = std::sqrt(2.0 * t);
  const double w0 = (y0 - c) / s;
  const double w1 = (y1 - c) / s;
  return std_normal_pdf(w0) / s * (a + b * y0) - std_normal_pdf(w1) / s * (a + b * y1) +
         b * gauss_mass(w0, w1);
}
}  // namespace detail

/// Discrete heat propagators on a uniform grid of [0, L]:
///   apply(f)      ~ Gbar(t) *_D f                  (Dirichlet, odd extension)
///   apply_dx(f)   ~ d_x (Gbar(t) *_D f)
///   apply_even(f) ~ G(t) * f^even restricted to the grid
/// Weights are the exact kernel moments against the hat basis; only the
/// band where the Gaussian exceeds ~1e-20 is stored.
class DirichletPropagator {
 public:
  DirichletPropagator(double t, double dx, std::size_t n) : t_(t), dx_(dx), n_(n) {
    detail::require_positive_time(t);
    require(dx > 0.0 && n >= 2, "DirichletPropagator: invalid grid");
    const double s = std::sqrt(2.0 * t);
    const double reach = dx + 9.5 * s;
    band_ = std::min<std::size_t>(2 * (n - 1), static_cast<std::size_t>(std::ceil(reach / dx)) + 1);
    const std::size_t width = 2 * band_ + 1;
    for (Tables* tab : {&values_, &derivs_}) {
      tab->full.resize(width);
      tab->right.resize(width);
      tab->left.resize(width);
    }
    for (std::size_t idx = 0; idx < width; ++idx) {
      const double c = (static_cast<double>(idx) - static_cast<double>(band_)) * dx;
      values_.right[idx] = detail::linear_moment(t, c, 0.0, dx, 1.0, -1.0 / dx);
      values_.left[idx] = detail::linear_moment(t, c, -dx, 0.0, 1.0, 1.0 / dx);
      values_.full[idx] = values_.right[idx] + values_.left[idx];
      derivs_.right[idx] = detail::linear_moment_dc(t, c, 0.0, dx, 1.0, -1.0 / dx);
      derivs_.left[idx] = detail::linear_moment_dc(t, c, -dx, 0.0, 1.0, 1.0 / dx);
      derivs_.full[idx] = derivs_.right[idx] + derivs_.left[idx];
    }
  }

  double time() const { return t_; }
  double spacing() const { return dx_; }
  std::size_t size() const { return n_; }
  std::size_t bandwidth() const { return band_; }

  std::vector<double> apply(std::span<const double> f) const { return run(f, values_, -1.0); }
  std::vector<double> apply_dx(std::span<const double> f) const { return run(f, derivs_, 1.0); }
  std::vector<double> apply_even(std::span<const double> f) const { return run(f, values_, 1.0); }

  /// out += scale * apply(f), out_dx += scale * apply_dx(f).
  void accumulate(std::span<const double> f, double scale, std::span<double> out, std::span<double> out_dx) const {
    require(f.size() == n_ && out.size() == n_ && out_dx.size() == n_, "DirichletPropagator: size mismatch");
    sweep(f, scale, out, values_, -1.0);
    sweep(f, scale, out_dx, derivs_, 1.0);
  }

 private:
  // Kernel moments against the full hat and the two half hats, indexed by
  // the offset (in units of dx) between target node and hat centre.
  struct Tables {
    std::vector<double> full, right, left;
  };

  std::vector<double> run(std::span<const double> f, const Tables& tab, double sign) const {
    require(f.size() == n_, "DirichletPropagator: size mismatch");
    std::vector<double> out(n_, 0.0);
    sweep(f, 1.0, out, tab, sign);
    return out;
  }

  // out_i += scale * sum_j f_j [T_j(i - j) + sign T_j(-(i + j))], where T_j is
  // the right half hat at j = 0, the left half hat at j = n-1 and the full hat
  // otherwise. Offsets outside the band carry no weight.
  void sweep(std::span<const double> f, double scale, std::span<double> out, const Tables& tab, double sign) const {
    const long n = static_cast<long>(n_);
    const long b = static_cast<long>(band_);
    const double* full = tab.full.data() + b;
    const double* right = tab.right.data() + b;
    const double* left = tab.left.data() + b;
    const long last = n - 1;
    for (long i = 0; i < n; ++i) {
      double acc = 0.0;
      const long lo = std::max(1L, i - b);
      const long hi = std::min(last - 1, i + b);
      const long split = std::min(hi, b - i);  // reflected offset inside the band up to here
      long j = lo;
      for (; j <= split; ++j) acc += f[j] * (full[i - j] + sign * full[-(i + j)]);
      for (; j <= hi; ++j) acc += f[j] * full[i - j];
      if (i <= b) acc += f[0] * (right[i] + sign * right[-i]);
      if (last - i <= b) acc += f[last] * (left[i - last] + (i + last <= b ? sign * left[-(i + last)] : 0.0));
      out[i] += scale * acc;
    }
  }

  double t_;
  double dx_;
  std::size_t n_;
  std::size_t band_ = 0;
  Tables values_;
  Tables derivs_;
};

/// Gbar(t) *_D f on a uniform grid of spacing dx starting at x = 0.
inline std::vector<double> dirichlet_convolve(double t, std::span<const double> f, double dx) {
  for (double v : f) require(std::isfinite(v), "dirichlet_convolve: non-finite input");
  return DirichletPropagator(t, dx, f.size()).apply(f);
}

/// G(t) * (df)^even, which equals d_x (Gbar(t) *_D f) whenever f(0) = 0.
inline std::vector<double> even_convolve_derivative(double t, std::span<const double> df, double dx) {
  for (double v : df) require(std::isfinite(v), "even_convolve_derivative: non-finite input");
  return DirichletPropagator(t, dx, df.size()).apply_even(df);
}

}  // namespace sulph
