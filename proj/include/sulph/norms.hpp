#pragma once

// Grid estimators for the norms appearing in the regularity bounds:
// Hoelder C^beta of a time path, L^p and W^{1,p} of a space slice, and the
// Gagliardo W^{alpha,p} seminorm. Grid maxima are lower bounds of the
// continuum quantities.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sulph/core.hpp"
#include "sulph/jacobi.hpp"

namespace sulph {

enum class NormKind { Holder, Lp, Sobolev, Gagliardo };

inline const char* to_string(NormKind k) {
  switch (k) {
    case NormKind::Holder: return "holder";
    case NormKind::Lp: return "lp";
    case NormKind::Sobolev: return "sobolev";
    case NormKind::Gagliardo: return "gagliardo";
  }
  return "?";
}

struct NormReport {
  NormKind kind = NormKind::Lp;
  std::vector<double> parameters;  // beta | p | (order, p) | (alpha, p)
  double value = 0.0;
  // Gagliardo only: relative change when the slice is coarsened by 2.
  std::optional<double> sensitivity;
};

namespace detail {
// Largest pairwise count evaluated exhaustively; beyond it lags are
// stratified (all short lags, then geometrically spaced ones).
inline constexpr std::size_t holder_exact_limit = 10000;

inline std::vector<std::size_t> holder_lags(std::size_t n) {
  std::vector<std::size_t> lags;
  if (n <= holder_exact_limit) {
    for (std::size_t l = 1; l < n; ++l) lags.push_back(l);
    return lags;
  }
  for (std::size_t l = 1; l <= 2048 && l < n; ++l) lags.push_back(l);
  double l = 2048.0;
  while (true) {
    l *= 1.005;
    const auto li = static_cast<std::size_t>(l);
    if (li >= n) break;
    if (li != lags.back()) lags.push_back(li);
  }
  if (lags.back() != n - 1) lags.push_back(n - 1);
  return lags;
}
}  // namespace detail

/// sup_{s != t} |psi(t) - psi(s)| / |t - s|^beta over grid pairs.
inline double holder_seminorm(const BoundaryPath& path, double beta) {
  require(beta > 0.0 && beta <= 1.0, "holder_norm: beta must lie in (0, 1]");
  const std::size_t n = path.size();
  double best = 0.0;
  if (path.is_uniform()) {
    const double h = path.horizon() / static_cast<double>(n - 1);
    for (std::size_t lag : detail::holder_lags(n)) {
      double m = 0.0;
      for (std::size_t i = 0; i + lag < n; ++i) m = std::max(m, std::abs(path.values[i + lag] - path.values[i]));
      best = std::max(best, m * std::pow(h * static_cast<double>(lag), -beta));
    }
    return best;
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      best = std::max(best, std::abs(path.values[j] - path.values[i]) /
                                std::pow(path.times[j] - path.times[i], beta));
  return best;
}

/// ||psi||_{C^beta} = sup |psi| + Hoelder seminorm.
inline NormReport holder_norm(const BoundaryPath& path, double beta) {
  require(beta > 0.0 && beta <= 1.0, "holder_norm: beta must lie in (0, 1]");
  return {NormKind::Holder, {beta}, path.sup_abs() + holder_seminorm(path, beta), std::nullopt};
}

/// Slope of log median |psi(t+h) - psi(t)| against log h over dyadic lags.
/// Empty when the path is constant at some lag (exponent undefined).
inline std::optional<double> holder_exponent_estimate(const BoundaryPath& path) {
  const std::size_t n = path.size();
  require(n >= 64, "holder_exponent_estimate: at least 64 nodes required");
  std::vector<double> log_h, log_m;
  const double h = path.horizon() / static_cast<double>(n - 1);
  std::vector<double> inc;
  for (std::size_t lag = 1; lag <= (n - 1) / 8; lag *= 2) {
    inc.clear();
    for (std::size_t i = 0; i + lag < n; ++i) inc.push_back(std::abs(path.values[i + lag] - path.values[i]));
    auto mid = inc.begin() + static_cast<std::ptrdiff_t>(inc.size() / 2);
    std::nth_element(inc.begin(), mid, inc.end());
    if (!(*mid > 0.0)) return std::nullopt;
    log_h.push_back(std::log(h * static_cast<double>(lag)));
    log_m.push_back(std::log(*mid));
  }
  const double k = static_cast<double>(log_h.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < log_h.size(); ++i) {
    sx += log_h[i];
    sy += log_m[i];
    sxx += log_h[i] * log_h[i];
    sxy += log_h[i] * log_m[i];
  }
  return (k * sxy - sx * sy) / (k * sxx - sx * sx);
}

/// Trapezoid L^p norm of a slice; p = infinity gives the grid maximum.
inline double lp_norm(std::span<const double> f, double dx, double p) {
  require(p >= 1.0, "lp_norm: p must be >= 1");
  if (std::isinf(p)) {
    double m = 0.0;
    for (double v : f) m = std::max(m, std::abs(v));
    return m;
  }
  if (p == 2.0) return std::sqrt(trapezoid_map(f, dx, [](double v) { return v * v; }));
  return std::pow(trapezoid_map(f, dx, [p](double v) { return std::pow(std::abs(v), p); }), 1.0 / p);
}

/// ||f||_{W^{order,p}} with ||f||^p = ||f||_p^p + ||f'||_p^p for order 1
/// (maximum of the two for p = infinity). Derivative by centered differences.
inline NormReport sobolev_norm(std::span<const double> slice, double dx, double p, int order) {
  require(p >= 1.0, "sobolev_norm: p must lie in [1, inf]");
  require(order == 0 || order == 1, "sobolev_norm: order must be 0 or 1");
  for (double v : slice) require(std::isfinite(v), "sobolev_norm: non-finite slice");
  const double base = lp_norm(slice, dx, p);
  double value = base;
  if (order == 1) {
    const auto d = centered_derivative(slice, dx);
    const double dn = lp_norm(d, dx, p);
    value = std::isinf(p) ? std::max(base, dn) : std::pow(std::pow(base, p) + std::pow(dn, p), 1.0 / p);
  }
  return {order == 0 ? NormKind::Lp : NormKind::Sobolev, {static_cast<double>(order), p}, value, std::nullopt};
}

/// W^{1,p} norm from a slice and a separately known derivative.
inline double sobolev_norm_with_derivative(std::span<const double> f, std::span<const double> df, double dx,
                                           double p) {
  const double a = lp_norm(f, dx, p);
  const double b = lp_norm(df, dx, p);
  return std::isinf(p) ? std::max(a, b) : std::pow(std::pow(a, p) + std::pow(b, p), 1.0 / p);
}

namespace detail {
inline double gagliardo_value(std::span<const double> f, double dx, double alpha, double p) {
  const std::size_t n = f.size();
  const double expo = 1.0 + alpha * p;
  std::vector<double> lag_weight(n, 0.0);
  for (std::size_t l = 1; l < n; ++l) lag_weight[l] = std::pow(dx * static_cast<double>(l), -expo);
  auto w = [n, dx](std::size_t i) { return (i == 0 || i + 1 == n) ? 0.5 * dx : dx; };
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = std::abs(f[i] - f[j]);
      const double dp = p == 2.0 ? d * d : std::pow(d, p);
      acc += w(i) * w(j) * dp * lag_weight[j - i];
    }
  return std::pow(2.0 * acc, 1.0 / p);
}
}  // namespace detail

/// Gagliardo seminorm [f]_{W^{alpha,p}} on the truncated square, diagonal
/// cells excluded. `sensitivity` holds the relative change against the same
/// estimate on every second node.
inline NormReport gagliardo_seminorm(std::span<const double> slice, double dx, double alpha, double p) {
  require(p >= 1.0 && std::isfinite(p), "gagliardo_seminorm: p must be finite and >= 1");
  require(alpha > 0.0 && alpha * p < p, "gagliardo_seminorm: alpha must lie in (0, 1)");
  for (double v : slice) require(std::isfinite(v), "gagliardo_seminorm: non-finite slice");
  const double value = detail::gagliardo_value(slice, dx, alpha, p);
  std::optional<double> sens;
  if (slice.size() >= 5) {
    std::vector<double> coarse;
    for (std::size_t i = 0; i < slice.size(); i += 2) coarse.push_back(slice[i]);
    const double cv = detail::gagliardo_value(coarse, 2.0 * dx, alpha, p);
    sens = value > 0.0 ? std::abs(value - cv) / value : 0.0;
  }
  return {NormKind::Gagliardo, {alpha, p}, value, sens};
}

/// ||f||_{W^{alpha,p}} = (||f||_p^p + [f]^p)^{1/p}.
inline double fractional_sobolev_norm(std::span<const double> slice, double dx, double alpha, double p) {
  const double a = lp_norm(slice, dx, p);
  const double b = gagliardo_seminorm(slice, dx, alpha, p).value;
  return std::pow(std::pow(a, p) + std::pow(b, p), 1.0 / p);
}

}  // namespace sulph
