#pragma once

// Mean-reverting Jacobi boundary process
//
//   dpsi = alpha (gamma - psi) dt + sigma sqrt(psi (eta - psi)) dW,
//
// its Feller boundary classification, stationary Beta moments, and a
// bound-preserving Euler sampler driven by counter-based Gaussian
// increments.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "sulph/core.hpp"

namespace sulph {

struct JacobiParams {
  double alpha = 1.0;        // mean-reversion rate
  double gamma_level = 0.5;  // mean-reversion level, <= eta
  double sigma = 1.0;        // noise amplitude (0 gives the deterministic relaxation)
  double eta = 1.0;          // upper barrier
  double psi0 = 0.0;         // initial value in [0, eta]

  /// Left Beta shape 2 alpha gamma / (sigma^2 eta).
  double p() const { return 2.0 * alpha * gamma_level / (sigma * sigma * eta); }
  /// Right Beta shape 2 alpha (eta - gamma) / (sigma^2 eta).
  double q() const { return 2.0 * alpha * (eta - gamma_level) / (sigma * sigma * eta); }

  void validate() const {
    require(std::isfinite(alpha) && alpha > 0.0, "jacobi: alpha must be positive");
    require(std::isfinite(sigma) && sigma >= 0.0, "jacobi: sigma must be nonnegative");
    require(std::isfinite(eta) && eta > 0.0, "jacobi: eta must be positive");
    require(std::isfinite(gamma_level) && gamma_level >= 0.0 && gamma_level <= eta,
            "jacobi: gamma must lie in [0, eta]");
    require(std::isfinite(psi0) && psi0 >= 0.0 && psi0 <= eta, "jacobi: psi0 must lie in [0, eta]");
  }
};

/// Sampled boundary signal on a time grid starting at 0.
struct BoundaryPath {
  std::vector<double> times;
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  double horizon() const { return times.back(); }
  double dt() const { return times[1] - times[0]; }

  double sup_abs() const {
    double m = 0.0;
    for (double v : values) m = std::max(m, std::abs(v));
    return m;
  }
  double min() const { return *std::min_element(values.begin(), values.end()); }
  double max() const { return *std::max_element(values.begin(), values.end()); }

  void validate() const {
    require(times.size() == values.size(), "path: times and values differ in length");
    require(times.size() >= 2, "path: at least two nodes required");
    require(times.front() == 0.0, "path: first node must be t = 0");
    for (std::size_t k = 1; k < times.size(); ++k)
      require(times[k] > times[k - 1], "path: time grid must be strictly increasing");
    for (double v : values) require(std::isfinite(v), "path: non-finite value");
  }

  bool is_uniform(double rel_tol = 1e-9) const {
    const double h = horizon() / static_cast<double>(times.size() - 1);
    for (std::size_t k = 0; k < times.size(); ++k)
      if (std::abs(times[k] - h * static_cast<double>(k)) > rel_tol * horizon()) return false;
    return true;
  }

  BoundaryPath scaled(double a) const {
    BoundaryPath out = *this;
    for (double& v : out.values) v *= a;
    return out;
  }
};

struct BoundaryClassification {
  double p = 0.0;
  double q = 0.0;
  bool left_entrance = false;   // p >= 1
  bool right_entrance = false;  // q >= 1

  /// Both endpoints unattainable: paths stay inside (0, eta).
  bool feller() const { return left_entrance && right_entrance; }
};

inline BoundaryClassification feller_classify(const JacobiParams& params) {
  require(std::isfinite(params.sigma) && params.sigma > 0.0, "feller_classify: sigma must be positive");
  require(std::isfinite(params.eta) && params.eta > 0.0, "feller_classify: eta must be positive");
  BoundaryClassification c;
  c.p = params.p();
  c.q = params.q();
  c.left_entrance = c.p >= 1.0;
  c.right_entrance = c.q >= 1.0;
  return c;
}

struct Moments {
  double mean = 0.0;
  double variance = 0.0;
};

/// Moments of the stationary law eta * Beta(p, q).
inline Moments stationary_moments(const JacobiParams& params) {
  const double p = params.p();
  const double q = params.q();
  require(std::isfinite(p) && std::isfinite(q) && p > 0.0 && q > 0.0,
          "stationary_moments: shapes must be finite and positive");
  const double s = p + q;
  return {params.eta * p / s, params.eta * params.eta * p * q / (s * s * (s + 1.0))};
}

// --- counter-based Gaussian stream -----------------------------------------

namespace rng {

inline constexpr std::uint64_t splitmix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Uniform in (0,1) keyed by (seed, counter).
inline double uniform(std::uint64_t seed, std::uint64_t counter) {
  const std::uint64_t h = splitmix(splitmix(seed) ^ splitmix(counter ^ 0xd1b54a32d192ed03ULL));
  return (static_cast<double>(h >> 11) + 0.5) * 0x1.0p-53;
}

/// Standard normal keyed by (seed, index), Box-Muller on two keyed uniforms.
inline double normal(std::uint64_t seed, std::uint64_t index) {
  const double u1 = uniform(seed, 2 * index);
  const double u2 = uniform(seed, 2 * index + 1);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

/// Independent seed for ensemble member `member` of a run seeded with `seed`.
inline std::uint64_t member_seed(std::uint64_t seed, std::uint64_t member) {
  return splitmix(seed ^ splitmix(member + 0x632be59bd9b4e019ULL));
}

}  // namespace rng

/// Brownian increments dW_k = sqrt(dt) Z(seed, k), k = 0..n_steps-1.
inline std::vector<double> brownian_increments(std::uint64_t seed, std::size_t n_steps, double dt) {
  std::vector<double> dw(n_steps);
  const double sdt = std::sqrt(dt);
  for (std::size_t k = 0; k < n_steps; ++k) dw[k] = sdt * rng::normal(seed, k);
  return dw;
}

/// Increments of the same Brownian path on a grid `factor` times coarser.
inline std::vector<double> coarsen_increments(std::span<const double> fine, std::size_t factor) {
  require(factor >= 1 && fine.size() % factor == 0, "coarsen_increments: size not divisible by factor");
  std::vector<double> out(fine.size() / factor, 0.0);
  for (std::size_t k = 0; k < fine.size(); ++k) out[k / factor] += fine[k];
  return out;
}

enum class Scheme {
  FullTruncation,  // unclamped internal state, coefficients at the clamped value
  ClampedEuler,    // Euler-Maruyama step projected back onto [0, eta]
};

inline Scheme parse_scheme(const std::string& s) {
  if (s == "full_truncation" || s == "full-truncation") return Scheme::FullTruncation;
  if (s == "clamped" || s == "clamped_euler" || s == "clamped-euler") return Scheme::ClampedEuler;
  throw ValidationError("unknown Jacobi scheme '" + s + "'");
}

inline void check_uniform_grid(std::span<const double> times) {
  require(times.size() >= 2, "sample_path: grid needs at least two nodes");
  require(times.front() == 0.0, "sample_path: grid must start at 0");
  const double T = times.back();
  require(T > 0.0, "sample_path: grid horizon must be positive");
  const double h = T / static_cast<double>(times.size() - 1);
  for (std::size_t k = 0; k < times.size(); ++k)
    require(std::abs(times[k] - h * static_cast<double>(k)) <= 1e-9 * T, "sample_path: grid is not uniform");
}

/// Euler path on `times` driven by the given increments (one per step).
inline BoundaryPath sample_path_with_increments(const JacobiParams& params, std::span<const double> times,
                                                std::span<const double> dw, Scheme scheme) {
  params.validate();
  check_uniform_grid(times);
  require(dw.size() + 1 == times.size(), "sample_path: one increment per step required");

  const double dt = times.back() / static_cast<double>(times.size() - 1);
  const double eta = params.eta;
  auto clamp = [eta](double v) { return std::clamp(v, 0.0, eta); };

  BoundaryPath path;
  path.times.assign(times.begin(), times.end());
  path.values.resize(times.size());
  path.values[0] = params.psi0;

  double state = params.psi0;
  for (std::size_t k = 0; k < dw.size(); ++k) {
    const double y = clamp(state);
    const double drift = params.alpha * (params.gamma_level - y);
    const double diffusion = params.sigma * std::sqrt(y * (eta - y));
    switch (scheme) {
      case Scheme::FullTruncation:
        state = state + drift * dt + diffusion * dw[k];
        break;
      case Scheme::ClampedEuler:
        state = clamp(y + drift * dt + diffusion * dw[k]);
        break;
    }
    path.values[k + 1] = clamp(state);
  }
  return path;
}

inline BoundaryPath sample_path(const JacobiParams& params, std::span<const double> times, std::uint64_t seed,
                                Scheme scheme = Scheme::FullTruncation) {
  check_uniform_grid(times);
  const double dt = times.back() / static_cast<double>(times.size() - 1);
  const auto dw = brownian_increments(seed, times.size() - 1, dt);
  return sample_path_with_increments(params, times, dw, scheme);
}

inline BoundaryPath sample_path(const JacobiParams& params, double T, std::size_t n_t, std::uint64_t seed,
                                Scheme scheme = Scheme::FullTruncation) {
  const auto times = uniform_nodes(T, n_t);
  return sample_path(params, times, seed, scheme);
}

/// The same Brownian path sampled on an n_t grid and on its 2x refinement.
struct PathPair {
  BoundaryPath coarse;
  BoundaryPath fine;
};

inline PathPair sample_refinement_pair(const JacobiParams& params, double T, std::size_t n_t, std::uint64_t seed,
                                       Scheme scheme = Scheme::FullTruncation) {
  const std::size_t n_fine = 2 * n_t - 1;
  const auto fine_times = uniform_nodes(T, n_fine);
  const auto dw_fine = brownian_increments(seed, n_fine - 1, T / static_cast<double>(n_fine - 1));
  const auto dw_coarse = coarsen_increments(dw_fine, 2);
  return {sample_path_with_increments(params, uniform_nodes(T, n_t), dw_coarse, scheme),
          sample_path_with_increments(params, fine_times, dw_fine, scheme)};
}

/// Deterministic boundary profiles used by scenarios and tests.
template <class Fn>
BoundaryPath path_from_function(double T, std::size_t n_t, Fn&& fn) {
  BoundaryPath p;
  p.times = uniform_nodes(T, n_t);
  p.values.resize(n_t);
  for (std::size_t k = 0; k < n_t; ++k) p.values[k] = fn(p.times[k]);
  return p;
}

}  // namespace sulph
