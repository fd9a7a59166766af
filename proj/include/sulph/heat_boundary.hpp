#pragma once

// Heat equation on the half-line with zero initial datum and Dirichlet
// datum psi:
//
//   u(t,x) = -2 int_0^t d_x G(t - tau, x) psi(tau) dtau
//          =    int_0^t K(s,x) psi(t - s) ds,   K = x s^{-3/2} e^{-x^2/4s} / (2 sqrt(pi)).
//
// psi is read as the piecewise-linear interpolant of its samples and each
// time cell is integrated against K in closed form, which removes the
// s^{-3/2} endpoint singularity exactly. With this representation u is
// linear in psi, positive for positive psi and bounded by sup|psi|.
// The weights depend only on the lag, so one table serves every path.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "sulph/core.hpp"
#include "sulph/heat_kernel.hpp"
#include "sulph/jacobi.hpp"
#include "sulph/norms.hpp"

namespace sulph {

namespace detail {

/// erfc(a) - erfc(b) for 0 <= a <= b, through erf when both are small.
inline double erfc_diff(double a, double b) {
  if (a > 0.5) return std::erfc(a) - std::erfc(b);
  return std::erf(b) - std::erf(a);
}

// Antiderivatives in s of the heat-layer kernels at fixed x > 0 (z = x / 2 sqrt(s)).
//   K(s,x)        = -2 d_x G(s,x):   Q0 = erfc(z),   Q1 = int K s ds
//   d_x K(s,x):                     dQ0 = d_x Q0,   dQ1 = d_x Q1
inline double layer_Q1(double s, double x) {
  if (s <= 0.0) return 0.0;
  const double z = x / (2.0 * std::sqrt(s));
  return x * inv_sqrt_pi * std::sqrt(s) * std::exp(-z * z) - 0.5 * x * x * std::erfc(z);
}
inline double layer_dQ0(double s, double x) {
  if (s <= 0.0) return 0.0;
  const double z = x / (2.0 * std::sqrt(s));
  return -inv_sqrt_pi / std::sqrt(s) * std::exp(-z * z);
}
inline double layer_dQ1(double s, double x) {
  if (s <= 0.0) return 0.0;
  const double z = x / (2.0 * std::sqrt(s));
  return inv_sqrt_pi * std::sqrt(s) * std::exp(-z * z) - x * std::erfc(z);
}

// Antiderivatives in s of G(s,x): P0 = int G ds, P1 = int G s ds.
inline double kernel_P0(double s, double x) {
  if (s <= 0.0) return 0.0;
  const double z = x / (2.0 * std::sqrt(s));
  return inv_sqrt_pi * std::sqrt(s) * std::exp(-z * z) - 0.5 * x * std::erfc(z);
}
inline double kernel_P1(double s, double x) {
  if (s <= 0.0) return 0.0;
  const double z = x / (2.0 * std::sqrt(s));
  return inv_sqrt_pi / 3.0 * s * std::sqrt(s) * std::exp(-z * z) - x * x / 6.0 * kernel_P0(s, x);
}

/// Lag weights for int_0^{t_K} k(s) phi(t_K - s) ds with phi piecewise linear
/// on a uniform grid of step h: the value is
///   sum_{m=0}^{K-1} lag[m] phi_{K-m} + tail[K-1] phi_0.
struct ProductWeights {
  std::vector<double> lag;   // A_m - B_m + B_{m-1}
  std::vector<double> tail;  // B_m
};

/// Builds the weights from cell masses A_m = int k and first moments
/// M_m = int k s over [m h, (m+1) h].
template <class Mass, class Moment>
ProductWeights product_weights(std::size_t cells, double h, Mass&& mass, Moment&& moment, bool nonnegative = false) {
  ProductWeights w{std::vector<double>(cells), std::vector<double>(cells)};
  double prev_b = 0.0;
  for (std::size_t m = 0; m < cells; ++m) {
    const double sa = h * static_cast<double>(m);
    const double a = mass(m);
    const double b = (moment(m) - sa * a) / h;
    w.lag[m] = a - b + prev_b;
    w.tail[m] = b;
    if (nonnegative) {
      // Exact weights of a positive kernel are >= 0; cancellation in the far
      // tail can leave denormal negatives.
      w.lag[m] = std::max(w.lag[m], 0.0);
      w.tail[m] = std::max(w.tail[m], 0.0);
    }
    prev_b = b;
  }
  return w;
}

}  // namespace detail

/// Precomputed product-integration tables for one (path grid, space grid)
/// pair. Paths on the grid's time nodes or on a uniform refinement of them
/// are accepted.
class HeatBoundarySolver {
 public:
  HeatBoundarySolver(const GridSpec& grid, std::size_t path_nodes) : grid_(grid), path_nodes_(path_nodes) {
    grid.validate();
    require(path_nodes >= 2 && (path_nodes - 1) % (grid.n_t - 1) == 0,
            "solve_u: path nodes must refine the grid's time nodes");
    stride_ = (path_nodes - 1) / (grid.n_t - 1);
    h_ = grid.T / static_cast<double>(path_nodes - 1);
    const std::size_t cells = path_nodes - 1;
    const std::size_t nx = grid.n_x;
    u_lag_.assign(cells * nx, 0.0);
    u_tail_.assign(cells * nx, 0.0);
    du_lag_.assign(cells * nx, 0.0);
    du_tail_.assign(cells * nx, 0.0);
    for (std::size_t j = 1; j < nx; ++j) {
      const double x = grid.x(j);
      auto z = [x](double s) { return s <= 0.0 ? std::numeric_limits<double>::infinity() : x / (2.0 * std::sqrt(s)); };
      const auto uw = detail::product_weights(
          cells, h_, [&](std::size_t m) { return detail::erfc_diff(z(h_ * (m + 1.0)), z(h_ * m)); },
          [&](std::size_t m) { return detail::layer_Q1(h_ * (m + 1.0), x) - detail::layer_Q1(h_ * m, x); }, true);
      const auto dw = detail::product_weights(
          cells, h_, [&](std::size_t m) { return detail::layer_dQ0(h_ * (m + 1.0), x) - detail::layer_dQ0(h_ * m, x); },
          [&](std::size_t m) { return detail::layer_dQ1(h_ * (m + 1.0), x) - detail::layer_dQ1(h_ * m, x); });
      for (std::size_t m = 0; m < cells; ++m) {
        u_lag_[m * nx + j] = uw.lag[m];
        u_tail_[m * nx + j] = uw.tail[m];
        du_lag_[m * nx + j] = dw.lag[m];
        du_tail_[m * nx + j] = dw.tail[m];
      }
    }
  }

  const GridSpec& grid() const { return grid_; }
  std::size_t path_nodes() const { return path_nodes_; }

  struct Solution {
    Field u;
    Field dxu;
  };

  /// u and d_x u on the grid. Row x = 0 carries the trace u = psi and the
  /// derivative of the piecewise-linear datum's smooth representation.
  Solution solve(const BoundaryPath& psi) const {
    check_path(psi);
    Solution out{Field(grid_), Field(grid_)};
    const std::size_t nx = grid_.n_x;
    const auto& v = psi.values;
    for (std::size_t k = 0; k < grid_.n_t; ++k) {
      const std::size_t K = k * stride_;
      auto u = out.u.row(k);
      auto du = out.dxu.row(k);
      if (K > 0) {
        for (std::size_t m = 0; m < K; ++m) {
          const double pv = v[K - m];
          const double* uw = &u_lag_[m * nx];
          const double* dw = &du_lag_[m * nx];
          for (std::size_t j = 1; j < nx; ++j) {
            u[j] += uw[j] * pv;
            du[j] += dw[j] * pv;
          }
        }
        const double* ut = &u_tail_[(K - 1) * nx];
        const double* dt = &du_tail_[(K - 1) * nx];
        for (std::size_t j = 1; j < nx; ++j) {
          u[j] += ut[j] * v[0];
          du[j] += dt[j] * v[0];
        }
      }
      u[0] = v[K];
      du[0] = boundary_derivative(v, K);
    }
    return out;
  }

 private:
  void check_path(const BoundaryPath& psi) const {
    psi.validate();
    require(psi.is_uniform(), "solve_u: boundary path must be on a uniform grid");
    require(psi.size() == path_nodes_, "solve_u: path size does not match the solver tables");
    require(std::abs(psi.horizon() - grid_.T) <= 1e-9 * grid_.T, "solve_u: path horizon differs from grid T");
  }

  // d_x u(t,0) = -2 G(t,0) psi(0) - 2 int_0^t G(s,0) psi'(t-s) ds for the
  // piecewise-linear datum (psi' constant per cell).
  double boundary_derivative(const std::vector<double>& v, std::size_t K) const {
    if (K == 0) return 0.0;
    const double t = h_ * static_cast<double>(K);
    double acc = -v[0] * detail::inv_sqrt_pi / std::sqrt(t);
    for (std::size_t m = 0; m < K; ++m) {
      const double slope = (v[K - m] - v[K - m - 1]) / h_;
      acc -= 2.0 * detail::inv_sqrt_pi * slope * (std::sqrt(h_ * (m + 1.0)) - std::sqrt(h_ * m));
    }
    return acc;
  }

  GridSpec grid_;
  std::size_t path_nodes_;
  std::size_t stride_ = 1;
  double h_ = 0.0;
  std::vector<double> u_lag_, u_tail_, du_lag_, du_tail_;
};

/// u(t_K, x) and d_x u(t_K, x) at one point off the grid, t_K the K-th path node.
inline std::pair<double, double> layer_potential_at(const BoundaryPath& psi, std::size_t K, double x) {
  psi.validate();
  require(psi.is_uniform(), "layer_potential_at: boundary path must be on a uniform grid");
  require(K < psi.size() && x > 0.0, "layer_potential_at: need a path node and x > 0");
  if (K == 0) return {0.0, 0.0};
  const double h = psi.dt();
  auto z = [x](double s) { return s <= 0.0 ? std::numeric_limits<double>::infinity() : x / (2.0 * std::sqrt(s)); };
  const auto uw = detail::product_weights(
      K, h, [&](std::size_t m) { return detail::erfc_diff(z(h * (m + 1.0)), z(h * m)); },
      [&](std::size_t m) { return detail::layer_Q1(h * (m + 1.0), x) - detail::layer_Q1(h * m, x); }, true);
  const auto dw = detail::product_weights(
      K, h, [&](std::size_t m) { return detail::layer_dQ0(h * (m + 1.0), x) - detail::layer_dQ0(h * m, x); },
      [&](std::size_t m) { return detail::layer_dQ1(h * (m + 1.0), x) - detail::layer_dQ1(h * m, x); });
  double u = uw.tail[K - 1] * psi.values[0], du = dw.tail[K - 1] * psi.values[0];
  for (std::size_t m = 0; m < K; ++m) {
    u += uw.lag[m] * psi.values[K - m];
    du += dw.lag[m] * psi.values[K - m];
  }
  return {u, du};
}

inline Field solve_u(const BoundaryPath& psi, const GridSpec& grid) {
  return HeatBoundarySolver(grid, psi.size()).solve(psi).u;
}

/// d_x u by differentiating the layer potential under the integral.
inline Field solve_dxu(const BoundaryPath& psi, const GridSpec& grid) {
  return HeatBoundarySolver(grid, psi.size()).solve(psi).dxu;
}

/// d_x u through the smooth representation
///   d_x u(t,x) = -2 G(t,x) psi(0) - 2 int_0^t G(s,x) psi'(t - s) ds,
/// valid for C^1 data; `dpsi` holds psi' on the path nodes (read piecewise
/// linearly). Row x = 0 is evaluated with the same formula.
inline Field solve_dxu_smooth(const BoundaryPath& psi, std::span<const double> dpsi, const GridSpec& grid) {
  psi.validate();
  require(dpsi.size() == psi.size(), "solve_dxu: derivative samples must match the path");
  require(psi.is_uniform() && (psi.size() - 1) % (grid.n_t - 1) == 0,
          "solve_dxu: path nodes must refine the grid's time nodes");
  const std::size_t stride = (psi.size() - 1) / (grid.n_t - 1);
  const std::size_t cells = psi.size() - 1;
  const double h = grid.T / static_cast<double>(cells);
  Field out(grid);
  for (std::size_t j = 0; j < grid.n_x; ++j) {
    const double x = grid.x(j);
    const auto w = detail::product_weights(
        cells, h, [&](std::size_t m) { return detail::kernel_P0(h * (m + 1.0), x) - detail::kernel_P0(h * m, x); },
        [&](std::size_t m) { return detail::kernel_P1(h * (m + 1.0), x) - detail::kernel_P1(h * m, x); });
    for (std::size_t k = 1; k < grid.n_t; ++k) {
      const std::size_t K = k * stride;
      double acc = 0.0;
      for (std::size_t m = 0; m < K; ++m) acc += w.lag[m] * dpsi[K - m];
      acc += w.tail[K - 1] * dpsi[0];
      const double t = h * static_cast<double>(K);
      out(k, j) = -2.0 * eval_G(t, x) * psi.values[0] - 2.0 * acc;
    }
  }
  return out;
}

/// R(psi) = sup_t ||u(t,.)||_{W^{1,q}} / ||psi||_{C^beta}.
struct W1qReport {
  double numerator = 0.0;
  double denominator = 0.0;
  std::optional<double> ratio;  // empty for the 0/0 case psi = 0
};

inline void check_w1q_exponents(double beta, double q) {
  require(beta > 0.0 && beta < 0.5, "verify_w1q_bound: beta must lie in (0, 1/2)");
  require(q >= 1.0 && q < 1.0 / (1.0 - 2.0 * beta), "verify_w1q_bound: need 1 <= q < 1/(1 - 2 beta)");
}

inline W1qReport w1q_ratio(const HeatBoundarySolver& solver, const BoundaryPath& psi, double beta, double q) {
  check_w1q_exponents(beta, q);
  const auto sol = solver.solve(psi);
  const GridSpec& g = solver.grid();
  W1qReport r;
  for (std::size_t k = 0; k < g.n_t; ++k)
    r.numerator = std::max(r.numerator, sobolev_norm_with_derivative(sol.u.row(k), sol.dxu.row(k), g.dx(), q));
  r.denominator = holder_norm(psi, beta).value;
  if (r.denominator > 0.0) r.ratio = r.numerator / r.denominator;
  return r;
}

inline W1qReport verify_w1q_bound(const BoundaryPath& psi, double beta, double q, const GridSpec& grid) {
  check_w1q_exponents(beta, q);
  return w1q_ratio(HeatBoundarySolver(grid, psi.size()), psi, beta, q);
}

/// Largest R over an ensemble of paths sharing one grid.
inline double max_w1q_ratio(std::span<const BoundaryPath> paths, double beta, double q, const GridSpec& grid) {
  check_w1q_exponents(beta, q);
  require(!paths.empty(), "max_w1q_ratio: empty ensemble");
  const HeatBoundarySolver solver(grid, paths.front().size());
  std::vector<double> ratios(paths.size(), 0.0);
  parallel_for(paths.size(), [&](std::size_t i) {
    const auto r = w1q_ratio(solver, paths[i], beta, q);
    ratios[i] = r.ratio.value_or(0.0);
  });
  return *std::max_element(ratios.begin(), ratios.end());
}

}  // namespace sulph
