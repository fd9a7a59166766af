#pragma once

// Finite-difference method of lines for the strong form
//
//   dt s = dxx s + b_c dx s + lambda c s (B s - 1),   b_c = B dx c / (1 + B c),
//   dt c = -lambda s (1 + B c) c,
//
// with s(t,0) = psi(t), s(t,L) = 0. Diffusion and upwinded advection are
// treated by a theta scheme, the reaction explicitly, and c by the exact
// solution of its ODE with s frozen at the step average. Only meant for
// smooth boundary data.

#include <algorithm>
#include <cmath>
#include <vector>

#include "sulph/coupled.hpp"
#include "sulph/core.hpp"
#include "sulph/jacobi.hpp"

namespace sulph {

struct FdConfig {
  double theta = 0.5;       // 0 explicit, 1/2 Crank-Nicolson, 1 implicit
  double cfl_safety = 0.9;  // dt <= cfl_safety dx^2 / 2 when theta < 1/2
  std::size_t substeps = 1; // internal steps per output time step

  void validate() const {
    require(theta >= 0.0 && theta <= 1.0, "fd: theta must lie in [0, 1]");
    require(cfl_safety > 0.0 && cfl_safety <= 1.0, "fd: cfl_safety must lie in (0, 1]");
    require(substeps >= 1, "fd: substeps must be >= 1");
  }
};

namespace detail {

/// Linear interpolation of a path at time t.
inline double path_at(const BoundaryPath& psi, double t) {
  const auto& ts = psi.times;
  if (t <= ts.front()) return psi.values.front();
  if (t >= ts.back()) return psi.values.back();
  const auto it = std::upper_bound(ts.begin(), ts.end(), t);
  const std::size_t k = static_cast<std::size_t>(it - ts.begin());
  const double w = (t - ts[k - 1]) / (ts[k] - ts[k - 1]);
  return (1.0 - w) * psi.values[k - 1] + w * psi.values[k];
}

/// Solves a tridiagonal system in place (Thomas algorithm); rhs holds the result.
inline void thomas(std::vector<double> lo, std::vector<double> di, std::vector<double> up, std::vector<double>& rhs) {
  const std::size_t n = di.size();
  for (std::size_t i = 1; i < n; ++i) {
    const double w = lo[i] / di[i - 1];
    di[i] -= w * up[i - 1];
    rhs[i] -= w * rhs[i - 1];
  }
  rhs[n - 1] /= di[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) rhs[i] = (rhs[i] - up[i] * rhs[i + 1]) / di[i];
}

}  // namespace detail

inline SolutionPair solve_fd(const BoundaryPath& psi, const InitialData& data, const ModelParams& params,
                             const GridSpec& grid, const FdConfig& fd) {
  grid.validate();
  params.validate();
  fd.validate();
  data.validate(params, grid);
  psi.validate();
  require(std::abs(psi.horizon() - grid.T) <= 1e-9 * grid.T, "solve_fd: path horizon differs from grid T");
  require(grid.n_x >= 3, "solve_fd: at least three space nodes required");

  const std::size_t n = grid.n_x;
  const double dx = grid.dx();
  const double h = grid.dt() / static_cast<double>(fd.substeps);
  if (fd.theta < 0.5)
    require(h <= fd.cfl_safety * dx * dx / 2.0, "solve_fd: CFL violation (dt > cfl_safety dx^2 / 2 with theta < 1/2)");

  SolutionPair out;
  out.s = Field(grid);
  out.c = Field(grid);
  std::vector<double> s(data.s0), c(data.c0);
  s.front() = detail::path_at(psi, 0.0);
  s.back() = 0.0;
  std::copy(s.begin(), s.end(), out.s.row(0).begin());
  std::copy(c.begin(), c.end(), out.c.row(0).begin());

  const std::size_t m = n - 2;  // interior unknowns
  std::vector<double> lo(m), di(m), up(m), rhs(m), b(n), s_next(n);
  const double floor = 0.5 * params.phi_min();
  const double inv2 = 1.0 / (dx * dx);

  for (std::size_t k = 1; k < grid.n_t; ++k) {
    for (std::size_t sub = 0; sub < fd.substeps; ++sub) {
      const double t_next = grid.t(k - 1) + h * static_cast<double>(sub + 1);
      const auto dc = centered_derivative(c, dx);
      for (std::size_t j = 0; j < n; ++j) {
        const double phi = params.phi(c[j]);
        if (!(std::abs(phi) >= floor)) throw InvariantViolation("porosity degeneracy: |1 + B c| fell below phi_min / 2");
        b[j] = params.B * dc[j] / phi;
      }
      // Row i of the interior system corresponds to node j = i + 1.
      std::vector<double> al(m), ad(m), au(m);
      for (std::size_t i = 0; i < m; ++i) {
        const std::size_t j = i + 1;
        al[i] = inv2;
        ad[i] = -2.0 * inv2;
        au[i] = inv2;
        if (b[j] > 0.0) {
          ad[i] -= b[j] / dx;
          au[i] += b[j] / dx;
        } else {
          ad[i] += b[j] / dx;
          al[i] -= b[j] / dx;
        }
      }
      const double left_next = detail::path_at(psi, t_next);
      for (std::size_t i = 0; i < m; ++i) {
        const std::size_t j = i + 1;
        const double As = al[i] * s[j - 1] + ad[i] * s[j] + au[i] * s[j + 1];
        const double reaction = params.lambda * c[j] * s[j] * (params.B * s[j] - 1.0);
        rhs[i] = s[j] + (1.0 - fd.theta) * h * As + h * reaction;
        lo[i] = -fd.theta * h * al[i];
        di[i] = 1.0 - fd.theta * h * ad[i];
        up[i] = -fd.theta * h * au[i];
      }
      rhs[0] += fd.theta * h * al[0] * left_next;  // right boundary value is 0
      detail::thomas(lo, di, up, rhs);
      s_next.front() = left_next;
      s_next.back() = 0.0;
      std::copy(rhs.begin(), rhs.end(), s_next.begin() + 1);
      for (std::size_t j = 0; j < n; ++j) {
        const double avg = 0.5 * (s[j] + s_next[j]);
        const double e = std::exp(params.lambda * h * avg);
        c[j] = c[j] / (params.phi(c[j]) * e - params.B * c[j]);
      }
      s.swap(s_next);
    }
    std::copy(s.begin(), s.end(), out.s.row(k).begin());
    std::copy(c.begin(), c.end(), out.c.row(k).begin());
  }

  out.dxs = dx_field(out.s);
  auto& diag = out.diagnostics;
  diag.energy = energy_report(out.s);
  diag.min_s = out.s.min();
  diag.max_s = out.s.max();
  diag.min_c = out.c.min();
  diag.max_c = out.c.max();
  for (std::size_t k = 1; k < grid.n_t && diag.c_monotone; ++k)
    for (std::size_t j = 0; j < n; ++j)
      if (out.c(k, j) > out.c(k - 1, j)) {
        diag.c_monotone = false;
        break;
      }
  const double tol = 1e-3;
  diag.invariants_ok = diag.min_s >= -tol && diag.max_s <= params.eta + tol && diag.min_c >= -tol &&
                       diag.max_c <= params.C0 + tol && diag.c_monotone;
  return out;
}

}  // namespace sulph
