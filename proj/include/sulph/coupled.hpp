#pragma once

// Nonlinear reaction-diffusion system on the half-line, split as s = u + v:
// u carries the boundary datum through the pure heat equation, v solves the
// linear mild equation with zero boundary value
//
//   v(t) = Gbar(t) *_D v0 + int_0^t Gbar(t - r) *_D [b (dx v + dx u) + gt (v + u)](r) dr,
//
// whose coefficients b, gt come from the explicit concentration g driven by
// a frozen iterate f. The outer map f -> s = u + v is iterated to a fixed
// point; windows of the time axis are bisected when either fixed point
// stalls, restarting from the state at the window start.

#include <algorithm>
#include <cmath>
#include <deque>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sulph/core.hpp"
#include "sulph/heat_boundary.hpp"
#include "sulph/heat_kernel.hpp"
#include "sulph/jacobi.hpp"
#include "sulph/norms.hpp"

namespace sulph {

/// Reaction rate, porosity slope phi(c) = 1 + B c and the data bounds.
struct ModelParams {
  double lambda = 1.0;
  double B = -1.0;
  double C0 = 0.5;  // upper bound of c0
  double m = 0.5;   // lower bound of c0
  double eta = 1.0; // bound of psi and s0

  double phi(double c) const { return 1.0 + B * c; }
  /// Smallest porosity over admissible concentrations.
  double phi_min() const { return B < 0.0 ? 1.0 - C0 : 1.0; }

  void validate() const {
    require(std::isfinite(lambda) && lambda >= 0.0, "model: lambda must be >= 0");
    require(B == 1.0 || B == -1.0, "model: B must be +1 or -1");
    require(std::isfinite(m) && m > 0.0, "model: m must be positive");
    require(std::isfinite(C0) && C0 >= m, "model: C0 must be >= m");
    require(std::isfinite(eta) && eta > 0.0, "model: eta must be positive");
    if (B < 0.0) require(C0 < 1.0, "porosity degeneracy: B = -1 requires C0 < 1");
    if (B > 0.0) require(eta < 1.0, "model: B = +1 requires eta < 1");
  }
};

/// Initial profiles on the space grid.
struct InitialData {
  std::vector<double> s0;
  std::vector<double> c0;

  template <class S, class C>
  static InitialData from_profiles(const GridSpec& grid, S&& s0_fn, C&& c0_fn) {
    InitialData d;
    d.s0.resize(grid.n_x);
    d.c0.resize(grid.n_x);
    for (std::size_t j = 0; j < grid.n_x; ++j) {
      d.s0[j] = s0_fn(grid.x(j));
      d.c0[j] = c0_fn(grid.x(j));
    }
    return d;
  }

  void validate(const ModelParams& params, const GridSpec& grid) const {
    require(s0.size() == grid.n_x && c0.size() == grid.n_x, "initial data: profiles must match the space grid");
    const double tol = 1e-12;
    for (double v : s0) require(std::isfinite(v) && v >= -tol && v <= params.eta + tol, "initial data: need 0 <= s0 <= eta");
    for (double v : c0)
      require(std::isfinite(v) && v >= params.m - tol && v <= params.C0 + tol, "initial data: need m <= c0 <= C0");
    require(std::abs(s0.front()) <= tol, "initial data: s0(0) must vanish");
    // Surrogate for W^{1,2} membership on the truncated line.
    require(std::abs(s0.back()) <= 1e-3 * params.eta, "initial data: s0 must decay at the truncation boundary");
    require(params.C0 - c0.back() <= 1e-3 * params.C0, "initial data: C0 - c0 must decay at the truncation boundary");
  }
};

struct SolverConfig {
  double picard_tol = 1e-10;
  std::size_t max_picard = 200;
  double outer_tol = 1e-8;
  std::size_t max_outer = 60;
  std::size_t quad_nodes = 32;  // accepted for compatibility; the quadratures are exact
  std::size_t max_bisections = 10;
  double holder_beta = 0.3;

  void validate() const {
    require(picard_tol > 0.0 && outer_tol > 0.0, "solver: tolerances must be positive");
    require(max_picard >= 1 && max_outer >= 1, "solver: iteration caps must be >= 1");
    require(quad_nodes >= 1, "solver: quad_nodes must be >= 1");
    require(holder_beta > 0.0 && holder_beta <= 1.0, "solver: holder_beta must lie in (0, 1]");
  }
};

/// Outer fixed-point history of one time window.
struct WindowReport {
  double t0 = 0.0;
  double t1 = 0.0;
  std::vector<double> distances;  // relative distances of successive iterates
  std::size_t picard_iterations = 0;
  std::optional<double> rate;     // fitted geometric rate
};

struct SolverDiagnostics {
  std::size_t outer_iterations = 0;
  std::size_t picard_iterations = 0;
  std::size_t bisections = 0;
  std::vector<WindowReport> windows;
  double energy = 0.0;
  double min_s = 0.0, max_s = 0.0;
  double min_c = 0.0, max_c = 0.0;
  bool c_monotone = true;
  bool invariants_ok = true;

  /// Largest fitted rate over windows (0 when every window converged at once).
  std::optional<double> contraction_rate() const {
    std::optional<double> r;
    for (const auto& w : windows)
      if (w.rate) r = std::max(r.value_or(0.0), *w.rate);
    return r;
  }
};

struct SolutionPair {
  Field s;    // u + v
  Field c;
  Field u;
  Field v;
  Field dxs;  // dx u + dx v, carried through the solve
  SolverDiagnostics diagnostics;
};

// --- explicit concentration ---------------------------------------------------

namespace detail {

/// Cumulative time trapezoid of f at every x.
inline Field time_integral(const Field& f) {
  const GridSpec& g = f.grid();
  Field out(g);
  const double h = g.dt();
  for (std::size_t k = 1; k < g.n_t; ++k)
    for (std::size_t j = 0; j < g.n_x; ++j) out(k, j) = out(k - 1, j) + 0.5 * h * (f(k - 1, j) + f(k, j));
  return out;
}

inline void check_profile(std::span<const double> p, const GridSpec& grid, const char* what) {
  require(p.size() == grid.n_x, std::string(what) + ": profile does not match the space grid");
}

}  // namespace detail

/// g = c0 / (phi(c0) e^{lambda int_0^t f} - B c0).
inline Field compute_g(const Field& f, std::span<const double> c0, const ModelParams& params) {
  const GridSpec& grid = f.grid();
  detail::check_profile(c0, grid, "compute_g");
  for (double v : f.values()) require(std::isfinite(v) && v >= 0.0, "compute_g: f must be finite and nonnegative");
  const Field I = detail::time_integral(f);
  Field g(grid);
  for (std::size_t k = 0; k < grid.n_t; ++k)
    for (std::size_t j = 0; j < grid.n_x; ++j) {
      const double h = std::exp(params.lambda * I(k, j));
      g(k, j) = c0[j] / (params.phi(c0[j]) * h - params.B * c0[j]);
    }
  return g;
}

/// d_x g by the chain rule, with d_x int f = int d_x f:
///   d_x g = h [d_x c0 - lambda c0 phi(c0) d_x I] / (phi(c0) h - B c0)^2,  h = e^{lambda I}.
inline Field dx_g(const Field& f, const Field& dxf, std::span<const double> c0, std::span<const double> dxc0,
                  const ModelParams& params) {
  const GridSpec& grid = f.grid();
  detail::check_profile(c0, grid, "dx_g");
  detail::check_profile(dxc0, grid, "dx_g");
  require(dxf.grid() == grid, "dx_g: derivative field on a different grid");
  const Field I = detail::time_integral(f);
  const Field dI = detail::time_integral(dxf);
  Field out(grid);
  for (std::size_t k = 0; k < grid.n_t; ++k)
    for (std::size_t j = 0; j < grid.n_x; ++j) {
      const double h = std::exp(params.lambda * I(k, j));
      const double phi = params.phi(c0[j]);
      const double den = phi * h - params.B * c0[j];
      out(k, j) = h * (dxc0[j] - params.lambda * c0[j] * phi * dI(k, j)) / (den * den);
    }
  return out;
}

struct Coefficients {
  Field b;            // drift B dx g / (1 + B g)
  Field gamma_tilde;  // -lambda (1 - B f) g
};

inline Coefficients assemble_coefficients(const Field& g, const Field& dxg, const Field& f, const ModelParams& params) {
  const GridSpec& grid = g.grid();
  require(dxg.grid() == grid && f.grid() == grid, "assemble_coefficients: fields on different grids");
  Coefficients out{Field(grid), Field(grid)};
  const double floor = 0.5 * params.phi_min();
  for (std::size_t i = 0; i < g.values().size(); ++i) {
    const double gv = g.values()[i];
    const double phi = 1.0 + params.B * gv;
    if (!(std::abs(phi) >= floor)) throw InvariantViolation("porosity degeneracy: |1 + B g| fell below phi_min / 2");
    out.b.values()[i] = params.B * dxg.values()[i] / phi;
    out.gamma_tilde.values()[i] = -params.lambda * (1.0 - params.B * f.values()[i]) * gv;
  }
  return out;
}

// --- linear mild equation ------------------------------------------------------

/// Heat propagators for one grid: one step, half a step and every elapsed
/// multiple of the step (built on demand).
class PropagatorBank {
 public:
  explicit PropagatorBank(const GridSpec& grid)
      : grid_(grid), step_(grid.dt(), grid.dx(), grid.n_x), half_(0.5 * grid.dt(), grid.dx(), grid.n_x) {}

  const GridSpec& grid() const { return grid_; }
  const DirichletPropagator& step() const { return step_; }
  const DirichletPropagator& half() const { return half_; }

  /// Propagator over i steps, i >= 1.
  const DirichletPropagator& elapsed(std::size_t i) {
    if (elapsed_.size() <= i) elapsed_.resize(i + 1);
    if (!elapsed_[i])
      elapsed_[i] = std::make_unique<DirichletPropagator>(grid_.dt() * static_cast<double>(i), grid_.dx(), grid_.n_x);
    return *elapsed_[i];
  }

 private:
  GridSpec grid_;
  DirichletPropagator step_;
  DirichletPropagator half_;
  std::vector<std::unique_ptr<DirichletPropagator>> elapsed_;
};

enum class LinearStatus { Converged, NonContraction, IterationLimit };

struct LinearSolution {
  Field v;
  Field dxv;
  LinearStatus status = LinearStatus::Converged;
  std::size_t iterations = 0;
  std::vector<double> distances;
};

namespace detail {

/// Free evolution Gbar(t_k) *_D v0 and its derivative; row 0 holds v0, dv0.
inline std::pair<Field, Field> free_evolution(PropagatorBank& bank, const GridSpec& grid, std::span<const double> v0,
                                              std::span<const double> dv0) {
  Field h(grid), dh(grid);
  std::copy(v0.begin(), v0.end(), h.row(0).begin());
  std::copy(dv0.begin(), dv0.end(), dh.row(0).begin());
  for (std::size_t k = 1; k < grid.n_t; ++k) bank.elapsed(k).accumulate(v0, 1.0, h.row(k), dh.row(k));
  return {std::move(h), std::move(dh)};
}

inline double row_w12(std::span<const double> f, std::span<const double> df, double dx) {
  const double a = trapezoid_map(f, dx, [](double v) { return v * v; });
  const double b = trapezoid_map(df, dx, [](double v) { return v * v; });
  return std::sqrt(a + b);
}

/// Picard iteration of the linear mild map, starting from `guess`.
inline LinearSolution picard(const PropagatorBank& bank, const Coefficients& coef, const Field& u, const Field& dxu,
                             const Field& hom, const Field& dhom, const Field& guess, const Field& dguess,
                             const SolverConfig& cfg) {
  const GridSpec& grid = hom.grid();
  const std::size_t nx = grid.n_x;
  const double dt = grid.dt();
  const double dx = grid.dx();
  LinearSolution out;
  out.v = guess;
  out.dxv = dguess;
  std::vector<double> F_prev(nx), F_cur(nx), I(nx), dI(nx), I_next(nx), dI_next(nx), mid(nx);
  auto forcing = [&](std::size_t k, const Field& h, const Field& dh, std::vector<double>& F) {
    for (std::size_t j = 0; j < nx; ++j)
      F[j] = coef.b(k, j) * (dxu(k, j) + dh(k, j)) + coef.gamma_tilde(k, j) * (u(k, j) + h(k, j));
  };
  std::size_t stalls = 0;
  for (std::size_t it = 1; it <= cfg.max_picard; ++it) {
    Field nh(grid), ndh(grid);
    std::copy(hom.row(0).begin(), hom.row(0).end(), nh.row(0).begin());
    std::copy(dhom.row(0).begin(), dhom.row(0).end(), ndh.row(0).begin());
    std::fill(I.begin(), I.end(), 0.0);
    std::fill(dI.begin(), dI.end(), 0.0);
    forcing(0, out.v, out.dxv, F_prev);
    for (std::size_t k = 1; k < grid.n_t; ++k) {
      forcing(k, out.v, out.dxv, F_cur);
      std::fill(I_next.begin(), I_next.end(), 0.0);
      std::fill(dI_next.begin(), dI_next.end(), 0.0);
      bank.step().accumulate(I, 1.0, I_next, dI_next);
      for (std::size_t j = 0; j < nx; ++j) mid[j] = F_prev[j] + F_cur[j];
      bank.half().accumulate(mid, 0.5 * dt, I_next, dI_next);
      I.swap(I_next);
      dI.swap(dI_next);
      for (std::size_t j = 0; j < nx; ++j) {
        nh(k, j) = hom(k, j) + I[j];
        ndh(k, j) = dhom(k, j) + dI[j];
      }
      F_prev.swap(F_cur);
    }
    double diff = 0.0, size = 0.0;
    std::vector<double> a(nx), da(nx);
    for (std::size_t k = 0; k < grid.n_t; ++k) {
      for (std::size_t j = 0; j < nx; ++j) {
        a[j] = nh(k, j) - out.v(k, j);
        da[j] = ndh(k, j) - out.dxv(k, j);
      }
      diff = std::max(diff, row_w12(a, da, dx));
      size = std::max(size, row_w12(nh.row(k), ndh.row(k), dx));
    }
    const double rel = size > 0.0 ? diff / size : diff;
    out.v = std::move(nh);
    out.dxv = std::move(ndh);
    out.iterations = it;
    if (!out.distances.empty() && !(rel < out.distances.back()))
      ++stalls;
    else
      stalls = 0;
    out.distances.push_back(rel);
    if (!std::isfinite(rel)) {
      out.status = LinearStatus::NonContraction;
      return out;
    }
    if (rel < cfg.picard_tol) {
      out.status = LinearStatus::Converged;
      return out;
    }
    if (stalls >= 3) {
      out.status = LinearStatus::NonContraction;
      return out;
    }
  }
  out.status = LinearStatus::IterationLimit;
  return out;
}

}  // namespace detail

/// Mild solution of dt v = dxx v + b dx(v + u) + gt (v + u), v(t,0) = 0, v(0) = v0.
/// Throws ConvergenceError when the Picard map does not contract on the grid.
inline LinearSolution solve_v_linear(const Field& b, const Field& gamma_tilde, const Field& u, const Field& dxu,
                                     std::span<const double> v0, const GridSpec& grid, const SolverConfig& cfg) {
  grid.validate();
  cfg.validate();
  require(b.grid() == grid && gamma_tilde.grid() == grid && u.grid() == grid && dxu.grid() == grid,
          "solve_v_linear: fields must share the grid");
  detail::check_profile(v0, grid, "solve_v_linear");
  require(std::abs(v0.front()) <= 1e-12, "solve_v_linear: v0(0) must vanish");
  PropagatorBank bank(grid);
  const auto dv0 = centered_derivative(v0, grid.dx());
  auto [hom, dhom] = detail::free_evolution(bank, grid, v0, dv0);
  const Coefficients coef{b, gamma_tilde};
  auto sol = detail::picard(bank, coef, u, dxu, hom, dhom, hom, dhom, cfg);
  if (sol.status != LinearStatus::Converged) throw ConvergenceError("solve_v_linear: Picard iteration did not contract");
  return sol;
}

// --- nonlinear system -------------------------------------------------------------

namespace detail {

/// Least-squares geometric rate exp(slope of log d_k); empty below two
/// distances, zero once an iterate repeats exactly.
inline std::optional<double> geometric_rate(const std::vector<double>& d) {
  if (d.size() < 2) return std::nullopt;
  if (d.back() == 0.0) return 0.0;
  double sx = 0, sy = 0, sxx = 0, sxy = 0, n = 0;
  for (std::size_t k = 0; k < d.size(); ++k) {
    if (!(d[k] > 0.0)) continue;
    const double x = static_cast<double>(k);
    const double y = std::log(d[k]);
    sx += x, sy += y, sxx += x * x, sxy += x * y, n += 1.0;
  }
  if (n < 2.0) return std::nullopt;
  return std::exp((n * sxy - sx * sy) / (n * sxx - sx * sx));
}

/// sup_t ||f||_{L^2} + (int ||dx f||_{L^2}^2 dt)^{1/2}.
inline double outer_norm(const Field& f, const Field& df) {
  const GridSpec& g = f.grid();
  double sup = 0.0;
  std::vector<double> grad(g.n_t);
  for (std::size_t k = 0; k < g.n_t; ++k) {
    sup = std::max(sup, lp_norm(f.row(k), g.dx(), 2.0));
    grad[k] = trapezoid_map(df.row(k), g.dx(), [](double v) { return v * v; });
  }
  return sup + std::sqrt(trapezoid(grad, g.dt()));
}

/// Projection onto [0, eta]; the derivative vanishes where the bound is active.
inline void clamp_iterate(const Field& s, const Field& ds, double eta, Field& f, Field& df) {
  f = s;
  df = ds;
  for (std::size_t i = 0; i < s.values().size(); ++i) {
    const double v = s.values()[i];
    if (v < 0.0 || v > eta) {
      f.values()[i] = std::clamp(v, 0.0, eta);
      df.values()[i] = 0.0;
    }
  }
}

struct WindowState {
  std::vector<double> v, dv, c, dc;
};

struct WindowResult {
  bool converged = false;
  Field v, dv;
  WindowReport report;
  std::size_t outer_iterations = 0;
};

class NonlinearSolver {
 public:
  NonlinearSolver(const Field& u, const Field& dxu, const ModelParams& params, const SolverConfig& cfg)
      : u_(u), dxu_(dxu), params_(params), cfg_(cfg), bank_(u.grid()) {}

  WindowResult solve_window(std::size_t k0, std::size_t k1, const WindowState& start) {
    const GridSpec& full = u_.grid();
    const GridSpec wg{full.t(k1) - full.t(k0), k1 - k0 + 1, full.L, full.n_x};
    const Field u = u_.time_window(k0, k1);
    const Field du = dxu_.time_window(k0, k1);
    auto [hom, dhom] = free_evolution(bank_, wg, start.v, start.dv);

    WindowResult res;
    res.report.t0 = full.t(k0);
    res.report.t1 = full.t(k1);
    Field f, df;
    clamp_iterate(u + hom, du + dhom, params_.eta, f, df);
    Field v = hom, dv = dhom;
    for (std::size_t it = 1; it <= cfg_.max_outer; ++it) {
      const Field g = compute_g(f, start.c, params_);
      const Field dg = dx_g(f, df, start.c, start.dc, params_);
      const auto coef = assemble_coefficients(g, dg, f, params_);
      auto lin = picard(bank_, coef, u, du, hom, dhom, v, dv, cfg_);
      res.report.picard_iterations += lin.iterations;
      res.outer_iterations = it;
      if (lin.status != LinearStatus::Converged) return res;
      v = std::move(lin.v);
      dv = std::move(lin.dxv);
      Field nf, ndf;
      clamp_iterate(u + v, du + dv, params_.eta, nf, ndf);
      const double dist = outer_norm(nf - f, ndf - df);
      const double scale = outer_norm(nf, ndf);
      const double rel = scale > 0.0 ? dist / scale : dist;
      res.report.distances.push_back(rel);
      f = std::move(nf);
      df = std::move(ndf);
      if (rel < cfg_.outer_tol) {
        res.converged = true;
        res.report.rate = geometric_rate(res.report.distances);
        res.v = std::move(v);
        res.dv = std::move(dv);
        return res;
      }
    }
    return res;
  }

 private:
  const Field& u_;
  const Field& dxu_;
  ModelParams params_;
  SolverConfig cfg_;
  PropagatorBank bank_;
};

/// c from the explicit formula with the clamped final s, and d_x c.
inline std::pair<Field, Field> concentration(const Field& s, const Field& ds, std::span<const double> c0,
                                             std::span<const double> dc0, const ModelParams& params) {
  Field f, df;
  clamp_iterate(s, ds, params.eta, f, df);
  return {compute_g(f, c0, params), dx_g(f, df, c0, dc0, params)};
}

inline void check_boundary_datum(const BoundaryPath& psi, const ModelParams& params, const GridSpec& grid) {
  psi.validate();
  require(std::abs(psi.horizon() - grid.T) <= 1e-9 * grid.T, "solve_nonlinear: path horizon differs from grid T");
  require(std::abs(psi.values.front()) <= 1e-12, "solve_nonlinear: boundary datum must satisfy psi(0) = 0");
  for (double v : psi.values)
    require(v >= -1e-12 && v <= params.eta + 1e-12, "solve_nonlinear: boundary datum must lie in [0, eta]");
}

}  // namespace detail

/// sup_t ||s(t)||_{L^2}^2 + int_0^T ||dx s(t)||_{L^2}^2 dt, derivative by centered differences.
inline double energy_report(const Field& s) {
  const GridSpec& g = s.grid();
  double sup = 0.0;
  std::vector<double> grad(g.n_t);
  for (std::size_t k = 0; k < g.n_t; ++k) {
    const auto row = s.row(k);
    sup = std::max(sup, trapezoid_map(row, g.dx(), [](double v) { return v * v; }));
    const auto d = centered_derivative(row, g.dx());
    grad[k] = trapezoid_map(std::span<const double>(d), g.dx(), [](double v) { return v * v; });
  }
  return sup + trapezoid(grad, g.dt());
}

inline SolutionPair solve_nonlinear(const BoundaryPath& psi, const InitialData& data, const ModelParams& params,
                                    const GridSpec& grid, const SolverConfig& cfg) {
  grid.validate();
  params.validate();
  cfg.validate();
  data.validate(params, grid);
  assert_truncation(grid.L, grid.T);
  detail::check_boundary_datum(psi, params, grid);

  const auto heat = HeatBoundarySolver(grid, psi.size()).solve(psi);
  SolutionPair out;
  out.u = heat.u;
  out.v = Field(grid);
  Field dxv(grid);
  Field c(grid);
  const auto ds0 = centered_derivative(data.s0, grid.dx());
  const auto dc0 = centered_derivative(data.c0, grid.dx());

  detail::NonlinearSolver solver(heat.u, heat.dxu, params, cfg);
  detail::WindowState state{data.s0, ds0, data.c0, dc0};
  struct Pending {
    std::size_t k0, k1, depth;
  };
  std::deque<Pending> pending{{0, grid.n_t - 1, 0}};
  auto& diag = out.diagnostics;
  while (!pending.empty()) {
    const auto [k0, k1, depth] = pending.front();
    auto res = solver.solve_window(k0, k1, state);
    diag.outer_iterations += res.outer_iterations;
    diag.picard_iterations += res.report.picard_iterations;
    if (!res.converged) {
      if (k1 - k0 < 2 || depth >= cfg.max_bisections)
        throw ConvergenceError("solve_nonlinear: fixed point not reached on [" + std::to_string(grid.t(k0)) + ", " +
                               std::to_string(grid.t(k1)) + "] after " + std::to_string(depth) +
                               " bisections");
      ++diag.bisections;
      const std::size_t mid = (k0 + k1) / 2;
      pending.pop_front();
      pending.push_front({mid, k1, depth + 1});
      pending.push_front({k0, mid, depth + 1});
      continue;
    }
    pending.pop_front();
    out.v.paste_window(k0, res.v);
    dxv.paste_window(k0, res.dv);
    diag.windows.push_back(std::move(res.report));

    // Restart data at the window end: concentration from this window's s.
    const Field s_w = out.u.time_window(k0, k1) + res.v;
    const Field ds_w = heat.dxu.time_window(k0, k1) + res.dv;
    auto [c_w, dc_w] = detail::concentration(s_w, ds_w, state.c, state.dc, params);
    c.paste_window(k0, c_w);
    const std::size_t last = k1 - k0;
    state.v.assign(res.v.row(last).begin(), res.v.row(last).end());
    state.dv.assign(res.dv.row(last).begin(), res.dv.row(last).end());
    state.c.assign(c_w.row(last).begin(), c_w.row(last).end());
    state.dc.assign(dc_w.row(last).begin(), dc_w.row(last).end());
  }

  out.s = out.u + out.v;
  out.dxs = heat.dxu + dxv;
  out.c = std::move(c);

  if (params.B < 0.0 && out.c.max() > 1.0 - 0.5 * params.phi_min())
    throw InvariantViolation("porosity degeneracy: c exceeded 1 - phi_min / 2");

  diag.energy = energy_report(out.s);
  diag.min_s = out.s.min();
  diag.max_s = out.s.max();
  diag.min_c = out.c.min();
  diag.max_c = out.c.max();
  for (std::size_t k = 1; k < grid.n_t && diag.c_monotone; ++k)
    for (std::size_t j = 0; j < grid.n_x; ++j)
      if (out.c(k, j) > out.c(k - 1, j)) {
        diag.c_monotone = false;
        break;
      }
  const double tol = 1e-6;
  diag.invariants_ok = diag.min_s >= -tol && diag.max_s <= params.eta + tol && diag.min_c >= -tol &&
                       diag.max_c <= params.C0 + tol && diag.c_monotone;
  return out;
}

/// One application of the outer map on the whole horizon: s = u + v with the
/// coefficients frozen at f (clamped to [0, eta]).
inline std::pair<Field, Field> outer_map(const Field& f, const Field& dxf, const BoundaryPath& psi,
                                         const InitialData& data, const ModelParams& params, const SolverConfig& cfg) {
  const GridSpec& grid = f.grid();
  params.validate();
  cfg.validate();
  data.validate(params, grid);
  detail::check_boundary_datum(psi, params, grid);
  const auto heat = HeatBoundarySolver(grid, psi.size()).solve(psi);
  Field fc, dfc;
  detail::clamp_iterate(f, dxf, params.eta, fc, dfc);
  const auto dc0 = centered_derivative(data.c0, grid.dx());
  const Field g = compute_g(fc, data.c0, params);
  const Field dg = dx_g(fc, dfc, data.c0, dc0, params);
  const auto coef = assemble_coefficients(g, dg, fc, params);
  PropagatorBank bank(grid);
  const auto ds0 = centered_derivative(data.s0, grid.dx());
  auto [hom, dhom] = detail::free_evolution(bank, grid, data.s0, ds0);
  auto lin = detail::picard(bank, coef, heat.u, heat.dxu, hom, dhom, hom, dhom, cfg);
  if (lin.status != LinearStatus::Converged) throw ConvergenceError("outer_map: Picard iteration did not contract");
  return {heat.u + lin.v, heat.dxu + lin.dxv};
}

struct StabilityReport {
  double numerator = 0.0;    // sup ||ds||^2 + 1/2 int ||dx ds||^2
  double denominator = 0.0;  // ||psi1 - psi2||_{C^beta}^2
  double ratio = 0.0;
};

/// Stability ratio of the two solutions against their boundary data.
inline StabilityReport stability_from_solutions(const Field& s1, const Field& s2, const BoundaryPath& psi1,
                                                const BoundaryPath& psi2, double beta) {
  require(psi1.size() == psi2.size(), "stability_check: paths must share the time grid");
  BoundaryPath diff = psi1;
  for (std::size_t k = 0; k < diff.size(); ++k) diff.values[k] -= psi2.values[k];
  StabilityReport r;
  const double hn = holder_norm(diff, beta).value;
  r.denominator = hn * hn;
  require(r.denominator > 0.0, "stability_check: boundary paths coincide");
  const Field d = s1 - s2;
  const GridSpec& g = d.grid();
  double sup = 0.0;
  std::vector<double> grad(g.n_t);
  for (std::size_t k = 0; k < g.n_t; ++k) {
    sup = std::max(sup, trapezoid_map(d.row(k), g.dx(), [](double v) { return v * v; }));
    const auto dd = centered_derivative(d.row(k), g.dx());
    grad[k] = trapezoid_map(std::span<const double>(dd), g.dx(), [](double v) { return v * v; });
  }
  r.numerator = sup + 0.5 * trapezoid(grad, g.dt());
  r.ratio = r.numerator / r.denominator;
  return r;
}

inline StabilityReport stability_check(const BoundaryPath& psi1, const BoundaryPath& psi2, const InitialData& data,
                                       const ModelParams& params, const GridSpec& grid, const SolverConfig& cfg) {
  require(psi1.size() == psi2.size(), "stability_check: paths must share the time grid");
  bool same = true;
  for (std::size_t k = 0; k < psi1.size() && same; ++k) same = psi1.values[k] == psi2.values[k];
  require(!same, "stability_check: boundary paths coincide");
  const auto a = solve_nonlinear(psi1, data, params, grid, cfg);
  const auto b = solve_nonlinear(psi2, data, params, grid, cfg);
  return stability_from_solutions(a.s, b.s, psi1, psi2, cfg.holder_beta);
}

}  // namespace sulph
