#pragma once

// Scenario runs behind the command-line front end. Every run is a pure
// function of (scenario, seed); files are written atomically.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "sulph/coupled.hpp"
#include "sulph/fd_oracle.hpp"
#include "sulph/heat_boundary.hpp"
#include "sulph/io.hpp"
#include "sulph/norms.hpp"

namespace sulph::app {

enum class Command { SampleBoundary, SolveHeat, SolveSystem, SolveFd, Compare };

inline const char* command_name(Command c) {
  switch (c) {
    case Command::SampleBoundary: return "sample-boundary";
    case Command::SolveHeat: return "solve-heat";
    case Command::SolveSystem: return "solve-system";
    case Command::SolveFd: return "solve-fd";
    case Command::Compare: return "compare";
  }
  return "";
}

/// sqrt( int int (a - ref)^2 / int int ref^2 ), trapezoid weights in t and x.
inline double relative_l2_tx(const Field& a, const Field& ref) {
  const GridSpec& g = ref.grid();
  require(a.grid() == g, "relative_l2_tx: grids differ");
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < g.n_t; ++k) {
    const double wt = (k == 0 || k + 1 == g.n_t) ? 0.5 : 1.0;
    for (std::size_t j = 0; j < g.n_x; ++j) {
      const double w = wt * ((j == 0 || j + 1 == g.n_x) ? 0.5 : 1.0);
      const double d = a(k, j) - ref(k, j);
      num += w * d * d;
      den += w * ref(k, j) * ref(k, j);
    }
  }
  require(den > 0.0, "relative_l2_tx: reference field vanishes");
  return std::sqrt(num / den);
}

inline double max_abs_difference(const Field& a, const Field& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.values().size(); ++i) m = std::max(m, std::abs(a.values()[i] - b.values()[i]));
  return m;
}

inline void add_path_rows(Report& r, const BoundaryPath& psi, const Scenario& sc) {
  r.add("psi.nodes", psi.size());
  r.add("psi.min", psi.min());
  r.add("psi.max", psi.max());
  r.add("psi.holder_norm", holder_norm(psi, sc.norm_beta).value);
  if (psi.size() >= 64) r.add("psi.holder_exponent", holder_exponent_estimate(psi));
}

inline void add_solution_rows(Report& r, const SolutionPair& sol, const ModelParams& params) {
  const auto& d = sol.diagnostics;
  const GridSpec& g = sol.s.grid();
  r.add("outer_iterations", d.outer_iterations);
  r.add("picard_iterations", d.picard_iterations);
  r.add("bisections", d.bisections);
  r.add("windows", d.windows.size());
  for (std::size_t i = 0; i < d.windows.size(); ++i) {
    const auto& w = d.windows[i];
    const std::string p = "window." + std::to_string(i) + ".";
    r.add(p + "t0", w.t0);
    r.add(p + "t1", w.t1);
    r.add(p + "outer_iterations", w.distances.size());
    r.add(p + "picard_iterations", w.picard_iterations);
    r.add(p + "final_distance", w.distances.empty() ? 0.0 : w.distances.back());
    r.add(p + "rate", w.rate);
  }
  r.add("contraction_rate", d.contraction_rate());
  r.add("energy", d.energy);
  r.add("min_s", d.min_s);
  r.add("max_s", d.max_s);
  r.add("min_c", d.min_c);
  r.add("max_c", d.max_c);
  r.add("margin.s_lower", d.min_s);
  r.add("margin.s_upper", params.eta - d.max_s);
  r.add("margin.c_lower", d.min_c);
  r.add("margin.c_upper", params.C0 - d.max_c);
  r.add("c_monotone", d.c_monotone);
  r.add("invariants_ok", d.invariants_ok);
  const auto last = sol.s.row(g.n_t - 1);
  r.add("norm.s_final.L2", lp_norm(last, g.dx(), 2.0));
  r.add("norm.s_final.W12", sobolev_norm_with_derivative(last, sol.dxs.row(g.n_t - 1), g.dx(), 2.0));
  r.add("norm.s_final.gagliardo_half_2", gagliardo_seminorm(last, g.dx(), 0.5, 2.0).value);
}

inline void require_smooth_source(const Scenario& sc, Command c) {
  require(sc.psi_source != PsiSource::Sampled,
          std::string(command_name(c)) +
              ": finite differences need smooth boundary data; use psi.source = profile or file");
}

/// Runs one member and writes its files into `dir`.
inline Report run_member(Command cmd, const Scenario& sc, std::uint64_t seed, const std::filesystem::path& dir) {
  Report r;
  r.add("command", command_name(cmd));
  r.add("seed", static_cast<std::size_t>(seed));
  if (cmd == Command::SolveFd || cmd == Command::Compare) require_smooth_source(sc, cmd);
  const BoundaryPath psi = scenario_path(sc, seed);
  write_file_atomic(dir / "path.csv", path_csv(psi));
  add_path_rows(r, psi, sc);

  switch (cmd) {
    case Command::SampleBoundary: {
      if (sc.psi_source == PsiSource::Sampled && sc.jacobi.sigma > 0.0) {
        const auto f = feller_classify(sc.jacobi);
        r.add("jacobi.p", f.p);
        r.add("jacobi.q", f.q);
        r.add("jacobi.left_entrance", f.left_entrance);
        r.add("jacobi.right_entrance", f.right_entrance);
      }
      break;
    }
    case Command::SolveHeat: {
      const HeatBoundarySolver solver(sc.grid, psi.size());
      const auto heat = solver.solve(psi);
      write_file_atomic(dir / "heat.csv", field_csv(heat.u));
      r.add("u.min", heat.u.min());
      r.add("u.max", heat.u.max());
      const auto w = w1q_ratio(solver, psi, sc.norm_beta, sc.norm_q);
      r.add("w1q.numerator", w.numerator);
      r.add("w1q.denominator", w.denominator);
      r.add("w1q.ratio", w.ratio);
      break;
    }
    case Command::SolveSystem: {
      const auto sol = solve_nonlinear(psi, scenario_data(sc), sc.model, sc.grid, sc.solver);
      write_file_atomic(dir / "solution.csv", solution_csv(sol));
      add_solution_rows(r, sol, sc.model);
      break;
    }
    case Command::SolveFd: {
      const auto sol = solve_fd(psi, scenario_data(sc), sc.model, sc.grid, sc.fd);
      write_file_atomic(dir / "solution.csv", solution_csv(sol));
      r.add("energy", sol.diagnostics.energy);
      r.add("min_s", sol.diagnostics.min_s);
      r.add("max_s", sol.diagnostics.max_s);
      r.add("min_c", sol.diagnostics.min_c);
      r.add("max_c", sol.diagnostics.max_c);
      r.add("c_monotone", sol.diagnostics.c_monotone);
      r.add("invariants_ok", sol.diagnostics.invariants_ok);
      break;
    }
    case Command::Compare: {
      const auto data = scenario_data(sc);
      const auto mild = solve_nonlinear(psi, data, sc.model, sc.grid, sc.solver);
      const auto fd = solve_fd(psi, data, sc.model, sc.grid, sc.fd);
      write_file_atomic(dir / "solution.csv", solution_csv(mild));
      write_file_atomic(dir / "solution_fd.csv", solution_csv(fd));
      r.add("error.formula", "sqrt(sum w_k w_j (a - b)^2 / sum w_k w_j b^2), trapezoid weights, b = fd");
      r.add("error.s.relative_l2_tx", relative_l2_tx(mild.s, fd.s));
      r.add("error.c.relative_l2_tx", relative_l2_tx(mild.c, fd.c));
      r.add("error.s.max_abs", max_abs_difference(mild.s, fd.s));
      r.add("error.c.max_abs", max_abs_difference(mild.c, fd.c));
      break;
    }
  }
  write_file_atomic(dir / "report.txt", r.str());
  return r;
}

inline std::uint64_t member_seed_of(const Scenario& sc, std::size_t i) {
  return sc.ensemble == 1 ? sc.seed : rng::member_seed(sc.seed, i);
}

inline std::filesystem::path member_dir(const std::filesystem::path& out, const Scenario& sc, std::size_t i) {
  if (sc.ensemble == 1) return out;
  char name[32];
  std::snprintf(name, sizeof name, "member_%04zu", i);
  return out / name;
}

/// Runs the whole ensemble; returns the per-member reports in member order.
/// With more than one member a summary.txt lists every member's report.
inline std::vector<Report> run(Command cmd, const Scenario& sc, const std::filesystem::path& out) {
  sc.validate();
  std::filesystem::create_directories(out);
  std::vector<Report> reports(sc.ensemble);
  parallel_for(sc.ensemble, [&](std::size_t i) {
    reports[i] = run_member(cmd, sc, member_seed_of(sc, i), member_dir(out, sc, i));
  });
  if (sc.ensemble > 1) {
    Report summary;
    summary.add("command", command_name(cmd));
    summary.add("members", sc.ensemble);
    for (std::size_t i = 0; i < reports.size(); ++i) {
      const std::string p = member_dir({}, sc, i).string() + ".";
      for (const auto& [k, v] : reports[i].rows()) summary.add(p + k, v);
    }
    write_file_atomic(out / "summary.txt", summary.str());
  }
  return reports;
}

}  // namespace sulph::app
