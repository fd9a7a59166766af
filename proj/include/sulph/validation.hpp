#pragma once

// The acceptance suite: eleven property and oracle checks at desk scale.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "sulph/app.hpp"
#include "sulph/coupled.hpp"
#include "sulph/fd_oracle.hpp"
#include "sulph/heat_boundary.hpp"
#include "sulph/io.hpp"
#include "sulph/jacobi.hpp"
#include "sulph/norms.hpp"

namespace sulph::validation {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

inline std::string line(const CriterionResult& r) {
  char head[96];
  std::snprintf(head, sizeof head, "%s %2d %-26s", r.passed ? "PASS" : "FAIL", r.id, r.name.c_str());
  char tail[32];
  std::snprintf(tail, sizeof tail, " (%.1f s)", r.seconds);
  return std::string(head) + " " + r.detail + tail;
}

namespace detail {

inline std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace detail

/// Fixed settings of the suite.
struct Settings {
  JacobiParams jacobi{.alpha = 1.0, .gamma_level = 0.5, .sigma = std::sqrt(0.5), .eta = 1.0, .psi0 = 0.0};
  ModelParams model{.lambda = 1.0, .B = -1.0, .C0 = 0.5, .m = 0.5, .eta = 1.0};
  GridSpec coupled_grid{1.0, 129, 12.0, 241};
  std::size_t coupled_paths = 50;
  std::uint64_t seed = 20240601;
};

class Suite {
 public:
  explicit Suite(Settings s = {}) : s_(std::move(s)) {}

  static constexpr int count = 11;

  CriterionResult run(int id) {
    require(id >= 1 && id <= count, "validate: criterion id must lie in 1.." + std::to_string(count));
    const auto t0 = std::chrono::steady_clock::now();
    CriterionResult r;
    try {
      switch (id) {
        case 1: r = boundedness(); break;
        case 2: r = stationarity(); break;
        case 3: r = holder_exponent(); break;
        case 4: r = heat_closed_form(); break;
        case 5: r = w1q_control(); break;
        case 6: r = maximum_principle(); break;
        case 7: r = energy_bound(); break;
        case 8: r = mild_vs_fd(); break;
        case 9: r = outer_contraction(); break;
        case 10: r = stability(); break;
        default: r = determinism(); break;
      }
    } catch (const std::exception& e) {
      r.passed = false;
      r.detail = std::string("exception: ") + e.what();
    }
    r.id = id;
    r.name = name_of(id);
    r.seconds = detail::seconds_since(t0);
    return r;
  }

  static std::string name_of(int id) {
    static const char* names[] = {"",
                                  "jacobi boundedness",
                                  "jacobi stationarity",
                                  "hoelder exponent",
                                  "heat closed form",
                                  "W1q-Hoelder control",
                                  "maximum principle",
                                  "energy bound",
                                  "mild vs finite differences",
                                  "outer contraction",
                                  "stability in the datum",
                                  "determinism"};
    return id >= 1 && id <= count ? names[id] : "unknown";
  }

 private:
  struct JacobiEnsemble {
    bool in_bounds = true;
    double lo = 1.0, hi = 0.0;
    double mean = 0.0, variance = 0.0;
    double seconds = 0.0;
  };

  struct CoupledEnsemble {
    std::vector<BoundaryPath> coarse_paths, fine_paths;
    std::vector<SolutionPair> coarse;
    std::vector<double> fine_energy;
    std::vector<std::string> failures;  // per path, empty when converged
  };

  Settings s_;
  std::optional<JacobiEnsemble> jacobi_;
  std::optional<CoupledEnsemble> coupled_;
  bool fine_done_ = false;

  CriterionResult make(int id, bool ok, std::string detail) {
    return {id, name_of(id), ok, std::move(detail), 0.0};
  }

  // 10^4 paths on 2048 nodes over [0,5], started at the reversion level.
  const JacobiEnsemble& jacobi_ensemble() {
    if (jacobi_) return *jacobi_;
    const auto t0 = std::chrono::steady_clock::now();
    JacobiParams p = s_.jacobi;
    p.psi0 = 0.5;
    const std::size_t n_paths = 10000, n_t = 2048;
    const double T = 5.0;
    const auto times = uniform_nodes(T, n_t);
    std::vector<double> sum(n_paths), sum2(n_paths), lo(n_paths), hi(n_paths);
    std::vector<std::size_t> cnt(n_paths);
    parallel_for(n_paths, [&](std::size_t i) {
      const auto path = sample_path(p, times, rng::member_seed(s_.seed + 1, i));
      lo[i] = path.min();
      hi[i] = path.max();
      for (std::size_t k = 0; k < n_t; ++k)
        if (times[k] >= 0.5 * T) {
          sum[i] += path.values[k];
          sum2[i] += path.values[k] * path.values[k];
          ++cnt[i];
        }
    });
    JacobiEnsemble e;
    double s1 = 0.0, s2 = 0.0, n = 0.0;
    for (std::size_t i = 0; i < n_paths; ++i) {
      e.lo = std::min(e.lo, lo[i]);
      e.hi = std::max(e.hi, hi[i]);
      s1 += sum[i];
      s2 += sum2[i];
      n += static_cast<double>(cnt[i]);
    }
    e.in_bounds = e.lo >= 0.0 && e.hi <= 1.0;
    e.mean = s1 / n;
    e.variance = s2 / n - e.mean * e.mean;
    e.seconds = detail::seconds_since(t0);
    jacobi_ = e;
    return *jacobi_;
  }

  CriterionResult boundedness() {
    const auto& e = jacobi_ensemble();
    return make(1, e.in_bounds && e.seconds < 10.0,
                detail::fmt("10000 paths x 2048 nodes: range [%.6f, %.6f], sampled in %.2f s (limit 10 s)", e.lo, e.hi,
                            e.seconds));
  }

  CriterionResult stationarity() {
    const auto& e = jacobi_ensemble();
    const bool ok = std::abs(e.mean - 0.5) <= 0.01 && std::abs(e.variance - 0.05) <= 0.005;
    return make(2, ok, detail::fmt("mean %.5f (0.5 +- 0.01), variance %.5f (0.05 +- 0.005)", e.mean, e.variance));
  }

  CriterionResult holder_exponent() {
    JacobiParams p = s_.jacobi;
    p.psi0 = 0.5;
    const std::size_t n_paths = 100;
    std::vector<double> est(n_paths, std::numeric_limits<double>::quiet_NaN());
    parallel_for(n_paths, [&](std::size_t i) {
      est[i] = holder_exponent_estimate(sample_path(p, 1.0, 4096, rng::member_seed(s_.seed + 3, i)))
                   .value_or(std::numeric_limits<double>::quiet_NaN());
    });
    double mean = 0.0;
    for (double v : est) mean += v;
    mean /= static_cast<double>(n_paths);
    return make(3, std::isfinite(mean) && mean >= 0.40 && mean <= 0.55,
                detail::fmt("mean estimate over 100 paths of 4096 nodes: %.4f (range [0.40, 0.55])", mean));
  }

  CriterionResult heat_closed_form() {
    const auto t0 = std::chrono::steady_clock::now();
    const GridSpec g{1.0, 256, 20.0, 400};
    const auto psi = path_from_function(1.0, 256, [](double) { return 1.0; });
    const Field u = solve_u(psi, g);
    double err = 0.0;
    for (std::size_t k = 1; k < g.n_t; ++k)
      for (std::size_t j = 1; j < g.n_x; ++j)
        err = std::max(err, std::abs(u(k, j) - std::erfc(g.x(j) / (2.0 * std::sqrt(g.t(k))))));
    const double secs = detail::seconds_since(t0);
    return make(4, err < 1e-4 && secs < 30.0,
                detail::fmt("max interior |u - erfc| = %.3e (limit 1e-4), %.2f s (limit 30 s)", err, secs));
  }

  CriterionResult w1q_control() {
    const GridSpec coarse{1.0, 128, 12.0, 200};
    const GridSpec fine = coarse.refined();
    std::vector<BoundaryPath> pc, pf;
    for (std::size_t i = 0; i < 100; ++i) {
      auto pair = sample_refinement_pair(s_.jacobi, 1.0, 128, rng::member_seed(s_.seed + 5, i));
      pc.push_back(std::move(pair.coarse));
      pf.push_back(std::move(pair.fine));
    }
    const double rc = max_w1q_ratio(pc, 0.3, 2.0, coarse);
    const double rf = max_w1q_ratio(pf, 0.3, 2.0, fine);
    const double change = std::abs(rf - rc) / rc;
    return make(5, std::isfinite(rc) && std::isfinite(rf) && change < 0.1,
                detail::fmt("max R = %.5f on (128, 200), %.5f on (255, 399): change %.2f%% (limit 10%%)", rc, rf,
                            100.0 * change));
  }

  InitialData coupled_data(const GridSpec& g) const {
    const double eta = s_.model.eta;
    return InitialData::from_profiles(g, [eta](double x) { return std::min(eta, eta * x * std::exp(1.0 - x)); },
                                      [](double) { return 0.5; });
  }

  CoupledEnsemble& coupled_ensemble() {
    if (coupled_) return *coupled_;
    CoupledEnsemble e;
    const std::size_t n = s_.coupled_paths;
    const GridSpec& g = s_.coupled_grid;
    for (std::size_t i = 0; i < n; ++i) {
      auto pair = sample_refinement_pair(s_.jacobi, g.T, g.n_t, rng::member_seed(s_.seed + 6, i));
      e.coarse_paths.push_back(std::move(pair.coarse));
      e.fine_paths.push_back(std::move(pair.fine));
    }
    e.coarse.resize(n);
    e.failures.resize(n);
    const auto data = coupled_data(g);
    parallel_for(n, [&](std::size_t i) {
      try {
        e.coarse[i] = solve_nonlinear(e.coarse_paths[i], data, s_.model, g, SolverConfig{});
      } catch (const std::exception& ex) {
        e.failures[i] = ex.what();
      }
    });
    coupled_ = std::move(e);
    return *coupled_;
  }

  static std::string first_failure(const CoupledEnsemble& e) {
    for (std::size_t i = 0; i < e.failures.size(); ++i)
      if (!e.failures[i].empty()) return "path " + std::to_string(i) + ": " + e.failures[i];
    return {};
  }

  CriterionResult maximum_principle() {
    const auto& e = coupled_ensemble();
    if (auto f = first_failure(e); !f.empty()) return make(6, false, f);
    double min_s = 1e300, max_s = -1e300, min_c = 1e300, max_c = -1e300;
    bool monotone = true;
    for (const auto& sol : e.coarse) {
      min_s = std::min(min_s, sol.diagnostics.min_s);
      max_s = std::max(max_s, sol.diagnostics.max_s);
      min_c = std::min(min_c, sol.diagnostics.min_c);
      max_c = std::max(max_c, sol.diagnostics.max_c);
      monotone = monotone && sol.diagnostics.c_monotone;
    }
    const bool ok = min_s >= -1e-6 && max_s <= 1.0 + 1e-6 && min_c >= 0.0 && max_c <= 0.5 + 1e-6 && monotone;
    return make(6, ok,
                detail::fmt("50 paths: s in [%.3e, %.9f], c in [%.6f, %.9f], c nonincreasing: %s", min_s, max_s, min_c,
                            max_c, monotone ? "yes" : "no"));
  }

  CriterionResult energy_bound() {
    auto& e = coupled_ensemble();
    if (auto f = first_failure(e); !f.empty()) return make(7, false, f);
    const GridSpec fine = s_.coupled_grid.refined();
    if (!fine_done_) {
      e.fine_energy.assign(e.coarse.size(), std::numeric_limits<double>::quiet_NaN());
      const auto data = coupled_data(fine);
      parallel_for(e.coarse.size(), [&](std::size_t i) {
        try {
          e.fine_energy[i] = solve_nonlinear(e.fine_paths[i], data, s_.model, fine, SolverConfig{}).diagnostics.energy;
        } catch (const std::exception&) {
        }
      });
      fine_done_ = true;
    }
    std::vector<double> energy;
    double drift = 0.0;
    bool finite = true;
    for (std::size_t i = 0; i < e.coarse.size(); ++i) {
      const double ec = e.coarse[i].diagnostics.energy, ef = e.fine_energy[i];
      finite = finite && std::isfinite(ec) && std::isfinite(ef);
      energy.push_back(ec);
      drift = std::max(drift, std::abs(ef - ec) / ec);
    }
    const double spread = *std::max_element(energy.begin(), energy.end()) / detail::median(energy);
    const bool ok = finite && spread < 10.0 && drift < 0.1;
    return make(7, ok,
                detail::fmt("finite: %s, max/median %.3f (limit 10), worst drift under doubling %.2f%% (limit 10%%)",
                            finite ? "yes" : "no", spread, 100.0 * drift));
  }

  CriterionResult mild_vs_fd() {
    std::string detail_text;
    bool ok = true;
    for (double lambda : {0.0, 1.0}) {
      ModelParams p = s_.model;
      p.lambda = lambda;
      double err[2];
      const std::size_t sizes[2] = {200, 400};
      for (int i = 0; i < 2; ++i) {
        const std::size_t n = sizes[i];
        const GridSpec g{1.0, n, 12.0, n};
        const double eta = p.eta;
        const auto psi =
            path_from_function(1.0, n, [eta](double t) { return eta * std::pow(std::sin(std::numbers::pi * t), 2); });
        const auto data = coupled_data(g);
        const auto mild = solve_nonlinear(psi, data, p, g, SolverConfig{});
        const auto fd = solve_fd(psi, data, p, g, FdConfig{});
        err[i] = app::relative_l2_tx(mild.s, fd.s);
      }
      const double ratio = err[0] / err[1];
      ok = ok && err[1] < 2e-2 && ratio >= 1.5;
      detail_text += detail::fmt("%slambda=%g: error %.3e at n_x=400 (limit 2e-2), ratio %.2f (min 1.5)",
                                 detail_text.empty() ? "" : "; ", lambda, err[1], ratio);
    }
    return make(8, ok, detail_text);
  }

  CriterionResult outer_contraction() {
    const auto& e = coupled_ensemble();
    if (auto f = first_failure(e); !f.empty()) return make(9, false, f);
    double worst = 0.0;
    bool ok = true;
    std::size_t bisections = 0;
    for (const auto& sol : e.coarse) {
      bisections += sol.diagnostics.bisections;
      for (const auto& w : sol.diagnostics.windows) {
        if (w.rate) worst = std::max(worst, *w.rate);
        ok = ok && (!w.rate || *w.rate < 1.0);
      }
    }
    // A run starved of outer iterations must recover through bisection.
    SolverConfig starved;
    starved.max_outer = 4;
    const GridSpec& g = s_.coupled_grid;
    const auto forced = solve_nonlinear(e.coarse_paths.front(), coupled_data(g), s_.model, g, starved);
    double forced_worst = 0.0;
    for (const auto& w : forced.diagnostics.windows) {
      if (w.rate) forced_worst = std::max(forced_worst, *w.rate);
      ok = ok && (!w.rate || *w.rate < 1.0);
    }
    ok = ok && forced.diagnostics.bisections > 0 && forced.diagnostics.invariants_ok;
    return make(9, ok,
                detail::fmt("50 runs: max fitted rate %.4f, %zu bisections; starved run: %zu bisections, %zu windows, "
                            "max rate %.4f",
                            worst, bisections, forced.diagnostics.bisections, forced.diagnostics.windows.size(),
                            forced_worst));
  }

  CriterionResult stability() {
    const auto& e = coupled_ensemble();
    if (auto f = first_failure(e); !f.empty()) return make(10, false, f);
    const std::size_t n = e.coarse.size();
    const double beta = SolverConfig{}.holder_beta;
    std::vector<double> ratios;
    bool finite = true;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t j = (i + 1) % n;
      const auto r = stability_from_solutions(e.coarse[i].s, e.coarse[j].s, e.coarse_paths[i], e.coarse_paths[j], beta);
      finite = finite && std::isfinite(r.ratio);
      ratios.push_back(r.ratio);
    }
    const double spread = *std::max_element(ratios.begin(), ratios.end()) / detail::median(ratios);

    ModelParams linear = s_.model;
    linear.lambda = 0.0;
    const GridSpec& g = s_.coupled_grid;
    const auto data = coupled_data(g);
    double worst_rel = 0.0;
    for (std::size_t i = 0; i < 5; ++i) {
      const auto& a = e.coarse_paths[2 * i];
      const auto& b = e.coarse_paths[2 * i + 1];
      const double r1 = stability_check(a, b, data, linear, g, SolverConfig{}).ratio;
      const double r2 = stability_check(a.scaled(0.5), b.scaled(0.5), data, linear, g, SolverConfig{}).ratio;
      worst_rel = std::max(worst_rel, std::abs(r2 - r1) / r1);
    }
    const bool ok = finite && spread < 20.0 && worst_rel <= 1e-12;
    return make(10, ok,
                detail::fmt("50 pairs: max/median %.3f (limit 20); lambda=0 scaling by 1/2 changes the ratio by %.1e "
                            "(limit 1e-12)",
                            spread, worst_rel));
  }

  CriterionResult determinism() {
    namespace fs = std::filesystem;
    Scenario sc;
    sc.grid = {1.0, 33, 12.0, 121};
    sc.ensemble = 2;
    sc.seed = s_.seed + 11;
    const fs::path root = fs::temp_directory_path() / ("sulph_determinism_" + std::to_string(::getpid()));
    fs::remove_all(root);
    std::size_t files = 0;
    bool same = true;
    for (auto cmd : {app::Command::SampleBoundary, app::Command::SolveHeat, app::Command::SolveSystem}) {
      const fs::path a = root / "a" / app::command_name(cmd), b = root / "b" / app::command_name(cmd);
      app::run(cmd, sc, a);
      app::run(cmd, sc, b);
      for (const auto& entry : fs::recursive_directory_iterator(a)) {
        if (!entry.is_regular_file()) continue;
        const fs::path other = b / fs::relative(entry.path(), a);
        same = same && fs::exists(other) && read_text_file(entry.path()) == read_text_file(other);
        ++files;
      }
    }
    fs::remove_all(root);
    return make(11, same && files > 0,
                detail::fmt("%zu output files from two runs with seed %llu: %s", files,
                            static_cast<unsigned long long>(sc.seed), same ? "byte-identical" : "DIFFER"));
  }
};

}  // namespace sulph::validation
