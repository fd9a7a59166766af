#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "sulph/coupled.hpp"
#include "sulph/fd_oracle.hpp"

using namespace sulph;

namespace {

const ModelParams kModel{.lambda = 1.0, .B = -1.0, .C0 = 0.5, .m = 0.5, .eta = 1.0};

ModelParams without_reaction() {
  ModelParams p = kModel;
  p.lambda = 0.0;
  return p;
}

InitialData flat_data(const GridSpec& g, double s_amp = 1.0) {
  return InitialData::from_profiles(g, [=](double x) { return s_amp * std::min(1.0, x * std::exp(1.0 - x)); },
                                    [](double) { return 0.5; });
}

BoundaryPath smooth_path(double T, std::size_t n) {
  return path_from_function(T, n, [T](double t) { return std::pow(std::sin(std::numbers::pi * t / T), 2); });
}

// Max difference at the final time over the nodes shared with the coarsest grid.
double final_gap(const Field& a, const Field& b) {
  const auto& ga = a.grid();
  const auto& gb = b.grid();
  const std::size_t stride = (gb.n_x - 1) / (ga.n_x - 1);
  double m = 0.0;
  for (std::size_t j = 0; j < ga.n_x; ++j)
    m = std::max(m, std::abs(a(ga.n_t - 1, j) - b(gb.n_t - 1, j * stride)));
  return m;
}

double observed_order(const Field& h, const Field& h2, const Field& h4) {
  return std::log2(final_gap(h, h2) / final_gap(h2, h4));
}

}  // namespace

TEST(Fd, ConstantBoundaryGivesErfcProfile) {
  const GridSpec g{1.0, 401, 12.0, 400};
  const auto psi = path_from_function(1.0, 401, [](double) { return 1.0; });
  const auto data = flat_data(g, 0.0);
  const auto sol = solve_fd(psi, data, without_reaction(), g, FdConfig{});
  double err = 0.0;
  for (std::size_t j = 0; j < g.n_x; ++j)
    err = std::max(err, std::abs(sol.s(g.n_t - 1, j) - std::erfc(g.x(j) / 2.0)));
  EXPECT_LT(err, 1e-2);
}

TEST(Fd, ReactionOffLeavesConcentration) {
  const GridSpec g{1.0, 33, 12.0, 121};
  const auto sol = solve_fd(smooth_path(1.0, 33), flat_data(g), without_reaction(), g, FdConfig{});
  for (double v : sol.c.values()) EXPECT_EQ(v, 0.5);
}

TEST(Fd, ZeroDataGiveTrivialSolution) {
  const GridSpec g{1.0, 33, 12.0, 121};
  const auto psi = path_from_function(1.0, 33, [](double) { return 0.0; });
  const auto sol = solve_fd(psi, flat_data(g, 0.0), kModel, g, FdConfig{});
  EXPECT_EQ(sol.s.max(), 0.0);
  EXPECT_EQ(sol.s.min(), 0.0);
  for (double v : sol.c.values()) EXPECT_EQ(v, 0.5);
}

TEST(Fd, InvariantsHold) {
  const GridSpec g{1.0, 129, 12.0, 241};
  const auto sol = solve_fd(smooth_path(1.0, 129), flat_data(g), kModel, g, FdConfig{});
  EXPECT_TRUE(sol.diagnostics.invariants_ok);
  EXPECT_TRUE(sol.diagnostics.c_monotone);
  EXPECT_LE(sol.diagnostics.max_c, 0.5);
  EXPECT_GT(sol.diagnostics.min_c, 0.0);
}

TEST(Fd, ExplicitSchemeEnforcesCfl) {
  const GridSpec g{1.0, 33, 12.0, 241};
  FdConfig explicit_euler{.theta = 0.0};
  EXPECT_THROW(solve_fd(smooth_path(1.0, 33), flat_data(g), kModel, g, explicit_euler), ValidationError);
  explicit_euler.substeps = 64;  // dt = 1/2048 < 0.9 dx^2 / 2
  EXPECT_NO_THROW(solve_fd(smooth_path(1.0, 33), flat_data(g), kModel, g, explicit_euler));
}

TEST(Fd, RejectsBadConfiguration) {
  const GridSpec g{1.0, 9, 12.0, 61};
  EXPECT_THROW(solve_fd(smooth_path(1.0, 9), flat_data(g), kModel, g, FdConfig{.theta = 1.5}), ValidationError);
  EXPECT_THROW(solve_fd(smooth_path(2.0, 9), flat_data(g), kModel, g, FdConfig{}), ValidationError);
}

TEST(Fd, SecondOrderInSpaceWithoutAdvection) {
  // lambda = 0: pure heat flow, tiny time steps, so the space error dominates.
  std::vector<Field> s;
  for (std::size_t nx : {61u, 121u, 241u}) {
    const GridSpec g{1.0, 65, 12.0, nx};
    s.push_back(solve_fd(smooth_path(1.0, 65), flat_data(g), without_reaction(), g, FdConfig{.substeps = 16}).s);
  }
  EXPECT_NEAR(observed_order(s[0], s[1], s[2]), 2.0, 0.3);
}

TEST(Fd, FirstOrderInTimeForImplicitEuler) {
  std::vector<Field> s;
  for (std::size_t nt : {17u, 33u, 65u}) {
    const GridSpec g{1.0, nt, 12.0, 241};
    s.push_back(solve_fd(smooth_path(1.0, nt), flat_data(g), without_reaction(), g, FdConfig{.theta = 1.0}).s);
  }
  EXPECT_NEAR(observed_order(s[0], s[1], s[2]), 1.0, 0.3);
}

TEST(Fd, ConvergesWithReaction) {
  std::vector<Field> s;
  for (std::size_t lvl = 0; lvl < 3; ++lvl) {
    const GridSpec g{1.0, 32 * (1u << lvl) + 1, 12.0, 60 * (1u << lvl) + 1};
    s.push_back(solve_fd(smooth_path(1.0, g.n_t), flat_data(g), kModel, g, FdConfig{}).s);
  }
  EXPECT_GT(observed_order(s[0], s[1], s[2]), 0.8);
}

TEST(Fd, AgreesWithMildSolver) {
  const std::size_t n = 200;
  const GridSpec g{1.0, n, 12.0, n};
  const auto psi = smooth_path(1.0, n);
  const auto data = flat_data(g);
  const auto fd = solve_fd(psi, data, kModel, g, FdConfig{});
  const auto mild = solve_nonlinear(psi, data, kModel, g, SolverConfig{});
  double num = 0, den = 0;
  for (std::size_t i = 0; i < fd.s.values().size(); ++i) {
    num += std::pow(fd.s.values()[i] - mild.s.values()[i], 2);
    den += std::pow(fd.s.values()[i], 2);
  }
  EXPECT_LT(std::sqrt(num / den), 1e-2);
}
