#include <gtest/gtest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <numbers>
#include <vector>

#include "sulph/heat_boundary.hpp"

using namespace sulph;
namespace bq = boost::math::quadrature;

namespace {

const JacobiParams kJacobi{.alpha = 1.0, .gamma_level = 0.5, .sigma = std::sqrt(0.5), .eta = 1.0, .psi0 = 0.0};

double interp(const BoundaryPath& p, double t) {
  const double h = p.dt();
  const auto i = std::min<std::size_t>(static_cast<std::size_t>(t / h), p.size() - 2);
  const double w = t / h - static_cast<double>(i);
  return (1 - w) * p.values[i] + w * p.values[i + 1];
}

// u(t,x) = pi^{-1/2} int_{x/sqrt t}^inf exp(-xi^2/4) psi(t - x^2/xi^2) dxi, psi read piecewise linearly.
// The substitution removes the kernel singularity; the pieces between the
// images of the path nodes are smooth and integrated adaptively.
double substitution_oracle(const BoundaryPath& p, double t, double x) {
  auto integrand = [&](double xi) { return std::exp(-0.25 * xi * xi) * interp(p, t - x * x / (xi * xi)); };
  std::vector<double> cuts{x / std::sqrt(t)};
  for (double tau = p.dt(); tau < t - 1e-12; tau += p.dt()) cuts.push_back(x / std::sqrt(t - tau));
  std::sort(cuts.begin(), cuts.end());
  cuts.push_back(cuts.back() + 40.0);
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
    acc += bq::gauss_kronrod<double, 31>::integrate(integrand, cuts[i], cuts[i + 1], 10, 1e-13);
  return acc / std::sqrt(std::numbers::pi);
}

}  // namespace

TEST(HeatBoundary, ZeroDatum) {
  const GridSpec g{1.0, 33, 10.0, 51};
  const auto psi = path_from_function(1.0, 33, [](double) { return 0.0; });
  const auto sol = HeatBoundarySolver(g, psi.size()).solve(psi);
  EXPECT_EQ(sol.u.max(), 0.0);
  EXPECT_EQ(sol.u.min(), 0.0);
  EXPECT_EQ(sol.dxu.max(), 0.0);
  EXPECT_EQ(sol.dxu.min(), 0.0);
}

TEST(HeatBoundary, ConstantDatumGivesErfc) {
  const GridSpec g{1.0, 256, 20.0, 400};
  const auto psi = path_from_function(1.0, 256, [](double) { return 1.0; });
  const Field u = solve_u(psi, g);
  double worst = 0.0;
  for (std::size_t k = 1; k < g.n_t; ++k)
    for (std::size_t j = 1; j + 1 < g.n_x; ++j)
      worst = std::max(worst, std::abs(u(k, j) - std::erfc(g.x(j) / (2 * std::sqrt(g.t(k))))));
  EXPECT_LT(worst, 1e-4);
  EXPECT_NEAR(layer_potential_at(path_from_function(1.0, 65, [](double) { return 1.0; }), 64, 1.0).first,
              0.4795001221869535, 1e-12);
}

TEST(HeatBoundary, TraceAndInitialRow) {
  const GridSpec g{1.0, 65, 12.0, 121};
  const auto psi = sample_path(kJacobi, 1.0, 65, 3);
  const Field u = solve_u(psi, g);
  for (std::size_t k = 0; k < g.n_t; ++k) EXPECT_EQ(u(k, 0), psi.values[k]);
  for (std::size_t j = 0; j < g.n_x; ++j) EXPECT_EQ(u(0, j), j == 0 ? psi.values[0] : 0.0);
}

TEST(HeatBoundary, MatchesSubstitutionQuadrature) {
  const GridSpec g{1.0, 65, 12.0, 121};
  for (std::uint64_t seed : {1u, 2u}) {
    const auto psi = sample_path(kJacobi, 1.0, 65, seed);
    const Field u = solve_u(psi, g);
    for (std::size_t k : {1u, 7u, 40u, 64u})
      for (std::size_t j : {1u, 2u, 5u, 20u, 60u}) EXPECT_NEAR(u(k, j), substitution_oracle(psi, g.t(k), g.x(j)), 1e-9);
  }
}

TEST(HeatBoundary, RefinedPathOnCoarseGrid) {
  const GridSpec g{1.0, 17, 12.0, 61};
  const auto fine = sample_path(kJacobi, 1.0, 65, 5);
  const Field u = solve_u(fine, g);
  for (std::size_t k : {3u, 16u}) {
    const auto [pu, pdu] = layer_potential_at(fine, 4 * k, g.x(7));
    EXPECT_NEAR(u(k, 7), pu, 1e-14);
    EXPECT_NEAR(solve_dxu(fine, g)(k, 7), pdu, 1e-13);
    EXPECT_NEAR(u(k, 7), substitution_oracle(fine, g.t(k), g.x(7)), 1e-9);
  }
  EXPECT_THROW(solve_u(sample_path(kJacobi, 1.0, 40, 5), g), ValidationError);
}

TEST(HeatBoundary, Linearity) {
  const GridSpec g{1.0, 65, 12.0, 121};
  const auto p1 = sample_path(kJacobi, 1.0, 65, 11);
  const auto p2 = path_from_function(1.0, 65, [](double t) { return std::sin(5 * t); });
  BoundaryPath mix = p1;
  for (std::size_t k = 0; k < mix.size(); ++k) mix.values[k] = 2.0 * p1.values[k] - 0.7 * p2.values[k];
  const HeatBoundarySolver solver(g, 65);
  const auto a = solver.solve(p1), b = solver.solve(p2), c = solver.solve(mix);
  for (std::size_t i = 0; i < c.u.values().size(); ++i) {
    EXPECT_NEAR(c.u.values()[i], 2.0 * a.u.values()[i] - 0.7 * b.u.values()[i], 1e-14);
    EXPECT_NEAR(c.dxu.values()[i], 2.0 * a.dxu.values()[i] - 0.7 * b.dxu.values()[i], 1e-12);
  }
}

TEST(HeatBoundary, PositivityAndPointwiseBound) {
  const GridSpec g{1.0, 129, 12.0, 241};
  const HeatBoundarySolver solver(g, 129);
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto psi = sample_path(kJacobi, 1.0, 129, seed);
    const Field u = solver.solve(psi).u;
    EXPECT_GE(u.min(), 0.0);
    worst = std::max(worst, u.max() / psi.sup_abs());
  }
  EXPECT_LE(worst, 1.0 + 1e-3);
  // Constant negative sign as well.
  const auto neg = sample_path(kJacobi, 1.0, 129, 99).scaled(-1.0);
  const Field u = solver.solve(neg).u;
  EXPECT_LE(u.max(), 0.0);
  EXPECT_LE(-u.min(), (1.0 + 1e-3) * neg.sup_abs());
}

TEST(HeatBoundary, LpBoundsAgainstErfcEnvelope) {
  // 0 <= psi <= M gives 0 <= u <= M erfc(x / 2 sqrt t), so every L^p norm is dominated.
  const GridSpec g{1.0, 129, 12.0, 241};
  const auto psi = sample_path(kJacobi, 1.0, 129, 17);
  const Field u = solve_u(psi, g);
  const double M = psi.sup_abs();
  for (double p : {1.0, 2.0, std::numeric_limits<double>::infinity()}) {
    double sup = 0.0, envelope = 0.0;
    for (std::size_t k = 1; k < g.n_t; ++k) {
      std::vector<double> e(g.n_x);
      for (std::size_t j = 0; j < g.n_x; ++j) e[j] = M * std::erfc(g.x(j) / (2 * std::sqrt(g.t(k))));
      sup = std::max(sup, lp_norm(u.row(k), g.dx(), p));
      envelope = std::max(envelope, lp_norm(e, g.dx(), p));
    }
    EXPECT_LE(sup, envelope * (1 + 1e-12)) << p;
  }
}

TEST(HeatBoundary, ExponentialDecayInSpace) {
  const GridSpec g{1.0, 129, 12.0, 241};
  const auto psi = sample_path(kJacobi, 1.0, 129, 8);
  const Field u = solve_u(psi, g);
  // Fit log u against x on (1, 6]; the slope must be negative.
  const std::size_t k = g.n_t - 1;
  double sx = 0, sy = 0, sxx = 0, sxy = 0, n = 0;
  for (std::size_t j = 0; j < g.n_x; ++j) {
    const double x = g.x(j);
    if (x <= 1.0 || x > 6.0) continue;
    ASSERT_GT(u(k, j), 0.0);
    const double y = std::log(u(k, j));
    sx += x, sy += y, sxx += x * x, sxy += x * y, n += 1;
  }
  EXPECT_LT((n * sxy - sx * sy) / (n * sxx - sx * sx), -0.5);
  EXPECT_LT(u(k, g.n_x - 1), 1e-12);
}

TEST(HeatBoundaryDerivative, ZeroDatum) {
  const GridSpec g{1.0, 9, 8.0, 17};
  const Field d = solve_dxu(path_from_function(1.0, 9, [](double) { return 0.0; }), g);
  EXPECT_EQ(d.max(), 0.0);
  EXPECT_EQ(d.min(), 0.0);
}

TEST(HeatBoundaryDerivative, SmoothAndSingularRoutesAgree) {
  const GridSpec g{1.0, 129, 12.0, 241};
  const auto psi = path_from_function(1.0, 129, [](double t) { return t; });
  const std::vector<double> dpsi(129, 1.0);
  const Field singular = solve_dxu(psi, g);
  const Field smooth = solve_dxu_smooth(psi, dpsi, g);
  double num = 0, den = 0;
  for (std::size_t k = 1; k < g.n_t; ++k)
    for (std::size_t j = 1; j < g.n_x; ++j) {
      num += std::pow(singular(k, j) - smooth(k, j), 2);
      den += std::pow(smooth(k, j), 2);
    }
  EXPECT_LT(std::sqrt(num / den), 1e-3);
  // The boundary row uses the same representation.
  for (std::size_t k = 1; k < g.n_t; ++k) EXPECT_NEAR(singular(k, 0), smooth(k, 0), 1e-10);
}

TEST(HeatBoundaryDerivative, SmoothRouteForCurvedDatum) {
  const double w = 2.0 * std::numbers::pi;
  const GridSpec g{1.0, 513, 12.0, 121};
  const auto psi = path_from_function(1.0, 513, [&](double t) { return std::pow(std::sin(w * t / 2), 2); });
  std::vector<double> dpsi(513);
  for (std::size_t k = 0; k < 513; ++k) dpsi[k] = 0.5 * w * std::sin(w * psi.times[k]);
  const Field singular = solve_dxu(psi, g);
  const Field smooth = solve_dxu_smooth(psi, dpsi, g);
  double num = 0, den = 0;
  for (std::size_t k = 1; k < g.n_t; ++k)
    for (std::size_t j = 1; j < g.n_x; ++j) {
      num += std::pow(singular(k, j) - smooth(k, j), 2);
      den += std::pow(smooth(k, j), 2);
    }
  EXPECT_LT(std::sqrt(num / den), 1e-3);
}

TEST(HeatBoundaryDerivative, MatchesFiniteDifferenceOfU) {
  const auto psi = sample_path(kJacobi, 1.0, 129, 21);
  for (double x : {0.05, 0.3, 1.5}) {
    const double h = 1e-5;
    const double fd = (layer_potential_at(psi, 100, x + h).first - layer_potential_at(psi, 100, x - h).first) / (2 * h);
    const double an = layer_potential_at(psi, 100, x).second;
    EXPECT_NEAR(fd, an, 1e-6 * std::max(1.0, std::abs(an)));
  }
}

TEST(HeatBoundaryDerivative, NearBoundaryGrowthBoundedByInverseDistance) {
  // x |d_x u(t,x)| / sup|psi| stays bounded on log-spaced x in (0, 1].
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto psi = sample_path(kJacobi, 1.0, 257, seed);
    for (std::size_t K : {32u, 128u, 256u})
      for (int e = 0; e <= 40; ++e) {
        const double x = std::pow(10.0, -4.0 + 0.1 * e);
        worst = std::max(worst, x * std::abs(layer_potential_at(psi, K, x).second) / psi.sup_abs());
      }
  }
  EXPECT_TRUE(std::isfinite(worst));
  EXPECT_LT(worst, 1.0);
}

TEST(W1q, ZeroPathHasNoRatio) {
  const GridSpec g{1.0, 33, 12.0, 61};
  const auto r = verify_w1q_bound(path_from_function(1.0, 33, [](double) { return 0.0; }), 0.3, 2.0, g);
  EXPECT_EQ(r.numerator, 0.0);
  EXPECT_EQ(r.denominator, 0.0);
  EXPECT_FALSE(r.ratio.has_value());
}

TEST(W1q, ScaleInvariant) {
  const GridSpec g{1.0, 65, 12.0, 121};
  const auto psi = sample_path(kJacobi, 1.0, 65, 31);
  const auto a = verify_w1q_bound(psi, 0.3, 2.0, g);
  const auto b = verify_w1q_bound(psi.scaled(2.0), 0.3, 2.0, g);
  EXPECT_NEAR(*a.ratio, *b.ratio, 1e-13 * *a.ratio);
}

TEST(W1q, RejectsInadmissibleExponents) {
  const GridSpec g{1.0, 33, 12.0, 61};
  const auto psi = sample_path(kJacobi, 1.0, 33, 1);
  EXPECT_THROW(verify_w1q_bound(psi, 0.3, 2.5, g), ValidationError);  // needs q < 1/(1 - 2 beta) = 2.5
  EXPECT_THROW(verify_w1q_bound(psi, 0.5, 2.0, g), ValidationError);
  EXPECT_THROW(verify_w1q_bound(psi, 0.3, 0.5, g), ValidationError);
  EXPECT_NO_THROW(verify_w1q_bound(psi, 0.3, 2.4, g));
}

TEST(W1q, EnsembleMaximumStableUnderRefinement) {
  const GridSpec g{1.0, 128, 12.0, 200};
  std::vector<BoundaryPath> coarse, fine;
  for (std::uint64_t i = 0; i < 12; ++i) {
    auto pair = sample_refinement_pair(kJacobi, 1.0, 128, rng::member_seed(2024, i));
    coarse.push_back(std::move(pair.coarse));
    fine.push_back(std::move(pair.fine));
  }
  const double a = max_w1q_ratio(coarse, 0.3, 2.0, g);
  const double b = max_w1q_ratio(fine, 0.3, 2.0, g.refined());
  EXPECT_TRUE(std::isfinite(a));
  EXPECT_LT(std::abs(b - a) / a, 0.1);
}

TEST(HeatBoundary, RejectsMismatchedPaths) {
  const GridSpec g{1.0, 33, 12.0, 61};
  EXPECT_THROW(solve_u(path_from_function(2.0, 33, [](double) { return 0.0; }), g), ValidationError);
  BoundaryPath bad{{0.0, 0.5, 0.6, 1.0}, {0, 0, 0, 0}};
  EXPECT_THROW(solve_u(bad, GridSpec{1.0, 4, 12.0, 61}), ValidationError);
}
