#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "merged/analytic.hpp"
#include "merged/fpe.hpp"
#include "merged/numerics.hpp"

using namespace merged;
using namespace merged::fpe;

TEST(Grid, Validation) {
  FpeGrid g;
  EXPECT_NO_THROW(g.validate());
  g.x_max = g.x_min;
  EXPECT_THROW(g.validate(), std::domain_error);
  FpeGrid few;
  few.n_cells = 4;
  EXPECT_THROW(few.validate(), std::domain_error);
  FpeGrid long_step;
  long_step.dt_pde = 2.0;
  EXPECT_THROW(long_step.validate(), std::domain_error);
}

TEST(Solve, HeatEquationMatchesGaussian) {
  const ProcessParams p(0.0, 1.0);
  const FpeGrid g = padded_grid(0.0, p, 1.0, 0.01, 1e-3);
  const auto sol = solve_fpe(0.0, p, g);
  const double var = 1.0 + sol.initial_sd * sol.initial_sd;
  double linf = 0.0;
  for (std::size_t i = 0; i < g.n_cells; ++i) {
    const double x = g.center(i);
    linf = std::max(linf, std::abs(sol.final().density[i] - normal_pdf(x / std::sqrt(var)) / std::sqrt(var)));
  }
  EXPECT_LT(linf, 1e-4);
}

TEST(Solve, TanhDriftMatchesSmoothedLaw) {
  const ProcessParams p(1.0, 1.0);
  const FpeGrid g = padded_grid(0.5, p, 1.0, 0.01, 1e-3);
  const auto sol = solve_fpe(0.5, p, g);
  EXPECT_LT(l1_gap(sol, sol.final(), 0.5, p), 1e-3);
}

TEST(Solve, ConservesMassAndPositivity) {
  const ProcessParams p(2.0, 0.8);
  const FpeGrid g = padded_grid(-0.3, p, 1.0, 0.02, 2e-3);
  SolveOptions opt;
  opt.n_snapshots = 5;
  const auto sol = solve_fpe(-0.3, p, g, opt);
  ASSERT_EQ(sol.snapshots.size(), 6u);
  EXPECT_EQ(sol.snapshots.front().time, 0.0);
  EXPECT_NEAR(sol.final().time, 1.0, 1e-12);
  EXPECT_LT(sol.max_mass_error, 1e-10);
  for (double m : sol.mass_history()) EXPECT_NEAR(m, 1.0, 1e-10);
  for (const auto& s : sol.snapshots) EXPECT_GT(s.min_density, -1e-10);
}

TEST(Solve, SymmetricStartStaysSymmetric) {
  const ProcessParams p(1.0, 1.0);
  const FpeGrid g = padded_grid(0.0, p, 1.0, 0.02, 2e-3);
  const auto sol = solve_fpe(0.0, p, g);
  const auto& d = sol.final().density;
  for (std::size_t i = 0; i < d.size(); ++i) EXPECT_NEAR(d[i], d[d.size() - 1 - i], 1e-12);
}

TEST(Solve, ConstantDriftBranch) {
  const ProcessParams p(1.0, 1.0);
  SolveOptions opt;
  opt.family = analytic::DriftFamily::plus_bias();
  const FpeGrid g = padded_grid(0.0, p, 1.0, 0.02, 2e-3);
  const auto sol = solve_fpe(0.0, p, g, opt);
  EXPECT_LT(l1_gap(sol, sol.final(), 0.0, p, opt.family), 1e-3);
}

TEST(Solve, RejectsNarrowDomain) {
  FpeGrid g;
  g.x_min = -2.0;
  g.x_max = 2.0;
  g.n_cells = 400;
  g.dt_pde = 1e-3;
  EXPECT_THROW(solve_fpe(0.0, ProcessParams(1.0, 1.0), g), std::domain_error);
}

TEST(Solve, RejectsStartOutsideDomain) {
  FpeGrid g;
  EXPECT_THROW(solve_fpe(12.0, ProcessParams(1.0, 1.0), g), std::domain_error);
}

TEST(Solve, WarnsOnLargeCourantNumber) {
  const ProcessParams p(5.0, 1.0);
  FpeGrid g = padded_grid(0.0, p, 1.0, 0.05, 0.02);
  const auto sol = solve_fpe(0.0, p, g);
  EXPECT_FALSE(sol.warnings.empty());
  const FpeGrid fine = padded_grid(0.0, p, 1.0, 0.05, 1e-3);
  EXPECT_TRUE(solve_fpe(0.0, p, fine).warnings.empty());
}

TEST(SmoothedDensity, ApproachesPointStart) {
  const ProcessParams p(1.0, 1.0);
  for (double x : {-1.0, 0.2, 1.5}) {
    EXPECT_NEAR(smoothed_density(x, 1.0, 0.3, 1e-4, p), analytic::transition_pdf({0.3, x, 1.0}, p), 1e-7);
  }
  EXPECT_THROW(smoothed_density(0.0, 1.0, 0.0, 0.0, p), std::domain_error);
}

TEST(SmoothedDensity, DriftlessIsWiderGaussian) {
  const ProcessParams p(0.0, 1.0);
  const double var = 1.0 + 0.25;
  EXPECT_NEAR(smoothed_density(0.7, 1.0, 0.0, 0.5, p), normal_pdf(0.7 / std::sqrt(var)) / std::sqrt(var), 1e-13);
}

TEST(Convergence, SecondOrder) {
  const ProcessParams p(1.0, 1.0);
  const FpeGrid base = padded_grid(0.5, p, 1.0, 0.08, 0.008);
  const auto study = fpe_convergence(0.5, p, base, 2);
  ASSERT_EQ(study.h.size(), 3u);
  EXPECT_GT(study.order, 1.8);
  EXPECT_LT(study.order, 2.2);
  EXPECT_THROW(fpe_convergence(0.5, p, base, 1), std::domain_error);
}
