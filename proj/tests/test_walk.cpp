#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "merged/analytic.hpp"
#include "merged/walk.hpp"

using namespace merged;
using namespace merged::walk;

namespace {

WalkParams wp(double dx, double dt, double xi) {
  WalkParams w;
  w.dx = dx;
  w.dt = dt;
  w.xi = xi;
  return w;
}

// Propagates the law site by site with transition probabilities taken
// literally from the cosh ratio, in extended precision.
std::map<long, long double> propagate(long start, std::size_t n, long double xi) {
  std::map<long, long double> law{{start, 1.0L}};
  for (std::size_t step = 0; step < n; ++step) {
    std::map<long, long double> next;
    for (const auto& [k, p] : law) {
      const long double denom = 2.0L * std::cosh(xi) * std::cosh(xi * k);
      next[k + 1] += p * std::cosh(xi * (k + 1)) / denom;
      next[k - 1] += p * std::cosh(xi * (k - 1)) / denom;
    }
    law = std::move(next);
  }
  return law;
}

}  // namespace

TEST(WalkParams, Validation) {
  EXPECT_THROW(wp(0.0, 1.0, 0.1).validate(), std::domain_error);
  EXPECT_THROW(wp(1.0, -1.0, 0.1).validate(), std::domain_error);
  EXPECT_THROW(wp(1.0, 1.0, -0.1).validate(), std::domain_error);
  EXPECT_NO_THROW(wp(1.0, 1.0, 0.0).validate());
}

TEST(StepProbabilities, Examples) {
  const auto zero = step_probabilities(0.0, wp(1.0, 1.0, 0.5));
  EXPECT_EQ(zero.up, 0.5);
  EXPECT_EQ(zero.down, 0.5);
  const auto unbiased = step_probabilities(3.0, wp(1.0, 1.0, 0.0));
  EXPECT_EQ(unbiased.up, 0.5);
  const auto far = step_probabilities(50.0, wp(1.0, 1.0, 0.3));
  EXPECT_NEAR(far.up, 0.64565630622576819297, 1e-15);
  EXPECT_NEAR(far.down, 0.35434369377423180703, 1e-15);
}

TEST(StepProbabilities, ConservationAndMirror) {
  for (double xi : {0.0, 0.05, 0.3, 2.0, 30.0}) {
    for (int k = -60; k <= 60; ++k) {
      const auto p = step_probabilities(0.1 * k, wp(0.1, 0.01, xi));
      EXPECT_NEAR(p.up + p.down, 1.0, 1e-15);
      const auto m = step_probabilities(-0.1 * k, wp(0.1, 0.01, xi));
      EXPECT_NEAR(p.up, m.down, 1e-15);
    }
  }
}

TEST(StepProbabilities, MatchesCoshRatio) {
  for (double xi : {0.1, 0.7, 1.5}) {
    for (int k = -20; k <= 20; ++k) {
      const long double x = xi;
      const long double ref =
          std::cosh(x * (k + 1)) / (2.0L * std::cosh(x) * std::cosh(x * k));
      EXPECT_NEAR(step_probabilities(k, wp(1.0, 1.0, xi)).up / static_cast<double>(ref), 1.0, 1e-14);
    }
  }
}

TEST(StepProbabilities, FiniteFarFromOrigin) {
  const auto p = step_probabilities(1e6, wp(1.0, 1.0, 50.0));
  EXPECT_TRUE(std::isfinite(p.up));
  EXPECT_TRUE(std::isfinite(p.down));
  EXPECT_GT(p.down, 0.0);
  EXPECT_NEAR(p.down / std::exp(-100.0), 1.0, 1e-10);
}

TEST(LoopProduct, Examples) {
  EXPECT_EQ(loop_product(0.0, wp(1.0, 1.0, 0.0)), 0.25);
  EXPECT_NEAR(loop_product(0.0, wp(1.0, 1.0, 0.5)), 0.19661193324148188, 1e-15);
  EXPECT_NEAR(loop_product(7.0, wp(1.0, 1.0, 2.0)), 0.017662706213291118, 1e-15);
}

TEST(LoopProduct, SiteIndependent) {
  for (double xi : {0.1, 0.5, 2.0, 5.0}) {
    const double ref = 0.25 / (std::cosh(xi) * std::cosh(xi));
    for (int k = -100; k <= 100; ++k) {
      EXPECT_NEAR(loop_product(0.5 * k, wp(0.5, 1.0, xi)) / ref, 1.0, 1e-13);
    }
  }
}

TEST(ExactDistribution, TwoStepExamples) {
  const auto d0 = exact_walk_distribution(0.0, 2, wp(1.0, 1.0, 0.0));
  EXPECT_NEAR(d0.at_offset(-2), 0.25, 1e-15);
  EXPECT_NEAR(d0.at_offset(0), 0.5, 1e-15);
  EXPECT_NEAR(d0.at_offset(2), 0.25, 1e-15);
  EXPECT_EQ(d0.at_offset(1), 0.0);

  const double xi = 0.5;
  const auto d = exact_walk_distribution(0.0, 2, wp(1.0, 1.0, xi));
  const double c = std::cosh(xi), c2 = std::cosh(2 * xi);
  EXPECT_NEAR(d.at_offset(2), c2 / (4 * c * c), 1e-15);
  EXPECT_NEAR(d.at_offset(-2), c2 / (4 * c * c), 1e-15);
  EXPECT_NEAR(d.at_offset(0), 1.0 / (2 * c * c), 1e-15);
  EXPECT_NEAR(d.total(), 1.0, 1e-15);
}

TEST(ExactDistribution, MatchesExtendedPrecisionPropagation) {
  for (double xi : {0.2, 0.9}) {
    for (long start : {0L, 3L, -5L}) {
      const std::size_t n = 40;
      const auto law = propagate(start, n, xi);
      const auto d = exact_walk_distribution(static_cast<double>(start), n, wp(1.0, 1.0, xi));
      ASSERT_EQ(d.size(), n + 1);
      for (std::size_t i = 0; i < d.size(); ++i) {
        const long double ref = law.at(start + d.offset(i));
        EXPECT_NEAR(d.probability(i), static_cast<double>(ref), 1e-14 + 1e-12 * static_cast<double>(ref));
      }
    }
  }
}

TEST(ExactDistribution, ParityAndNormalization) {
  const auto d = exact_walk_distribution(0.0, 7, wp(0.5, 1.0, 0.4));
  EXPECT_EQ(d.size(), 8u);
  for (std::size_t i = 0; i < d.size(); ++i) EXPECT_NE(d.offset(i) % 2, 0);
  EXPECT_NEAR(d.total(), 1.0, 1e-14);
  EXPECT_EQ(d.at_offset(0), 0.0);
  EXPECT_EQ(d.at_offset(9), 0.0);
}

TEST(ExactDistribution, UnbiasedMeanIsStart) {
  const auto d = exact_walk_distribution(2.0, 30, wp(0.1, 1.0, 0.0));
  double mean = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) mean += d.probability(i) * d.position(i);
  EXPECT_NEAR(mean, 2.0, 1e-13);
}

TEST(ExactDistribution, LargeBiasStaysFinite) {
  const auto d = exact_walk_distribution(0.0, 500, wp(1.0, 1.0, 40.0));
  for (double p : d.probabilities()) EXPECT_TRUE(std::isfinite(p));
  EXPECT_NEAR(d.total(), 1.0, 1e-10);
}

TEST(MonteCarlo, TerminalMatchesExactLaw) {
  const WalkParams w = wp(1.0, 1.0, 0.2);
  const std::size_t n_steps = 1000, n_paths = 500000;
  const auto offsets = walk_terminal_ensemble(0.0, n_steps, w, n_paths, 31, 0);
  std::map<std::int64_t, double> counts;
  for (auto k : offsets) counts[k] += 1.0;
  const auto d = exact_walk_distribution(0.0, n_steps, w);
  double tv = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto it = counts.find(d.offset(i));
    const double emp = it == counts.end() ? 0.0 : it->second / static_cast<double>(n_paths);
    tv += std::abs(emp - d.probability(i));
  }
  EXPECT_LT(0.5 * tv, 0.02);
}

TEST(MonteCarlo, PathAndTerminalAgree) {
  const WalkParams w = wp(0.1, 0.01, 0.3);
  RngStream a(4, 2), b(4, 2);
  const Path p = walk_path(0.0, 25, w, a);
  const auto k = walk_terminal_offset(0.0, 25, w, b);
  EXPECT_NEAR(p.end(), 0.1 * static_cast<double>(k), 1e-12);
  EXPECT_EQ(p.size(), 26u);
  EXPECT_EQ(p.provenance(), Provenance::Walk);
  EXPECT_NEAR(p.times().back(), 0.25, 1e-12);
}

TEST(MonteCarlo, IndependentOfThreads) {
  const WalkParams w = wp(1.0, 1.0, 0.4);
  EXPECT_EQ(walk_terminal_ensemble(0.0, 50, w, 2000, 9, 1), walk_terminal_ensemble(0.0, 50, w, 2000, 9, 3));
}

TEST(Continuum, ParameterMapping) {
  const auto p = continuum_params(wp(0.1, 0.01, 0.05));
  EXPECT_NEAR(p.sigma(), 1.0, 1e-15);
  EXPECT_NEAR(p.kappa(), 0.5, 1e-15);
  EXPECT_NEAR(p.v_d(), 0.5, 1e-15);
  const auto back = walk_params_for(ProcessParams(1.0, 1.0), 0.1);
  EXPECT_NEAR(back.dt, 0.01, 1e-15);
  EXPECT_NEAR(back.xi, 0.1, 1e-15);
  EXPECT_EQ(continuum_params(wp(0.1, 0.01, 0.0)).v_d(), 0.0);
}

TEST(Continuum, DistanceShrinksWithSpacing) {
  const ProcessParams target(1.0, 1.0);
  std::vector<WalkParams> seq;
  for (double dx : {0.2, 0.1, 0.05}) seq.push_back(walk_params_for(target, dx));
  const auto pts = continuum_convergence(0.0, 1.0, seq, target);
  ASSERT_EQ(pts.size(), 3u);
  EXPECT_GT(pts[0].distance, pts[1].distance);
  EXPECT_GT(pts[1].distance, pts[2].distance);
  EXPECT_LT(pts[2].distance, 0.01);
}

TEST(Continuum, RejectsMismatchedSequence) {
  const ProcessParams target(1.0, 1.0);
  std::vector<WalkParams> seq = {walk_params_for(target, 0.1), walk_params_for(ProcessParams(2.0, 1.0), 0.05)};
  EXPECT_THROW(continuum_convergence(0.0, 1.0, seq, target), std::domain_error);
}

TEST(ExactDistribution, LatticeMartingale) {
  for (double xi : {0.1, 0.5, 1.0}) {
    for (long k0 : {0L, 2L, -3L}) {
      for (std::size_t n = 1; n <= 20; ++n) {
        const auto d = exact_walk_distribution(0.5 * k0, n, wp(0.5, 1.0, xi));
        double m = 0.0;
        for (std::size_t i = 0; i < d.size(); ++i) m += std::tanh(xi * (k0 + d.offset(i))) * d.probability(i);
        EXPECT_NEAR(m, std::tanh(xi * k0), 1e-12);
      }
    }
  }
}

TEST(ExactDistribution, LatticeChapmanKolmogorov) {
  const WalkParams w = wp(1.0, 1.0, 0.7);
  const auto first = exact_walk_distribution(1.0, 5, w);
  const auto direct = exact_walk_distribution(1.0, 9, w);
  std::map<std::int64_t, double> composed;
  for (std::size_t i = 0; i < first.size(); ++i) {
    const auto second = exact_walk_distribution(first.position(i), 4, w);
    for (std::size_t j = 0; j < second.size(); ++j) {
      composed[first.offset(i) + second.offset(j)] += first.probability(i) * second.probability(j);
    }
  }
  for (const auto& [k, p] : composed) EXPECT_NEAR(p, direct.at_offset(k), 1e-13);
}
