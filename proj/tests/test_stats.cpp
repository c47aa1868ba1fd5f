#include <gtest/gtest.h>

#include <cmath>

#include "merged/analytic.hpp"
#include "merged/numerics.hpp"
#include "merged/rng.hpp"
#include "merged/stats.hpp"

using namespace merged;
using namespace merged::stats;

namespace {

std::vector<double> normals(std::size_t n, std::uint64_t seed, double mean = 0.0, double sd = 1.0) {
  RngStream rng(seed, 0);
  std::vector<double> out(n);
  for (auto& v : out) v = mean + sd * rng.normal();
  return out;
}

// Kolmogorov distance d whose scaled value is exactly lambda for sample size n.
double d_for_lambda(double lambda, double n) {
  const double root = std::sqrt(n);
  return lambda / (root + 0.12 + 0.11 / root);
}

double sample_cov(std::span<const double> a, std::span<const double> b) {
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - ma) * (b[i] - mb);
  return s / (n - 1);
}

}  // namespace

TEST(Summarize, NeedsEnoughSamples) {
  std::vector<double> few(99, 1.0);
  EXPECT_THROW(summarize(few, ProcessParams(1.0, 1.0), 1.0, 0.0), std::domain_error);
}

TEST(Summarize, ConstantSamples) {
  std::vector<double> xs(200, 2.5);
  const auto s = summarize(xs, ProcessParams(1.0, 1.0), 1.0, 0.0);
  EXPECT_EQ(s.n_samples, 200u);
  EXPECT_EQ(s.mean.value, 2.5);
  EXPECT_EQ(s.mean.se, 0.0);
  EXPECT_EQ(s.variance.value, 0.0);
  EXPECT_EQ(s.variance.se, 0.0);
  EXPECT_NEAR(s.martingale.value, std::tanh(2.5), 1e-14);
}

TEST(Summarize, StandardErrorsScaleWithSampleSize) {
  const ProcessParams p(1.0, 1.0);
  const auto small = summarize(normals(10000, 1), p, 1.0, 0.0);
  const auto large = summarize(normals(40000, 2), p, 1.0, 0.0);
  EXPECT_NEAR(small.mean.se / large.mean.se, 2.0, 0.05);
  EXPECT_NEAR(small.variance.se / large.variance.se, 2.0, 0.1);
  // Variance se for a normal sample is about sigma^2 sqrt(2 / n).
  EXPECT_NEAR(large.variance.se, std::sqrt(2.0 / 40000.0), 0.05 * std::sqrt(2.0 / 40000.0));
}

TEST(PairEstimators, MsdOfIdenticalPairsIsZero) {
  const auto a = normals(500, 3);
  const auto m = msd_from_pairs(a, a);
  EXPECT_EQ(m.value, 0.0);
  EXPECT_EQ(m.se, 0.0);
}

TEST(PairEstimators, CovarianceAtZeroLagIsVariance) {
  const auto a = normals(1000, 4, 1.0, 2.0);
  const auto s = summarize(a, ProcessParams(1.0, 1.0), 1.0, 0.0);
  EXPECT_NEAR(covariance_from_pairs(a, a).value, s.variance.value, 1e-13);
}

TEST(PairEstimators, JackknifeMatchesBruteForce) {
  const auto a = normals(300, 5);
  auto b = normals(300, 6);
  for (std::size_t i = 0; i < b.size(); ++i) b[i] += 0.6 * a[i];
  const auto est = covariance_from_pairs(a, b);
  EXPECT_NEAR(est.value, sample_cov(a, b), 1e-13);

  const std::size_t n = a.size();
  std::vector<double> reps(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::vector<double> ra, rb;
    for (std::size_t i = 0; i < n; ++i) {
      if (i == k) continue;
      ra.push_back(a[i]);
      rb.push_back(b[i]);
    }
    reps[k] = sample_cov(ra, rb);
  }
  double mean = 0;
  for (double r : reps) mean += r;
  mean /= static_cast<double>(n);
  double ss = 0;
  for (double r : reps) ss += (r - mean) * (r - mean);
  const double se = std::sqrt(static_cast<double>(n - 1) / static_cast<double>(n) * ss);
  EXPECT_NEAR(est.se / se, 1.0, 1e-9);
}

TEST(PairEstimators, RejectMismatchedOrShortInput) {
  std::vector<double> a(100, 0.0), b(101, 0.0), c(50, 0.0);
  EXPECT_THROW(msd_from_pairs(a, b), std::domain_error);
  EXPECT_THROW(covariance_from_pairs(c, c), std::domain_error);
}

TEST(PathEstimators, ExtractGridTimes) {
  std::vector<Path> paths;
  for (int i = 0; i < 100; ++i) {
    const double x = 0.01 * i;
    paths.emplace_back(std::vector<double>{0.0, 0.5, 1.0}, std::vector<double>{0.0, x, 3.0 * x},
                       Provenance::Exact);
  }
  const auto m = msd_estimate(paths, 0.5, 0.5);
  double ref = 0;
  for (int i = 0; i < 100; ++i) ref += 4.0 * 0.0001 * i * i;
  EXPECT_NEAR(m.value, ref / 100.0, 1e-14);
  EXPECT_EQ(msd_estimate(paths, 0.5, 0.0).value, 0.0);
  EXPECT_THROW(msd_estimate(paths, 0.25, 0.5), std::domain_error);
  EXPECT_THROW(covariance_estimate(paths, 0.5, -0.1), std::domain_error);
}

TEST(Metric, Names) {
  EXPECT_EQ(metric_from_string("ks"), Metric::KS);
  EXPECT_EQ(metric_from_string("tv"), Metric::TotalVariation);
  EXPECT_EQ(metric_from_string("total_variation"), Metric::TotalVariation);
  EXPECT_EQ(metric_from_string("l1"), Metric::L1Histogram);
  EXPECT_EQ(to_string(Metric::KS), "ks");
  EXPECT_THROW(metric_from_string("wasserstein"), std::domain_error);
}

TEST(KsPValue, KolmogorovTail) {
  EXPECT_NEAR(ks_p_value(d_for_lambda(1.0, 100), 100), 0.269999671677354521, 1e-6);
  EXPECT_NEAR(ks_p_value(d_for_lambda(1.36, 100), 100), 0.049485876755377884, 1e-6);
  EXPECT_NEAR(ks_p_value(d_for_lambda(0.5, 100), 100), 0.963945243664875094, 1e-6);
  EXPECT_NEAR(ks_p_value(d_for_lambda(2.0, 100), 100), 0.000670925255779695, 1e-9);
  EXPECT_EQ(ks_p_value(0.0, 100), 1.0);
  EXPECT_NEAR(ks_p_value(1.0, 1e6), 0.0, 1e-300);
}

TEST(KsPValue, ContinuousAcrossSeriesSwitch) {
  const double below = ks_p_value(d_for_lambda(1.18 - 1e-9, 1e4), 1e4);
  const double above = ks_p_value(d_for_lambda(1.18 + 1e-9, 1e4), 1e4);
  EXPECT_NEAR(below, above, 1e-8);
}

TEST(Distance, KsCalibratedUnderNull) {
  const ProcessParams p(0.0, 1.0);
  int rejections = 0;
  for (int rep = 0; rep < 100; ++rep) {
    const auto xs = normals(2000, 1000 + rep);
    const auto r = distribution_distance(xs, AnalyticLaw{p, 0.0, 1.0}, Metric::KS);
    if (!r.passed) ++rejections;
  }
  EXPECT_LE(rejections, 4);
}

TEST(Distance, KsRejectsShiftedSample) {
  const auto xs = normals(10000, 7, 0.1);
  const auto r = distribution_distance(xs, AnalyticLaw{ProcessParams(0.0, 1.0), 0.0, 1.0}, Metric::KS);
  EXPECT_FALSE(r.passed);
  EXPECT_EQ(r.n_reference, 0u);
  EXPECT_EQ(r.threshold, 0.01);
}

TEST(Distance, TwoSampleKs) {
  const auto a = normals(5000, 8);
  const auto b = normals(5000, 9);
  const auto r = distribution_distance(a, std::span<const double>(b), Metric::KS);
  EXPECT_TRUE(r.passed);
  EXPECT_EQ(r.n_reference, 5000u);
}

TEST(Distance, TotalVariationIsHalfL1) {
  const auto xs = normals(20000, 10);
  const AnalyticLaw law{ProcessParams(0.0, 1.0), 0.0, 1.0};
  DistanceOptions opt;
  opt.n_bins = 40;
  const auto tv = distribution_distance(xs, law, Metric::TotalVariation, opt);
  const auto l1 = distribution_distance(xs, law, Metric::L1Histogram, opt);
  EXPECT_NEAR(tv.value, 0.5 * l1.value, 1e-15);
  EXPECT_TRUE(std::isnan(tv.p_value));
  EXPECT_LT(tv.value, 0.03);
  const auto shifted = normals(20000, 11, 1.0);
  EXPECT_GT(distribution_distance(shifted, law, Metric::TotalVariation, opt).value, 0.3);
}

TEST(Distance, NeedsEnoughSamples) {
  const auto xs = normals(999, 12);
  EXPECT_THROW(distribution_distance(xs, AnalyticLaw{ProcessParams(0.0, 1.0), 0.0, 1.0}, Metric::KS),
               std::domain_error);
}

TEST(FitOrder, RecoversPowerLaw) {
  const std::vector<double> h = {0.1, 0.05, 0.025, 0.0125};
  std::vector<double> e;
  for (double v : h) e.push_back(3.0 * v * v);
  const auto f = fit_order(h, e);
  EXPECT_NEAR(f.slope, 2.0, 1e-12);
  EXPECT_NEAR(f.intercept, std::log(3.0), 1e-12);
  EXPECT_NEAR(f.r2, 1.0, 1e-12);
}

TEST(FitOrder, RejectsBadInput) {
  const std::vector<double> two = {1.0, 2.0};
  EXPECT_THROW(fit_order(two, two), std::domain_error);
  const std::vector<double> xs = {1.0, 2.0, 3.0}, neg = {1.0, -1.0, 2.0};
  EXPECT_THROW(fit_order(xs, neg), std::domain_error);
  const std::vector<double> same = {1.0, 1.0, 1.0};
  EXPECT_THROW(fit_order(same, xs), std::domain_error);
}

TEST(ChiSquare, CompatibleAndIncompatible) {
  const std::vector<Estimate> same = {{1.0, 0.1}, {1.05, 0.1}, {0.97, 0.1}};
  const auto ok = chi_square_compatibility(same);
  EXPECT_EQ(ok.dof, 2u);
  EXPECT_NEAR(ok.weighted_mean, (1.0 + 1.05 + 0.97) / 3.0, 1e-14);
  EXPECT_GT(ok.p_value, 0.5);
  const std::vector<Estimate> apart = {{1.0, 0.01}, {2.0, 0.01}};
  EXPECT_LT(chi_square_compatibility(apart).p_value, 1e-10);
  // Statistic 2 on 2 degrees of freedom has upper tail exp(-1).
  const std::vector<Estimate> known = {{0.0, 1.0}, {2.0, 1.0}, {1.0, 1.0}};
  const auto k = chi_square_compatibility(known);
  EXPECT_NEAR(k.statistic, 2.0, 1e-14);
  EXPECT_NEAR(k.p_value, std::exp(-1.0), 1e-12);
  const std::vector<Estimate> zero = {{0.0, 0.0}, {1.0, 1.0}};
  EXPECT_THROW(chi_square_compatibility(zero), std::domain_error);
}
