#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "merged/params.hpp"
#include "merged/path.hpp"

namespace merged::stats {

struct Estimate {
  double value;
  double se;
};

struct MsdEntry {
  double t;
  double tau;
  Estimate msd;
};

/// Monte Carlo estimates at a fixed time from a fixed start.
struct EnsembleSummary {
  std::size_t n_samples = 0;
  double t = 0.0;
  double x0 = 0.0;
  Estimate mean{};
  Estimate variance{};
  /// E[tanh(kappa X_t)], which should stay at tanh(kappa x0).
  Estimate martingale{};
  std::optional<Estimate> covariance;
  std::vector<MsdEntry> msd;
};

/// Unbiased mean and variance with standard errors (variance se from the
/// fourth central moment) plus the martingale statistic. Needs n >= 100.
EnsembleSummary summarize(std::span<const double> samples, const ProcessParams& params, double t,
                          double x0);

/// Mean of (X_{t+tau} - X_t)^2 over the ensemble. Every path must carry both
/// times on its grid; needs at least 100 paths.
Estimate msd_estimate(std::span<const Path> paths, double t, double tau);

/// Sample covariance of (X_t, X_{t+tau}) with a delete-one jackknife se.
Estimate covariance_estimate(std::span<const Path> paths, double t, double tau);

/// The same estimators on already extracted position pairs.
Estimate msd_from_pairs(std::span<const double> at_t, std::span<const double> at_t_tau);
Estimate covariance_from_pairs(std::span<const double> xs, std::span<const double> ys);

enum class Metric { KS, TotalVariation, L1Histogram };

std::string_view to_string(Metric m);
/// "ks", "tv"/"total_variation", "l1"/"l1_histogram"; anything else is a
/// std::domain_error.
Metric metric_from_string(std::string_view name);

/// The transition law of the merged process from x0 after time t.
struct AnalyticLaw {
  ProcessParams params;
  double x0;
  double t;
};

using ReferenceLaw = std::variant<AnalyticLaw, std::span<const double>>;

struct DistanceOptions {
  double alpha = 0.01;       // KS significance level
  double threshold = 0.01;   // TV / L1 pass threshold
  std::size_t n_bins = 0;    // 0 picks 2 n^(1/3), clamped to [10, 400]
};

struct DistanceReport {
  Metric metric;
  double value;
  std::size_t n_samples;
  std::size_t n_reference;  // 0 for an analytic reference
  double p_value;           // KS only; NaN otherwise
  double threshold;         // alpha for KS, value threshold otherwise
  bool passed;
};

/// KS against the mixture CDF (or two-sample KS against an empirical
/// reference); TV and L1 on shared bins. Needs n >= 1000.
DistanceReport distribution_distance(std::span<const double> samples, const ReferenceLaw& reference,
                                     Metric metric, const DistanceOptions& options = {});

/// Asymptotic Kolmogorov tail probability P(D_n > d) for effective size n.
double ks_p_value(double d, double n_effective);

/// KS statistic sup |F_n - F| for samples against a CDF.
double ks_statistic(std::span<const double> samples, const std::function<double(double)>& cdf);

struct OrderFit {
  double slope;
  double intercept;
  double r2;
};

/// Least squares of log y on log x. Needs at least three strictly positive
/// pairs.
OrderFit fit_order(std::span<const double> xs, std::span<const double> ys);

struct Compatibility {
  double weighted_mean;
  double statistic;  // sum ((v_i - mean) / se_i)^2
  std::size_t dof;
  double p_value;
};

/// Chi-square test that all estimates share one value (inverse-variance
/// weighted mean). Needs at least two estimates with se > 0.
Compatibility chi_square_compatibility(std::span<const Estimate> estimates);

}  // namespace merged::stats
