#include "merged/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include <boost/math/distributions/chi_squared.hpp>

#include "merged/analytic.hpp"
#include "merged/numerics.hpp"

namespace merged::stats {

namespace {

double mean_of(std::span<const double> v) {
  return pairwise_sum(v) / static_cast<double>(v.size());
}

std::vector<double> centered(std::span<const double> v, double mean) {
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] - mean;
  return out;
}

void require_pairs(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::domain_error("paired samples differ in length");
  if (a.size() < 100) throw std::domain_error("two-time estimators need at least 100 paths");
}

std::pair<std::vector<double>, std::vector<double>> extract(std::span<const Path> paths, double t,
                                                            double tau) {
  if (tau < 0.0) throw std::domain_error("tau must be >= 0");
  std::vector<double> at_t(paths.size()), at_later(paths.size());
  for (std::size_t i = 0; i < paths.size(); ++i) {
    const auto i_t = paths[i].find_time(t);
    const auto i_later = paths[i].find_time(t + tau);
    if (!i_t || !i_later) {
      throw std::domain_error("path " + std::to_string(i) + " has no grid point at t = " +
                              std::to_string(t) + " or t + tau = " + std::to_string(t + tau));
    }
    at_t[i] = paths[i].positions()[*i_t];
    at_later[i] = paths[i].positions()[*i_later];
  }
  return {std::move(at_t), std::move(at_later)};
}

}  // namespace

EnsembleSummary summarize(std::span<const double> samples, const ProcessParams& params, double t,
                          double x0) {
  const std::size_t n = samples.size();
  if (n < 100) {
    throw std::domain_error("summarize needs at least 100 samples, got " + std::to_string(n));
  }
  const double nd = static_cast<double>(n);
  const double mean = mean_of(samples);
  const auto dev = centered(samples, mean);

  std::vector<double> sq(n), quart(n);
  for (std::size_t i = 0; i < n; ++i) {
    sq[i] = dev[i] * dev[i];
    quart[i] = sq[i] * sq[i];
  }
  const double var = pairwise_sum(sq) / (nd - 1.0);
  const double m4 = pairwise_sum(quart) / nd;
  const double var_se2 = (m4 - (nd - 3.0) / (nd - 1.0) * var * var) / nd;

  std::vector<double> mart(n);
  const double kappa = params.kappa();
  for (std::size_t i = 0; i < n; ++i) mart[i] = std::tanh(kappa * samples[i]);
  const auto m = mean_and_se(mart);

  EnsembleSummary out;
  out.n_samples = n;
  out.t = t;
  out.x0 = x0;
  out.mean = {mean, std::sqrt(var / nd)};
  out.variance = {var, std::sqrt(std::max(var_se2, 0.0))};
  out.martingale = {m.mean, m.se};
  return out;
}

Estimate msd_from_pairs(std::span<const double> at_t, std::span<const double> at_t_tau) {
  require_pairs(at_t, at_t_tau);
  std::vector<double> sq(at_t.size());
  for (std::size_t i = 0; i < sq.size(); ++i) {
    const double d = at_t_tau[i] - at_t[i];
    sq[i] = d * d;
  }
  const auto m = mean_and_se(sq);
  return {m.mean, m.se};
}

Estimate covariance_from_pairs(std::span<const double> xs, std::span<const double> ys) {
  require_pairs(xs, ys);
  const std::size_t n = xs.size();
  const double nd = static_cast<double>(n);
  const auto a = centered(xs, mean_of(xs));
  const auto b = centered(ys, mean_of(ys));
  std::vector<double> prod(n);
  for (std::size_t i = 0; i < n; ++i) prod[i] = a[i] * b[i];
  const double sum = pairwise_sum(prod);
  const double cov = sum / (nd - 1.0);
  // Delete-one replicates are (S - n a_i b_i / (n - 1)) / (n - 2); their
  // spread reduces to the sum below.
  const double mean_prod = sum / nd;
  std::vector<double> dev2(n);
  for (std::size_t i = 0; i < n; ++i) dev2[i] = (prod[i] - mean_prod) * (prod[i] - mean_prod);
  const double jack_var = nd / ((nd - 1.0) * (nd - 2.0) * (nd - 2.0)) * pairwise_sum(dev2);
  return {cov, std::sqrt(jack_var)};
}

Estimate msd_estimate(std::span<const Path> paths, double t, double tau) {
  const auto [a, b] = extract(paths, t, tau);
  return msd_from_pairs(a, b);
}

Estimate covariance_estimate(std::span<const Path> paths, double t, double tau) {
  const auto [a, b] = extract(paths, t, tau);
  return covariance_from_pairs(a, b);
}

std::string_view to_string(Metric m) {
  switch (m) {
    case Metric::KS: return "ks";
    case Metric::TotalVariation: return "total_variation";
    case Metric::L1Histogram: return "l1_histogram";
  }
  return "unknown";
}

Metric metric_from_string(std::string_view name) {
  if (name == "ks") return Metric::KS;
  if (name == "tv" || name == "total_variation") return Metric::TotalVariation;
  if (name == "l1" || name == "l1_histogram") return Metric::L1Histogram;
  throw std::domain_error("unknown distance metric '" + std::string(name) + "'");
}

double ks_p_value(double d, double n_effective) {
  if (d <= 0.0) return 1.0;
  const double root = std::sqrt(n_effective);
  const double lambda = (root + 0.12 + 0.11 / root) * d;
  if (lambda < 1.18) {
    // Small-lambda form of the Kolmogorov CDF converges quickly here.
    const double y = std::exp(-std::numbers::pi * std::numbers::pi / (8.0 * lambda * lambda));
    const double y8 = std::pow(y, 8.0);
    const double cdf = std::sqrt(2.0 * std::numbers::pi) / lambda * y *
                       (1.0 + y8 * (1.0 + y8 * y8 * (1.0 + y8 * y8 * y8)));
    return std::clamp(1.0 - cdf, 0.0, 1.0);
  }
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? 1.0 : -1.0) * term;
    if (term < 1e-17) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

double ks_statistic(std::span<const double> samples, const std::function<double(double)>& cdf) {
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = cdf(sorted[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

namespace {

double two_sample_ks(std::span<const double> a, std::span<const double> b) {
  std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double nx = static_cast<double>(x.size()), ny = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / nx - static_cast<double>(j) / ny));
  }
  return d;
}

// Bin masses of the samples and of the reference on a shared grid, plus the
// reference mass falling outside it.
struct Binned {
  std::vector<double> sample_mass;
  std::vector<double> reference_mass;
  double outside = 0.0;
};

std::vector<double> histogram(std::span<const double> values, double lo, double width,
                              std::size_t bins) {
  std::vector<double> mass(bins, 0.0);
  const double weight = 1.0 / static_cast<double>(values.size());
  for (double v : values) {
    auto k = static_cast<std::ptrdiff_t>(std::floor((v - lo) / width));
    k = std::clamp<std::ptrdiff_t>(k, 0, static_cast<std::ptrdiff_t>(bins) - 1);
    mass[static_cast<std::size_t>(k)] += weight;
  }
  return mass;
}

Binned bin_both(std::span<const double> samples, const ReferenceLaw& reference, std::size_t bins) {
  double lo = *std::min_element(samples.begin(), samples.end());
  double hi = *std::max_element(samples.begin(), samples.end());
  if (const auto* emp = std::get_if<std::span<const double>>(&reference)) {
    lo = std::min(lo, *std::min_element(emp->begin(), emp->end()));
    hi = std::max(hi, *std::max_element(emp->begin(), emp->end()));
  }
  if (hi <= lo) hi = lo + 1.0;
  const double width = (hi - lo) / static_cast<double>(bins);
  Binned out;
  out.sample_mass = histogram(samples, lo, width, bins);
  if (const auto* emp = std::get_if<std::span<const double>>(&reference)) {
    out.reference_mass = histogram(*emp, lo, width, bins);
  } else {
    const auto& law = std::get<AnalyticLaw>(reference);
    auto cdf = [&](double x) { return analytic::transition_cdf({law.x0, x, law.t}, law.params); };
    out.reference_mass.resize(bins);
    double prev = cdf(lo);
    out.outside = prev;
    for (std::size_t k = 0; k < bins; ++k) {
      const double next = cdf(lo + static_cast<double>(k + 1) * width);
      out.reference_mass[k] = next - prev;
      prev = next;
    }
    out.outside += std::max(0.0, 1.0 - prev);
  }
  return out;
}

}  // namespace

DistanceReport distribution_distance(std::span<const double> samples, const ReferenceLaw& reference,
                                     Metric metric, const DistanceOptions& options) {
  const std::size_t n = samples.size();
  if (n < 1000) throw std::domain_error("distribution distance needs at least 1000 samples");
  std::size_t n_ref = 0;
  if (const auto* emp = std::get_if<std::span<const double>>(&reference)) {
    n_ref = emp->size();
    if (n_ref < 1000) throw std::domain_error("empirical reference needs at least 1000 samples");
  }

  DistanceReport report{metric, 0.0, n, n_ref, std::numeric_limits<double>::quiet_NaN(),
                        metric == Metric::KS ? options.alpha : options.threshold, false};
  switch (metric) {
    case Metric::KS: {
      double n_eff = static_cast<double>(n);
      if (n_ref > 0) {
        report.value = two_sample_ks(samples, std::get<std::span<const double>>(reference));
        n_eff = static_cast<double>(n) * static_cast<double>(n_ref) /
                static_cast<double>(n + n_ref);
      } else {
        const auto& law = std::get<AnalyticLaw>(reference);
        report.value = ks_statistic(samples, [&](double x) {
          return analytic::transition_cdf({law.x0, x, law.t}, law.params);
        });
      }
      report.p_value = ks_p_value(report.value, n_eff);
      report.passed = report.p_value >= options.alpha;
      break;
    }
    case Metric::TotalVariation:
    case Metric::L1Histogram: {
      const std::size_t bins =
          options.n_bins > 0
              ? options.n_bins
              : std::clamp<std::size_t>(
                    static_cast<std::size_t>(std::ceil(2.0 * std::cbrt(static_cast<double>(n)))),
                    10, 400);
      const auto binned = bin_both(samples, reference, bins);
      std::vector<double> gaps(bins);
      for (std::size_t k = 0; k < bins; ++k) {
        gaps[k] = std::abs(binned.sample_mass[k] - binned.reference_mass[k]);
      }
      const double l1 = pairwise_sum(gaps) + binned.outside;
      report.value = metric == Metric::TotalVariation ? 0.5 * l1 : l1;
      report.passed = report.value <= options.threshold;
      break;
    }
  }
  return report;
}

OrderFit fit_order(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw std::domain_error("fit_order needs equal-length inputs");
  if (xs.size() < 3) throw std::domain_error("fit_order needs at least three points");
  const std::size_t n = xs.size();
  std::vector<double> lx(n), ly(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(xs[i] > 0.0) || !(ys[i] > 0.0)) {
      throw std::domain_error("fit_order needs strictly positive values");
    }
    lx[i] = std::log(xs[i]);
    ly[i] = std::log(ys[i]);
  }
  const double mx = mean_of(lx), my = mean_of(ly);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  if (sxx == 0.0) throw std::domain_error("fit_order needs at least two distinct x values");
  const double slope = sxy / sxx;
  const double r2 = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  return {slope, my - slope * mx, r2};
}

Compatibility chi_square_compatibility(std::span<const Estimate> estimates) {
  if (estimates.size() < 2) throw std::domain_error("compatibility test needs two estimates");
  double wsum = 0.0, wvsum = 0.0;
  for (const auto& e : estimates) {
    if (!(e.se > 0.0)) throw std::domain_error("compatibility test needs se > 0");
    const double w = 1.0 / (e.se * e.se);
    wsum += w;
    wvsum += w * e.value;
  }
  const double mean = wvsum / wsum;
  double chi2 = 0.0;
  for (const auto& e : estimates) {
    const double z = (e.value - mean) / e.se;
    chi2 += z * z;
  }
  const std::size_t dof = estimates.size() - 1;
  const boost::math::chi_squared dist(static_cast<double>(dof));
  return {mean, chi2, dof, boost::math::cdf(boost::math::complement(dist, chi2))};
}

}  // namespace merged::stats
