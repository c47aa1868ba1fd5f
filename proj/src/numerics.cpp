#include "merged/numerics.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace merged {

double pairwise_sum(std::span<const double> values) {
  constexpr std::size_t kBlock = 128;
  if (values.size() <= kBlock) {
    double acc = 0.0;
    for (double v : values) acc += v;
    return acc;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

MeanSe mean_and_se(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n < 2) throw std::domain_error("mean_and_se needs at least two values");
  const double mean = pairwise_sum(values) / static_cast<double>(n);
  std::vector<double> sq(n);
  for (std::size_t i = 0; i < n; ++i) sq[i] = (values[i] - mean) * (values[i] - mean);
  const double var = pairwise_sum(sq) / static_cast<double>(n - 1);
  return {mean, std::sqrt(var / static_cast<double>(n))};
}

// Physicists' Hermite roots by Newton iteration on the orthonormal
// recurrence, then rescaled to the standard normal weight.
GaussHermiteRule::GaussHermiteRule(int n_points) {
  if (n_points < 1) throw std::domain_error("Gauss-Hermite rule needs at least one point");
  const int n = n_points;
  const double pim4 = std::pow(std::numbers::pi, -0.25);
  std::vector<double> x(n), w(n);
  double z = 0.0;
  for (int i = 0; i < (n + 1) / 2; ++i) {
    if (i == 0) {
      z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -1.0 / 6.0);
    } else if (i == 1) {
      z -= 1.14 * std::pow(static_cast<double>(n), 0.426) / z;
    } else if (i == 2) {
      z = 1.86 * z - 0.86 * x[0];
    } else if (i == 3) {
      z = 1.91 * z - 0.91 * x[1];
    } else {
      z = 2.0 * z - x[i - 2];
    }
    double pp = 0.0;
    bool converged = false;
    for (int iter = 0; iter < 100; ++iter) {
      double p1 = pim4, p2 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = z * std::sqrt(2.0 / (j + 1)) * p2 - std::sqrt(static_cast<double>(j) / (j + 1)) * p3;
      }
      pp = std::sqrt(2.0 * n) * p2;
      const double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) <= 1e-15 * std::max(1.0, std::abs(z))) {
        converged = true;
        break;
      }
    }
    if (!converged) throw NumericalError("Gauss-Hermite root did not converge", z, 0.0);
    x[i] = z;
    x[n - 1 - i] = -z;
    w[i] = 2.0 / (pp * pp);
    w[n - 1 - i] = w[i];
  }
  nodes.resize(n);
  weights.resize(n);
  for (int i = 0; i < n; ++i) {
    nodes[i] = x[n - 1 - i] * std::numbers::sqrt2;
    weights[i] = w[n - 1 - i] / std::sqrt(std::numbers::pi);
  }
}

QuadratureResult integrate(const std::function<double(double)>& f, double a, double b,
                           double rel_tol, double abs_tol) {
  double error = 0.0;
  double l1 = 0.0;
  const double value = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      f, a, b, 30, rel_tol, &error, &l1);
  if (!std::isfinite(value) || error > std::max(abs_tol, rel_tol * std::abs(value))) {
    throw NumericalError("adaptive quadrature did not reach tolerance on [" + std::to_string(a) +
                             ", " + std::to_string(b) + "]",
                         value, error);
  }
  return {value, error};
}

unsigned default_threads() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1u : hw;
}

}  // namespace merged
