#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace merged {

/// Raised when an iterative numerical method misses its tolerance. Carries
/// the best estimate reached.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, double estimate, double error_estimate)
      : std::runtime_error(what), estimate_(estimate), error_estimate_(error_estimate) {}
  double estimate() const noexcept { return estimate_; }
  double error_estimate() const noexcept { return error_estimate_; }

 private:
  double estimate_;
  double error_estimate_;
};

/// log(cosh(z)) without overflow: |z| + log1p(exp(-2|z|)) - log 2.
inline double logcosh(double z) noexcept {
  const double a = std::abs(z);
  return a + std::log1p(std::exp(-2.0 * a)) - std::numbers::ln2;
}

/// 1 / (1 + exp(-z)), evaluated without overflow on either side.
inline double logistic(double z) noexcept {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

/// 1 - tanh(a) for a >= 0 with full relative accuracy.
inline double one_minus_tanh(double a) noexcept {
  const double e = std::exp(-2.0 * a);
  return 2.0 * e / (1.0 + e);
}

inline double normal_pdf(double z) noexcept {
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

inline double normal_cdf(double z) noexcept { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

/// Recursive pairwise summation; the result depends only on the order of
/// the input, never on how the caller scheduled the work that produced it.
double pairwise_sum(std::span<const double> values);

struct MeanSe {
  double mean;
  double se;
};

/// Sample mean and its standard error s / sqrt(n), both from pairwise sums.
MeanSe mean_and_se(std::span<const double> values);

/// Nodes and weights for E[g(Z)], Z ~ N(0, 1): sum_i weight[i] g(node[i]).
struct GaussHermiteRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  explicit GaussHermiteRule(int n_points);

  template <class F>
  double expectation(F&& g) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) acc += weights[i] * g(nodes[i]);
    return acc;
  }
};

struct QuadratureResult {
  double value;
  double error_estimate;
};

/// Adaptive Gauss-Kronrod (61 point) integration on [a, b]. Throws
/// NumericalError when the error estimate exceeds max(abs_tol, rel_tol |I|).
QuadratureResult integrate(const std::function<double(double)>& f, double a, double b,
                           double rel_tol = 1e-13, double abs_tol = 1e-15);

/// Worker count to use when the caller passes 0.
unsigned default_threads();

/// Calls body(i) for every i in [0, n) using `threads` workers over
/// contiguous blocks. Each index is visited exactly once, so any per-index
/// output is independent of the worker count.
template <class Body>
void parallel_for(std::size_t n, unsigned threads, Body&& body) {
  if (threads == 0) threads = default_threads();
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(n, 1)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> workers;
  workers.reserve(threads);
  std::vector<std::exception_ptr> errors(threads);
  const std::size_t chunk = (n + threads - 1) / threads;
  for (unsigned w = 0; w < threads; ++w) {
    const std::size_t lo = w * chunk;
    const std::size_t hi = std::min(n, lo + chunk);
    workers.emplace_back([&, w, lo, hi] {
      try {
        for (std::size_t i = lo; i < hi; ++i) body(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : workers) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace merged
