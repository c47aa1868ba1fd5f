#include "merged/walk.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "merged/analytic.hpp"
#include "merged/numerics.hpp"

namespace merged::walk {

void WalkParams::validate() const {
  if (!(dx > 0.0) || !std::isfinite(dx)) throw std::domain_error("walk dx must be > 0");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw std::domain_error("walk dt must be > 0");
  if (!(xi >= 0.0) || !std::isfinite(xi)) throw std::domain_error("walk xi must be >= 0");
}

namespace {

StepProbabilities probabilities_at(double s, double xi) {
  const double a = std::tanh(std::abs(s));
  // (1 - tanh|s| tanh xi) / 2 rewritten as ((1 - a) + a (1 - tanh xi)) / 2.
  const double small = 0.5 * (one_minus_tanh(std::abs(s)) + a * one_minus_tanh(xi));
  const double large = 1.0 - small;
  return s >= 0.0 ? StepProbabilities{large, small} : StepProbabilities{small, large};
}

std::size_t steps_for(double T, double dt) {
  const double ratio = T / dt;
  const double rounded = std::round(ratio);
  if (!(T >= 0.0) || std::abs(ratio - rounded) > 1e-9 * std::max(1.0, rounded)) {
    throw std::domain_error("T = " + std::to_string(T) + " is not a whole number of walk steps");
  }
  return static_cast<std::size_t>(rounded);
}

}  // namespace

StepProbabilities step_probabilities(double x, const WalkParams& wp) {
  wp.validate();
  return probabilities_at(wp.xi * x / wp.dx, wp.xi);
}

double loop_product(double x, const WalkParams& wp) {
  return step_probabilities(x, wp).up * step_probabilities(x + wp.dx, wp).down;
}

std::int64_t walk_terminal_offset(double x0, std::size_t n_steps, const WalkParams& wp,
                                  RngStream& rng) {
  wp.validate();
  const double s0 = wp.xi * x0 / wp.dx;
  std::int64_t k = 0;
  for (std::size_t n = 0; n < n_steps; ++n) {
    const double p_up = probabilities_at(s0 + wp.xi * static_cast<double>(k), wp.xi).up;
    k += rng.uniform() < p_up ? 1 : -1;
  }
  return k;
}

std::vector<std::int64_t> walk_terminal_ensemble(double x0, std::size_t n_steps,
                                                 const WalkParams& wp, std::size_t n_paths,
                                                 std::uint64_t master_seed, unsigned threads) {
  wp.validate();
  // Every reachable site's up-probability, indexed by offset + n_steps.
  const double s0 = wp.xi * x0 / wp.dx;
  std::vector<double> p_up(2 * n_steps + 1);
  for (std::size_t j = 0; j < p_up.size(); ++j) {
    const double k = static_cast<double>(j) - static_cast<double>(n_steps);
    p_up[j] = probabilities_at(s0 + wp.xi * k, wp.xi).up;
  }
  std::vector<std::int64_t> out(n_paths);
  parallel_for(n_paths, threads, [&](std::size_t i) {
    RngStream rng = substream(master_seed, i);
    std::size_t j = n_steps;
    for (std::size_t n = 0; n < n_steps; ++n) {
      if (rng.uniform() < p_up[j]) {
        ++j;
      } else {
        --j;
      }
    }
    out[i] = static_cast<std::int64_t>(j) - static_cast<std::int64_t>(n_steps);
  });
  return out;
}

Path walk_path(double x0, std::size_t n_steps, const WalkParams& wp, RngStream& rng) {
  wp.validate();
  if (n_steps < 1) throw std::domain_error("walk path needs n_steps >= 1");
  const double s0 = wp.xi * x0 / wp.dx;
  std::vector<double> positions(n_steps + 1);
  positions[0] = x0;
  std::int64_t k = 0;
  for (std::size_t n = 0; n < n_steps; ++n) {
    const double p_up = probabilities_at(s0 + wp.xi * static_cast<double>(k), wp.xi).up;
    k += rng.uniform() < p_up ? 1 : -1;
    positions[n + 1] = x0 + static_cast<double>(k) * wp.dx;
  }
  return Path(uniform_grid(wp.dt, n_steps), std::move(positions), Provenance::Walk);
}

WalkDistribution::WalkDistribution(double x0, double dx, std::size_t n_steps,
                                   std::vector<double> probabilities)
    : x0_(x0), dx_(dx), n_(n_steps), prob_(std::move(probabilities)) {
  if (prob_.size() != n_ + 1) {
    throw std::domain_error("walk distribution after n steps has n + 1 support points");
  }
}

double WalkDistribution::at_offset(std::int64_t k) const noexcept {
  const auto n = static_cast<std::int64_t>(n_);
  if (k < -n || k > n || ((k + n) % 2) != 0) return 0.0;
  return prob_[static_cast<std::size_t>((k + n) / 2)];
}

double WalkDistribution::total() const { return pairwise_sum(prob_); }

WalkDistribution exact_walk_distribution(double x0, std::size_t n_steps, const WalkParams& wp) {
  wp.validate();
  const double n = static_cast<double>(n_steps);
  const double s0 = wp.xi * x0 / wp.dx;
  const double log_norm =
      std::lgamma(n + 1.0) - n * (std::numbers::ln2 + logcosh(wp.xi)) - logcosh(s0);
  std::vector<double> prob(n_steps + 1);
  for (std::size_t i = 0; i <= n_steps; ++i) {
    const double ups = static_cast<double>(i);
    const double offset = 2.0 * ups - n;
    const double log_p = log_norm - std::lgamma(ups + 1.0) - std::lgamma(n - ups + 1.0) +
                         logcosh(s0 + wp.xi * offset);
    prob[i] = std::exp(log_p);
  }
  return WalkDistribution(x0, wp.dx, n_steps, std::move(prob));
}

ProcessParams continuum_params(const WalkParams& wp) {
  wp.validate();
  const double sigma = wp.dx / std::sqrt(wp.dt);
  const double kappa = wp.xi / wp.dx;
  return ProcessParams(kappa * sigma * sigma, sigma);
}

WalkParams walk_params_for(const ProcessParams& target, double dx) {
  const double dt = (dx / target.sigma()) * (dx / target.sigma());
  return WalkParams{dx, dt, target.kappa() * dx};
}

double walk_to_continuum_distance(double x0, double T, const WalkParams& wp) {
  wp.validate();
  const std::size_t n_steps = steps_for(T, wp.dt);
  if (n_steps == 0) throw std::domain_error("continuum comparison needs T > 0");
  const ProcessParams params = continuum_params(wp);
  const auto dist = exact_walk_distribution(x0, n_steps, wp);

  auto cdf = [&](double x) { return analytic::transition_cdf({x0, x, T}, params); };
  std::vector<double> gaps(dist.size());
  double lower_edge = dist.position(0) - wp.dx;
  double cdf_lower = cdf(lower_edge);
  const double below = cdf_lower;
  for (std::size_t i = 0; i < dist.size(); ++i) {
    const double upper_edge = dist.position(i) + wp.dx;
    const double cdf_upper = cdf(upper_edge);
    gaps[i] = std::abs(dist.probability(i) - (cdf_upper - cdf_lower));
    cdf_lower = cdf_upper;
  }
  const double above = std::max(0.0, 1.0 - cdf_lower);
  return 0.5 * (pairwise_sum(gaps) + below + above);
}

std::vector<ConvergencePoint> continuum_convergence(double x0, double T,
                                                    std::span<const WalkParams> sequence,
                                                    const ProcessParams& target) {
  std::vector<ConvergencePoint> out;
  for (const auto& wp : sequence) {
    const ProcessParams image = continuum_params(wp);
    auto close = [](double a, double b) {
      return std::abs(a - b) <= 1e-9 * std::max(std::abs(a), std::abs(b)) ||
             (a == 0.0 && b == 0.0);
    };
    if (!close(image.sigma(), target.sigma()) || !close(image.v_d(), target.v_d())) {
      throw std::domain_error("walk parameters with dx = " + std::to_string(wp.dx) +
                              " do not map to the target diffusion");
    }
    out.push_back({wp.dx, walk_to_continuum_distance(x0, T, wp)});
  }
  return out;
}

}  // namespace merged::walk
