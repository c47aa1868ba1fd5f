#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "merged/params.hpp"
#include "merged/path.hpp"
#include "merged/rng.hpp"

namespace merged::analytic {

/// Real solutions of f'' + 2 f' f = 0 with |f| <= 1:
///   Tanh:      f(u) = tanh(u + atanh(b)), |b| < 1
///   PlusBias:  f = +1 (b = +1)
///   MinusBias: f = -1 (b = -1)
class DriftFamily {
 public:
  enum class Branch { Tanh, PlusBias, MinusBias };

  /// Branch chosen from b. |b| > 1 (the coth branch) is rejected.
  explicit DriftFamily(double b = 0.0);

  static DriftFamily tanh(double b = 0.0);
  static DriftFamily plus_bias() { return DriftFamily(1.0); }
  static DriftFamily minus_bias() { return DriftFamily(-1.0); }

  Branch branch() const noexcept { return branch_; }
  double shift() const noexcept { return b_; }
  /// u_b = atanh(b); only meaningful on the Tanh branch.
  double shift_argument() const;

  bool operator==(const DriftFamily&) const = default;

 private:
  Branch branch_;
  double b_;
};

struct TransitionQuery {
  double x0;
  double x;
  double t;
};

/// Probability of the +v_d component given the start: 1 / (1 + exp(-2 kappa x0)).
double mixture_weight(double x0, const ProcessParams& params);

/// Normal density with mean x0 + sign v_d t and variance sigma^2 t.
double gaussian_component_pdf(const TransitionQuery& q, int sign, const ProcessParams& params);

/// log p(x, t; x0) evaluated in log space (finite for every finite input).
double transition_log_pdf(const TransitionQuery& q, const ProcessParams& params);
double transition_pdf(const TransitionQuery& q, const ProcessParams& params);

/// P(X_t <= x | x0) as the weighted sum of the two component CDFs.
double transition_cdf(const TransitionQuery& q, const ProcessParams& params);

double mean_exact(double x0, double t, const ProcessParams& params);
double variance_exact(double x0, double t, const ProcessParams& params);
/// cov(X_t, X_{t+tau} | x0).
double covariance_exact(double x0, double t, double tau, const ProcessParams& params);
/// E[(X_{t+tau} - X_t)^2]; carries no t or x0 because it depends on neither.
double msd_exact(double tau, const ProcessParams& params);
/// E[X_t tanh(kappa X_t) | x0] = x0 tanh(kappa x0) + v_d t.
double cross_moment_exact(double x0, double t, const ProcessParams& params);
/// E[X_t^2 | x0].
double second_moment_exact(double x0, double t, const ProcessParams& params);

/// One draw from the transition law: pick the +/- component with the
/// mixture weight, then draw from that Gaussian.
double exact_transition_sample(double x0, double t, const ProcessParams& params, RngStream& rng);

/// Chains exact transitions over the grid (the process is Markov and time
/// homogeneous, so this is exact at every grid time).
Path exact_path_sample(double x0, std::span<const double> times, const ProcessParams& params,
                       RngStream& rng);

/// n_samples exact draws at time t; draw i uses substream(master_seed, i),
/// so the result does not depend on `threads`.
std::vector<double> exact_terminal_ensemble(double x0, double t, const ProcessParams& params,
                                            std::size_t n_samples, std::uint64_t master_seed,
                                            unsigned threads = 0);

/// n_paths exact paths on a shared grid, path i from substream(master_seed, i).
std::vector<Path> exact_path_ensemble(double x0, std::span<const double> times,
                                      const ProcessParams& params, std::size_t n_paths,
                                      std::uint64_t master_seed, unsigned threads = 0);

/// |p(x,t;x0) - integral of p(x, t - t_mid; y) p(y, t_mid; x0) dy|.
/// Throws NumericalError if the quadrature misses tolerance.
double chapman_kolmogorov_residual(double x, double t, double t_mid, double x0,
                                   const ProcessParams& params);

double drift_family_eval(const DriftFamily& fam, double u);

/// f''(u) + 2 f'(u) f(u) using closed-form derivatives.
double ode_residual(const DriftFamily& fam, double u);

struct GFamilyResidual {
  double ode;       // u g'(u) + 2 g(u) - 2 c0
  double solution;  // g(u) - c0 - c1 / u^2
};

/// Residuals of g = f' + f^2 against u g' + 2 g = 2 c0 and its solution
/// c0 + c1/u^2. Throws std::domain_error at u = 0 when c1 != 0.
GFamilyResidual g_family_residual(const DriftFamily& fam, double u, double c0, double c1);

struct Moments {
  double mean;
  double variance;
};

/// Moments of the rejected construction that replaces the Bernoulli switch
/// by its average: a single biased Brownian motion with drift v_d f(x0) and
/// variance sigma^2 t (1 + f(x0)^2) / 2.
Moments naive_superposition_moments(double x0, double t, const ProcessParams& params);

}  // namespace merged::analytic
