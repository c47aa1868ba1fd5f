#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "merged/analytic.hpp"
#include "merged/params.hpp"
#include "merged/path.hpp"
#include "merged/rng.hpp"

namespace merged::sde {

enum class Scheme { EulerMaruyama, Heun };

struct IntegratorConfig {
  Scheme scheme = Scheme::EulerMaruyama;
  double dt = 1e-3;
  std::size_t n_steps = 1000;

  void validate() const;
};

/// Drift v_d f(x) with a shape |f| <= 1. The bound is spot-checked on a
/// grid of positions when the drift is built.
class BoundedDrift {
 public:
  BoundedDrift(std::function<double(double)> shape, double v_d);

  /// v_d tanh(kappa x): the merged process.
  static BoundedDrift tanh(const ProcessParams& params);
  /// v_d f(kappa x) for any real drift family (constant biases included).
  static BoundedDrift family(const analytic::DriftFamily& fam, const ProcessParams& params);
  /// -v_d tanh(kappa x): the mean-reverting process used as a negative control.
  static BoundedDrift reverting_tanh(const ProcessParams& params);

  double operator()(double x) const { return v_d_ * shape_(x); }
  double speed() const noexcept { return v_d_; }

 private:
  std::function<double(double)> shape_;
  double v_d_;
};

double drift_tanh(double x, const ProcessParams& params);

/// One discretized trajectory from x0. Noise enters as sigma sqrt(dt) Z_n with
/// Z_n drawn from `rng`; Heun reuses Z_n in its corrector.
Path integrate(double x0, const BoundedDrift& drift, const IntegratorConfig& cfg,
               const ProcessParams& params, RngStream& rng);

/// Terminal values only, without storing the path.
double integrate_terminal(double x0, const BoundedDrift& drift, const IntegratorConfig& cfg,
                          const ProcessParams& params, RngStream& rng);

/// Terminal values of n_paths trajectories; trajectory i uses
/// substream(master_seed, i), so the result does not depend on `threads`.
std::vector<double> terminal_ensemble(double x0, const BoundedDrift& drift,
                                      const IntegratorConfig& cfg, const ProcessParams& params,
                                      std::size_t n_paths, std::uint64_t master_seed,
                                      unsigned threads = 0);

enum class Observable { X, XSquared, TanhKappaX };

struct WeakError {
  Observable observable;
  /// E[phi(X_T)] under the scheme minus the exact value, estimated by summing
  /// the per-step defects of the exact backward function u(t, x) =
  /// E[phi(X_T) | X_t = x] along scheme paths. Unbiased with small variance.
  double error;
  double error_se;
  /// The same difference measured directly: scheme ensemble mean minus an
  /// exact-sampler ensemble mean drawn with matched stream indices.
  double direct_error;
  double direct_se;
};

struct WeakErrorPoint {
  double dt;
  std::vector<WeakError> errors;  // one per observable, in enum order

  const WeakError& at(Observable o) const { return errors.at(static_cast<std::size_t>(o)); }
};

struct WeakErrorOptions {
  Scheme scheme = Scheme::EulerMaruyama;
  analytic::DriftFamily family{};
  unsigned threads = 0;
  int quadrature_points = 24;
};

/// Weak error of the scheme at each step size against the exact law.
/// Every dt must divide T and n_paths must be at least 10^4.
std::vector<WeakErrorPoint> weak_error_curve(double x0, double T, std::span<const double> dts,
                                             std::size_t n_paths, const ProcessParams& params,
                                             std::uint64_t master_seed,
                                             const WeakErrorOptions& options = {});

/// Number of steps of size dt in T; throws std::domain_error when dt does
/// not divide T (relative tolerance 1e-9).
std::size_t steps_in(double T, double dt);

}  // namespace merged::sde
