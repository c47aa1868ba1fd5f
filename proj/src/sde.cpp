#include "merged/sde.hpp"

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

#include "merged/numerics.hpp"

namespace merged::sde {

using analytic::DriftFamily;

void IntegratorConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw std::domain_error("integrator dt must be > 0, got " + std::to_string(dt));
  }
  if (n_steps < 1) throw std::domain_error("integrator needs n_steps >= 1");
}

BoundedDrift::BoundedDrift(std::function<double(double)> shape, double v_d)
    : shape_(std::move(shape)), v_d_(v_d) {
  if (!shape_) throw std::domain_error("drift shape is empty");
  if (!(v_d >= 0.0) || !std::isfinite(v_d)) throw std::domain_error("drift speed must be >= 0");
  for (int i = -2000; i <= 2000; ++i) {
    const double x = 0.05 * i;
    const double f = shape_(x);
    if (!(std::abs(f) <= 1.0)) {
      throw std::domain_error("drift shape exceeds 1 in magnitude at x = " + std::to_string(x));
    }
  }
  for (double x : {-1e300, -1e6, 1e6, 1e300}) {
    if (!(std::abs(shape_(x)) <= 1.0)) {
      throw std::domain_error("drift shape exceeds 1 in magnitude at x = " + std::to_string(x));
    }
  }
}

BoundedDrift BoundedDrift::tanh(const ProcessParams& params) {
  const double kappa = params.kappa();
  return BoundedDrift([kappa](double x) { return std::tanh(kappa * x); }, params.v_d());
}

BoundedDrift BoundedDrift::family(const DriftFamily& fam, const ProcessParams& params) {
  const double kappa = params.kappa();
  return BoundedDrift([fam, kappa](double x) { return analytic::drift_family_eval(fam, kappa * x); },
                      params.v_d());
}

BoundedDrift BoundedDrift::reverting_tanh(const ProcessParams& params) {
  const double kappa = params.kappa();
  return BoundedDrift([kappa](double x) { return -std::tanh(kappa * x); }, params.v_d());
}

double drift_tanh(double x, const ProcessParams& params) {
  return params.v_d() * std::tanh(params.kappa() * x);
}

namespace {

// One step of the scheme driven by the standard normal z.
inline double step(Scheme scheme, const BoundedDrift& drift, double x, double dt, double noise_sd,
                   double z) {
  const double noise = noise_sd * z;
  const double a = drift(x);
  if (scheme == Scheme::EulerMaruyama) return x + a * dt + noise;
  const double predictor = x + a * dt + noise;
  return x + 0.5 * (a + drift(predictor)) * dt + noise;
}

Provenance provenance_of(Scheme s) {
  return s == Scheme::EulerMaruyama ? Provenance::EulerMaruyama : Provenance::Heun;
}

}  // namespace

Path integrate(double x0, const BoundedDrift& drift, const IntegratorConfig& cfg,
               const ProcessParams& params, RngStream& rng) {
  cfg.validate();
  const double noise_sd = params.sigma() * std::sqrt(cfg.dt);
  std::vector<double> positions(cfg.n_steps + 1);
  positions[0] = x0;
  for (std::size_t n = 0; n < cfg.n_steps; ++n) {
    positions[n + 1] = step(cfg.scheme, drift, positions[n], cfg.dt, noise_sd, rng.normal());
  }
  return Path(uniform_grid(cfg.dt, cfg.n_steps), std::move(positions), provenance_of(cfg.scheme));
}

double integrate_terminal(double x0, const BoundedDrift& drift, const IntegratorConfig& cfg,
                          const ProcessParams& params, RngStream& rng) {
  cfg.validate();
  const double noise_sd = params.sigma() * std::sqrt(cfg.dt);
  double x = x0;
  for (std::size_t n = 0; n < cfg.n_steps; ++n) {
    x = step(cfg.scheme, drift, x, cfg.dt, noise_sd, rng.normal());
  }
  return x;
}

std::vector<double> terminal_ensemble(double x0, const BoundedDrift& drift,
                                      const IntegratorConfig& cfg, const ProcessParams& params,
                                      std::size_t n_paths, std::uint64_t master_seed,
                                      unsigned threads) {
  cfg.validate();
  std::vector<double> out(n_paths);
  parallel_for(n_paths, threads, [&](std::size_t i) {
    RngStream rng = substream(master_seed, i);
    out[i] = integrate_terminal(x0, drift, cfg, params, rng);
  });
  return out;
}

std::size_t steps_in(double T, double dt) {
  if (!(dt > 0.0) || !(T > 0.0)) throw std::domain_error("T and dt must be > 0");
  const double ratio = T / dt;
  const double rounded = std::round(ratio);
  if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-9 * rounded) {
    throw std::domain_error("dt = " + std::to_string(dt) + " does not divide T = " +
                            std::to_string(T));
  }
  return static_cast<std::size_t>(rounded);
}

namespace {

constexpr std::size_t kObservables = 3;

double observe(Observable o, double x, double kappa) {
  switch (o) {
    case Observable::X: return x;
    case Observable::XSquared: return x * x;
    case Observable::TanhKappaX: return std::tanh(kappa * x);
  }
  return 0.0;
}

// u(x; tau) = E[phi(X_{t+tau}) | X_t = x] under the exact law of the family.
class BackwardFunction {
 public:
  BackwardFunction(const DriftFamily& fam, const ProcessParams& params, const GaussHermiteRule& gh)
      : params_(params), gh_(gh) {
    if (fam.branch() == DriftFamily::Branch::Tanh) {
      if (fam.shift() != 0.0) {
        throw std::domain_error("weak error reference supports the canonical tanh drift (b = 0) "
                                "and the pure-bias branches");
      }
      bias_ = 0;
    } else {
      bias_ = fam.branch() == DriftFamily::Branch::PlusBias ? 1 : -1;
    }
    if (params.v_d() == 0.0) bias_ = 0;
  }

  // u for every observable at once; all three share tanh(kappa x).
  std::array<double, kObservables> operator()(double x, double tau) const {
    const double kappa = params_.kappa();
    if (tau <= 0.0) return {x, x * x, std::tanh(kappa * x)};
    if (bias_ == 0) {
      const double v = params_.v_d();
      const double th = std::tanh(kappa * x);
      return {x + v * tau * th,
              x * x + (params_.sigma2() + 2.0 * x * v * th) * tau + v * v * tau * tau, th};
    }
    const double mean = x + bias_ * params_.v_d() * tau;
    const double sd = params_.sigma() * std::sqrt(tau);
    return {mean, mean * mean + sd * sd,
            gh_.expectation([&](double z) { return std::tanh(kappa * (mean + sd * z)); })};
  }

  double exact_sample(double x0, double T, RngStream& rng) const {
    if (bias_ == 0) return analytic::exact_transition_sample(x0, T, params_, rng);
    return x0 + bias_ * params_.v_d() * T + params_.sigma() * std::sqrt(T) * rng.normal();
  }

 private:
  ProcessParams params_;
  const GaussHermiteRule& gh_;
  int bias_ = 0;
};

}  // namespace

std::vector<WeakErrorPoint> weak_error_curve(double x0, double T, std::span<const double> dts,
                                             std::size_t n_paths, const ProcessParams& params,
                                             std::uint64_t master_seed,
                                             const WeakErrorOptions& options) {
  if (n_paths < 10000) throw std::domain_error("weak error curve needs n_paths >= 10^4");
  if (dts.empty()) throw std::domain_error("weak error curve needs at least one dt");
  std::vector<std::size_t> step_counts;
  for (double dt : dts) step_counts.push_back(steps_in(T, dt));

  const GaussHermiteRule gh(options.quadrature_points);
  const BackwardFunction u(options.family, params, gh);
  const BoundedDrift drift = BoundedDrift::family(options.family, params);
  const double kappa = params.kappa();

  // Exact-law ensemble shared by every dt; stream i pairs with scheme path i.
  const std::uint64_t exact_seed = derive_seed(master_seed, 1);
  std::array<std::vector<double>, kObservables> exact_phi;
  for (auto& v : exact_phi) v.resize(n_paths);
  parallel_for(n_paths, options.threads, [&](std::size_t i) {
    RngStream rng = substream(exact_seed, i);
    const double x = u.exact_sample(x0, T, rng);
    for (std::size_t k = 0; k < kObservables; ++k) {
      exact_phi[k][i] = observe(static_cast<Observable>(k), x, kappa);
    }
  });

  std::vector<WeakErrorPoint> curve;
  for (std::size_t d = 0; d < dts.size(); ++d) {
    const std::size_t n_steps = step_counts[d];
    const double dt = T / static_cast<double>(n_steps);
    const double noise_sd = params.sigma() * std::sqrt(dt);
    const std::uint64_t seed = derive_seed(master_seed, 100 + d);

    std::array<std::vector<double>, kObservables> defect_sum, scheme_phi;
    for (auto& v : defect_sum) v.assign(n_paths, 0.0);
    for (auto& v : scheme_phi) v.resize(n_paths);

    parallel_for(n_paths, options.threads, [&](std::size_t i) {
      RngStream rng = substream(seed, i);
      double x = x0;
      std::array<double, kObservables> acc{};
      for (std::size_t n = 0; n < n_steps; ++n) {
        const double tau_now = T - static_cast<double>(n) * dt;
        const double tau_next = T - static_cast<double>(n + 1) * dt;
        const auto before = u(x, tau_now);
        std::array<double, kObservables> after{};
        for (std::size_t j = 0; j < gh.nodes.size(); ++j) {
          const auto next = u(step(options.scheme, drift, x, dt, noise_sd, gh.nodes[j]), tau_next);
          for (std::size_t k = 0; k < kObservables; ++k) after[k] += gh.weights[j] * next[k];
        }
        for (std::size_t k = 0; k < kObservables; ++k) acc[k] += after[k] - before[k];
        x = step(options.scheme, drift, x, dt, noise_sd, rng.normal());
      }
      for (std::size_t k = 0; k < kObservables; ++k) {
        defect_sum[k][i] = acc[k];
        scheme_phi[k][i] = observe(static_cast<Observable>(k), x, kappa);
      }
    });

    WeakErrorPoint point{dt, {}};
    for (std::size_t k = 0; k < kObservables; ++k) {
      const auto telescoped = mean_and_se(defect_sum[k]);
      const auto scheme = mean_and_se(scheme_phi[k]);
      const auto exact = mean_and_se(exact_phi[k]);
      point.errors.push_back({static_cast<Observable>(k), telescoped.mean, telescoped.se,
                              scheme.mean - exact.mean,
                              std::sqrt(scheme.se * scheme.se + exact.se * exact.se)});
    }
    curve.push_back(std::move(point));
  }
  return curve;
}

}  // namespace merged::sde
