#include "merged/analytic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "merged/numerics.hpp"

namespace merged::analytic {

namespace {

void require_positive_time(double t) {
  if (!(t > 0.0)) {
    throw std::domain_error("transition density needs t > 0, got " + std::to_string(t));
  }
}

void require_nonnegative_time(double t, const char* name) {
  if (!(t >= 0.0)) {
    throw std::domain_error(std::string(name) + " must be >= 0, got " + std::to_string(t));
  }
}

// f, f', f'' of a drift family at u.
struct Derivatives {
  double f;
  double d1;
  double d2;
};

Derivatives derivatives(const DriftFamily& fam, double u) {
  switch (fam.branch()) {
    case DriftFamily::Branch::PlusBias: return {1.0, 0.0, 0.0};
    case DriftFamily::Branch::MinusBias: return {-1.0, 0.0, 0.0};
    case DriftFamily::Branch::Tanh: break;
  }
  const double v = u + fam.shift_argument();
  if (std::abs(v) > 350.0) return {std::copysign(1.0, v), 0.0, 0.0};
  const double c = std::cosh(v);
  const double sech2 = 1.0 / (c * c);
  return {std::tanh(v), sech2, -2.0 * std::sinh(v) / (c * c * c)};
}

}  // namespace

DriftFamily::DriftFamily(double b) : b_(b) {
  if (!std::isfinite(b) || std::abs(b) > 1.0) {
    throw std::domain_error("drift family shift must satisfy |b| <= 1 (the coth branch is not "
                            "a bounded drift), got " +
                            std::to_string(b));
  }
  if (b == 1.0) {
    branch_ = Branch::PlusBias;
  } else if (b == -1.0) {
    branch_ = Branch::MinusBias;
  } else {
    branch_ = Branch::Tanh;
  }
}

DriftFamily DriftFamily::tanh(double b) {
  if (std::abs(b) >= 1.0) {
    throw std::domain_error("tanh branch needs |b| < 1, got " + std::to_string(b));
  }
  return DriftFamily(b);
}

double DriftFamily::shift_argument() const {
  if (branch_ != Branch::Tanh) {
    throw std::domain_error("pure-bias branches have no finite shift argument");
  }
  return std::atanh(b_);
}

double mixture_weight(double x0, const ProcessParams& params) {
  return logistic(2.0 * params.kappa() * x0);
}

double gaussian_component_pdf(const TransitionQuery& q, int sign, const ProcessParams& params) {
  require_positive_time(q.t);
  if (sign != 1 && sign != -1) throw std::domain_error("component sign must be +1 or -1");
  const double sd = params.sigma() * std::sqrt(q.t);
  const double mean = q.x0 + sign * params.v_d() * q.t;
  return normal_pdf((q.x - mean) / sd) / sd;
}

double transition_log_pdf(const TransitionQuery& q, const ProcessParams& params) {
  require_positive_time(q.t);
  const double var = params.sigma2() * q.t;
  const double kappa = params.kappa();
  const double dx = q.x - q.x0;
  return -0.5 * std::log(2.0 * std::numbers::pi * var) + logcosh(kappa * q.x) -
         logcosh(kappa * q.x0) - dx * dx / (2.0 * var) - 0.5 * kappa * params.v_d() * q.t;
}

double transition_pdf(const TransitionQuery& q, const ProcessParams& params) {
  return std::exp(transition_log_pdf(q, params));
}

double transition_cdf(const TransitionQuery& q, const ProcessParams& params) {
  require_positive_time(q.t);
  const double sd = params.sigma() * std::sqrt(q.t);
  const double shift = params.v_d() * q.t;
  const double w_plus = mixture_weight(q.x0, params);
  const double w_minus = mixture_weight(-q.x0, params);
  return w_plus * normal_cdf((q.x - q.x0 - shift) / sd) +
         w_minus * normal_cdf((q.x - q.x0 + shift) / sd);
}

double mean_exact(double x0, double t, const ProcessParams& params) {
  require_nonnegative_time(t, "t");
  return x0 + params.v_d() * std::tanh(params.kappa() * x0) * t;
}

double variance_exact(double x0, double t, const ProcessParams& params) {
  require_nonnegative_time(t, "t");
  const double spread = params.v_d() * t / std::cosh(params.kappa() * x0);
  return params.sigma2() * t + spread * spread;
}

double covariance_exact(double x0, double t, double tau, const ProcessParams& params) {
  require_nonnegative_time(t, "t");
  require_nonnegative_time(tau, "tau");
  const double a = params.v_d() / std::cosh(params.kappa() * x0);
  return params.sigma2() * t + a * a * t * (t + tau);
}

double msd_exact(double tau, const ProcessParams& params) {
  require_nonnegative_time(tau, "tau");
  return params.sigma2() * tau + params.v_d() * params.v_d() * tau * tau;
}

double cross_moment_exact(double x0, double t, const ProcessParams& params) {
  require_nonnegative_time(t, "t");
  return x0 * std::tanh(params.kappa() * x0) + params.v_d() * t;
}

double second_moment_exact(double x0, double t, const ProcessParams& params) {
  require_nonnegative_time(t, "t");
  const double v = params.v_d();
  return x0 * x0 + (params.sigma2() + 2.0 * x0 * v * std::tanh(params.kappa() * x0)) * t +
         v * v * t * t;
}

double exact_transition_sample(double x0, double t, const ProcessParams& params,
                               RngStream& rng) {
  require_positive_time(t);
  const bool plus = rng.bernoulli(mixture_weight(x0, params));
  const double drift = (plus ? 1.0 : -1.0) * params.v_d() * t;
  return x0 + drift + params.sigma() * std::sqrt(t) * rng.normal();
}

Path exact_path_sample(double x0, std::span<const double> times, const ProcessParams& params,
                       RngStream& rng) {
  validate_time_grid(times);
  std::vector<double> positions(times.size());
  positions[0] = x0;
  for (std::size_t i = 1; i < times.size(); ++i) {
    positions[i] = exact_transition_sample(positions[i - 1], times[i] - times[i - 1], params, rng);
  }
  return Path(std::vector<double>(times.begin(), times.end()), std::move(positions),
              Provenance::Exact);
}

std::vector<double> exact_terminal_ensemble(double x0, double t, const ProcessParams& params,
                                            std::size_t n_samples, std::uint64_t master_seed,
                                            unsigned threads) {
  if (!(t > 0.0)) throw std::domain_error("exact sampling needs t > 0");
  std::vector<double> out(n_samples);
  parallel_for(n_samples, threads, [&](std::size_t i) {
    RngStream rng = substream(master_seed, i);
    out[i] = exact_transition_sample(x0, t, params, rng);
  });
  return out;
}

std::vector<Path> exact_path_ensemble(double x0, std::span<const double> times,
                                      const ProcessParams& params, std::size_t n_paths,
                                      std::uint64_t master_seed, unsigned threads) {
  validate_time_grid(times);
  std::vector<std::vector<double>> positions(n_paths);
  parallel_for(n_paths, threads, [&](std::size_t i) {
    RngStream rng = substream(master_seed, i);
    auto& pos = positions[i];
    pos.resize(times.size());
    pos[0] = x0;
    for (std::size_t k = 1; k < times.size(); ++k) {
      pos[k] = exact_transition_sample(pos[k - 1], times[k] - times[k - 1], params, rng);
    }
  });
  std::vector<Path> out;
  out.reserve(n_paths);
  const std::vector<double> grid(times.begin(), times.end());
  for (auto& pos : positions) out.emplace_back(grid, std::move(pos), Provenance::Exact);
  return out;
}

double chapman_kolmogorov_residual(double x, double t, double t_mid, double x0,
                                   const ProcessParams& params) {
  if (!(t_mid > 0.0 && t_mid < t)) {
    throw std::domain_error("Chapman-Kolmogorov check needs 0 < t_mid < t");
  }
  const double direct = transition_pdf({x0, x, t}, params);

  const double first = t_mid;
  const double second = t - t_mid;
  const double v = params.v_d();
  const double reach = 12.0 * params.sigma() * std::sqrt(t);
  // Intermediate points that matter sit near x0 +/- v t_mid (first leg) and
  // near x -/+ v (t - t_mid) (second leg, read backwards from x).
  std::vector<double> centers = {x0 + v * first, x0 - v * first, x - v * second, x + v * second};
  std::sort(centers.begin(), centers.end());
  std::vector<double> breaks;
  breaks.push_back(centers.front() - reach);
  for (double c : centers) breaks.push_back(c);
  breaks.push_back(centers.back() + reach);

  auto integrand = [&](double y) {
    return std::exp(transition_log_pdf({y, x, second}, params) +
                    transition_log_pdf({x0, y, first}, params));
  };
  double composed = 0.0;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    if (breaks[i + 1] <= breaks[i]) continue;
    composed += integrate(integrand, breaks[i], breaks[i + 1], 1e-12, 1e-17).value;
  }
  return std::abs(direct - composed);
}

double drift_family_eval(const DriftFamily& fam, double u) { return derivatives(fam, u).f; }

double ode_residual(const DriftFamily& fam, double u) {
  const auto d = derivatives(fam, u);
  return d.d2 + 2.0 * d.d1 * d.f;
}

GFamilyResidual g_family_residual(const DriftFamily& fam, double u, double c0, double c1) {
  if (u == 0.0 && c1 != 0.0) {
    throw std::domain_error("g-family solution c0 + c1/u^2 is singular at u = 0");
  }
  const auto d = derivatives(fam, u);
  const double g = d.d1 + d.f * d.f;
  const double g_prime = d.d2 + 2.0 * d.f * d.d1;
  const double tail = (c1 == 0.0) ? 0.0 : c1 / (u * u);
  return {u * g_prime + 2.0 * g - 2.0 * c0, g - c0 - tail};
}

Moments naive_superposition_moments(double x0, double t, const ProcessParams& params) {
  require_nonnegative_time(t, "t");
  const double f = std::tanh(params.kappa() * x0);
  return {x0 + params.v_d() * f * t, params.sigma2() * t * (1.0 + f * f) / 2.0};
}

}  // namespace merged::analytic
