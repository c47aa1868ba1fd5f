#include "merged/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

#include "merged/analytic.hpp"
#include "merged/fpe.hpp"
#include "merged/numerics.hpp"
#include "merged/rng.hpp"
#include "merged/sde.hpp"
#include "merged/stats.hpp"
#include "merged/walk.hpp"

namespace merged::verify {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Check at_most(std::string name, double value, double threshold, std::string detail = {}) {
  return {std::move(name), value, threshold, Comparison::LessEqual, value <= threshold,
          std::move(detail)};
}

Check at_least(std::string name, double value, double threshold, std::string detail = {}) {
  return {std::move(name), value, threshold, Comparison::GreaterEqual, value >= threshold,
          std::move(detail)};
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

std::uint64_t seed_for(const VerifyOptions& opt, int criterion, std::uint64_t k) {
  return derive_seed(opt.seed, static_cast<std::uint64_t>(criterion) * 100000 + k);
}

std::size_t scaled(const VerifyOptions& opt, std::size_t base, std::size_t floor) {
  const auto n = static_cast<std::size_t>(std::llround(static_cast<double>(base) * opt.scale));
  return std::max(n, floor);
}

double z_score(double estimate, double exact, double se) {
  const double d = std::abs(estimate - exact);
  if (se > 0.0) return d / se;
  return d <= 1e-14 * std::max(1.0, std::abs(exact)) ? 0.0 : kInf;
}

// ---------------------------------------------------------------------------
// Generators shared by the sampler and MSD batteries.

struct Generator {
  std::string name;
  std::function<std::vector<double>(double x0, double t, const ProcessParams&, std::size_t n,
                                    std::uint64_t seed, unsigned threads)>
      terminal;
  // Positions at t and t + tau for n independent paths from x0.
  std::function<std::pair<std::vector<double>, std::vector<double>>(
      double x0, double t, double tau, const ProcessParams&, std::size_t n, std::uint64_t seed,
      unsigned threads)>
      pairs;
};

Generator exact_generator() {
  Generator g;
  g.name = "exact";
  g.terminal = [](double x0, double t, const ProcessParams& p, std::size_t n, std::uint64_t seed,
                  unsigned threads) {
    return analytic::exact_terminal_ensemble(x0, t, p, n, seed, threads);
  };
  g.pairs = [](double x0, double t, double tau, const ProcessParams& p, std::size_t n,
               std::uint64_t seed, unsigned threads) {
    const std::vector<double> grid = {0.0, t, t + tau};
    const auto paths = analytic::exact_path_ensemble(x0, grid, p, n, seed, threads);
    std::pair<std::vector<double>, std::vector<double>> out;
    out.first.reserve(n);
    out.second.reserve(n);
    for (const auto& path : paths) {
      out.first.push_back(path.positions()[1]);
      out.second.push_back(path.positions()[2]);
    }
    return out;
  };
  return g;
}

constexpr double kControlDt = 0.01;

// Euler-Maruyama with drift -v_d tanh(kappa x): the wrong process.
Generator reverting_generator() {
  Generator g;
  g.name = "reverting_em";
  g.terminal = [](double x0, double t, const ProcessParams& p, std::size_t n, std::uint64_t seed,
                  unsigned threads) {
    const sde::IntegratorConfig cfg{sde::Scheme::EulerMaruyama, kControlDt,
                                    sde::steps_in(t, kControlDt)};
    return sde::terminal_ensemble(x0, sde::BoundedDrift::reverting_tanh(p), cfg, p, n, seed,
                                  threads);
  };
  g.pairs = [](double x0, double t, double tau, const ProcessParams& p, std::size_t n,
               std::uint64_t seed, unsigned threads) {
    const sde::IntegratorConfig cfg{sde::Scheme::EulerMaruyama, kControlDt,
                                    sde::steps_in(t + tau, kControlDt)};
    const std::size_t i_t = sde::steps_in(t, kControlDt);
    const auto drift = sde::BoundedDrift::reverting_tanh(p);
    std::pair<std::vector<double>, std::vector<double>> out{std::vector<double>(n),
                                                            std::vector<double>(n)};
    parallel_for(n, threads, [&](std::size_t i) {
      RngStream rng = substream(seed, i);
      const Path path = sde::integrate(x0, drift, cfg, p, rng);
      out.first[i] = path.positions()[i_t];
      out.second[i] = path.positions().back();
    });
    return out;
  };
  return g;
}

// ---------------------------------------------------------------------------
// Sampler battery: KS against the mixture CDF plus moment agreement.

struct GridPoint {
  double v_d, sigma, x0, t;
};

std::vector<GridPoint> standard_grid() {
  std::vector<GridPoint> out;
  for (double v : {0.0, 0.5, 1.0, 3.0})
    for (double s : {0.5, 1.0, 2.0})
      for (double x0 : {-2.0, 0.0, 0.7, 5.0})
        for (double t : {0.1, 1.0, 10.0}) out.push_back({v, s, x0, t});
  return out;
}

std::vector<GridPoint> control_grid() {
  std::vector<GridPoint> out;
  for (double v : {1.0, 3.0})
    for (double x0 : {0.7, 5.0}) out.push_back({v, 1.0, x0, 1.0});
  return out;
}

std::string describe(const GridPoint& g) {
  return "v_d=" + fmt(g.v_d) + " sigma=" + fmt(g.sigma) + " x0=" + fmt(g.x0) + " t=" + fmt(g.t);
}

struct SamplerBattery {
  std::vector<Check> checks;
  double min_ks_p = 1.0;
  double max_mean_z = 0.0;
};

SamplerBattery sampler_battery(const std::vector<GridPoint>& grid, const Generator& gen,
                               std::size_t n_ks, std::size_t n_moments, double alpha,
                               std::uint64_t seed, unsigned threads) {
  const double alpha_point = alpha / static_cast<double>(grid.size());
  SamplerBattery b;
  double max_var_z = 0.0, max_mart_z = 0.0, max_m2_z = 0.0;
  std::string worst_ks, worst_mean, worst_var, worst_mart, worst_m2;
  int rejections = 0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const auto& g = grid[k];
    const ProcessParams p(g.v_d, g.sigma);
    const auto samples = gen.terminal(g.x0, g.t, p, std::max(n_ks, n_moments),
                                      derive_seed(seed, k), threads);
    const std::span<const double> all(samples);

    const auto ks = stats::distribution_distance(all.first(n_ks), stats::AnalyticLaw{p, g.x0, g.t},
                                                 stats::Metric::KS, {alpha, 0.01, 0});
    if (!ks.passed) ++rejections;
    if (ks.p_value < b.min_ks_p) {
      b.min_ks_p = ks.p_value;
      worst_ks = describe(g);
    }

    const auto s = stats::summarize(all.first(n_moments), p, g.t, g.x0);
    auto track = [&](double z, double& worst, std::string& where) {
      if (z > worst) {
        worst = z;
        where = describe(g);
      }
    };
    track(z_score(s.mean.value, analytic::mean_exact(g.x0, g.t, p), s.mean.se), b.max_mean_z,
          worst_mean);
    track(z_score(s.variance.value, analytic::variance_exact(g.x0, g.t, p), s.variance.se),
          max_var_z, worst_var);
    // tanh(kappa X) is bounded, so when every draw saturates (se = 0) the
    // ensemble still only resolves the mean to about 1/n.
    const double mart_se = std::max(s.martingale.se, 1.0 / static_cast<double>(n_moments));
    track(z_score(s.martingale.value, std::tanh(p.kappa() * g.x0), mart_se), max_mart_z,
          worst_mart);

    std::vector<double> sq(n_moments);
    for (std::size_t i = 0; i < n_moments; ++i) sq[i] = samples[i] * samples[i];
    const auto m2 = mean_and_se(sq);
    track(z_score(m2.mean, analytic::second_moment_exact(g.x0, g.t, p), m2.se), max_m2_z,
          worst_m2);
  }
  const std::string sizes = gen.name + ", " + std::to_string(grid.size()) + " points, N_ks=" +
                            std::to_string(n_ks) + ", N_moments=" + std::to_string(n_moments);
  b.checks.push_back(at_least("ks_min_p_value", b.min_ks_p, alpha_point,
                              sizes + "; Bonferroni level alpha/points; worst at " + worst_ks +
                                  "; " + std::to_string(rejections) +
                                  " points individually below alpha=" + fmt(alpha)));
  b.checks.push_back(at_most("mean_max_z", b.max_mean_z, 4.0, "worst at " + worst_mean));
  b.checks.push_back(at_most("martingale_max_z", max_mart_z, 4.0, "worst at " + worst_mart));
  b.checks.push_back(at_most("variance_max_z", max_var_z, 5.0, "worst at " + worst_var));
  b.checks.push_back(at_most("second_moment_max_z", max_m2_z, 5.0, "worst at " + worst_m2));
  return b;
}

// ---------------------------------------------------------------------------
// MSD battery over a 3 x 3 grid of (t, x0).

struct MsdBattery {
  std::vector<Check> checks;
  double max_z = 0.0;
  double chi2_p = 1.0;
};

MsdBattery msd_battery(const Generator& gen, std::size_t n, std::uint64_t seed, unsigned threads) {
  const ProcessParams p(1.0, 1.0);
  const double tau = 1.0;
  const double exact = analytic::msd_exact(tau, p);
  std::vector<stats::Estimate> estimates;
  MsdBattery b;
  std::string worst, table;
  std::uint64_t k = 0;
  for (double t : {0.5, 1.0, 2.0}) {
    for (double x0 : {0.0, 1.0, 3.0}) {
      const auto [a, c] = gen.pairs(x0, t, tau, p, n, derive_seed(seed, k++), threads);
      const auto e = stats::msd_from_pairs(a, c);
      estimates.push_back(e);
      const double z = z_score(e.value, exact, e.se);
      table += "(t=" + fmt(t) + ",x0=" + fmt(x0) + "): " + fmt(e.value) + "+/-" + fmt(e.se) + " ";
      if (z > b.max_z) {
        b.max_z = z;
        worst = "t=" + fmt(t) + " x0=" + fmt(x0);
      }
    }
  }
  const auto chi = stats::chi_square_compatibility(estimates);
  b.chi2_p = chi.p_value;
  b.checks.push_back(at_most("msd_max_z", b.max_z, 5.0,
                             gen.name + ", N=" + std::to_string(n) + ", target sigma^2 tau + " +
                                 "v_d^2 tau^2 = " + fmt(exact) + "; worst at " + worst + "; " +
                                 table));
  b.checks.push_back(at_least("msd_chi2_p_value", chi.p_value, 0.01,
                              "statistic " + fmt(chi.statistic) + " on " +
                                  std::to_string(chi.dof) + " dof, weighted mean " +
                                  fmt(chi.weighted_mean)));
  return b;
}

// ---------------------------------------------------------------------------
// Quadrature over the transition law.

double integrate_law(const std::function<double(double)>& g, double x0, double t,
                     const ProcessParams& p) {
  const double sd = p.sigma() * std::sqrt(t);
  const double lo_mean = x0 - p.v_d() * t, hi_mean = x0 + p.v_d() * t;
  std::vector<double> cuts = {lo_mean - 12.0 * sd, lo_mean, hi_mean, hi_mean + 12.0 * sd};
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    total += merged::integrate(
                 [&](double x) { return g(x) * analytic::transition_pdf({x0, x, t}, p); },
                 cuts[i], cuts[i + 1])
                 .value;
  }
  return total;
}

// Forward-equation residual of the closed form by central differences with
// step h in both x and t.
double fpe_residual(double x, double t, double x0, const ProcessParams& p, double h) {
  auto pdf = [&](double y, double s) { return analytic::transition_pdf({x0, y, s}, p); };
  auto flux = [&](double y) { return p.v_d() * std::tanh(p.kappa() * y) * pdf(y, t); };
  const double dpdt = (pdf(x, t + h) - pdf(x, t - h)) / (2.0 * h);
  const double dflux = (flux(x + h) - flux(x - h)) / (2.0 * h);
  const double lap = (pdf(x + h, t) - 2.0 * pdf(x, t) + pdf(x - h, t)) / (h * h);
  return dpdt + dflux - 0.5 * p.sigma2() * lap;
}

template <class F>
CriterionResult guarded(int id, std::string title, F&& body) {
  CriterionResult r{id, std::move(title), std::string(group_of(id)), {}, 0.0};
  const auto start = std::chrono::steady_clock::now();
  try {
    body(r.checks);
  } catch (const std::exception& e) {
    r.checks.push_back({"completed", 0.0, 1.0, Comparison::Equal, false, e.what()});
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

}  // namespace

bool CriterionResult::passed() const {
  return !checks.empty() &&
         std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

std::string_view to_string(Comparison c) {
  switch (c) {
    case Comparison::LessEqual: return "<=";
    case Comparison::GreaterEqual: return ">=";
    case Comparison::Equal: return "==";
  }
  return "?";
}

const std::vector<std::string>& group_names() {
  static const std::vector<std::string> names = {"analytic", "sampler", "ck",  "msd",
                                                 "sde",      "walk",    "fpe", "control"};
  return names;
}

std::string_view group_of(int criterion) {
  switch (criterion) {
    case 1:
    case 10: return "analytic";
    case 2:
    case 5: return "sampler";
    case 3: return "ck";
    case 4: return "msd";
    case 6: return "sde";
    case 7:
    case 8: return "walk";
    case 9: return "fpe";
    case 11: return "control";
  }
  throw std::domain_error("no criterion " + std::to_string(criterion));
}

void validate_selection(const std::set<std::string>& only) {
  const auto& names = group_names();
  for (const auto& s : only) {
    if (std::find(names.begin(), names.end(), s) != names.end()) continue;
    bool numeric = !s.empty() && s.size() <= 2 && std::all_of(s.begin(), s.end(), ::isdigit);
    if (numeric) {
      const int id = std::stoi(s);
      if (id >= 1 && id <= 11) continue;
    }
    throw std::domain_error("unknown verification group '" + s + "'");
  }
}

CriterionResult closed_form_law(const VerifyOptions&) {
  return guarded(1, "closed-form transition law", [&](std::vector<Check>& out) {
    double norm_err = 0.0, mean_err = 0.0, var_err = 0.0, mart_err = 0.0, mix_err = 0.0,
           sym_err = 0.0;
    for (const auto& g : standard_grid()) {
      const ProcessParams p(g.v_d, g.sigma);
      const double m = analytic::mean_exact(g.x0, g.t, p);
      const double kappa = p.kappa();
      norm_err = std::max(norm_err,
                          std::abs(integrate_law([](double) { return 1.0; }, g.x0, g.t, p) - 1.0));
      mean_err = std::max(mean_err,
                          std::abs(integrate_law([](double x) { return x; }, g.x0, g.t, p) - m));
      var_err = std::max(
          var_err, std::abs(integrate_law([m](double x) { return (x - m) * (x - m); }, g.x0, g.t,
                                          p) -
                            analytic::variance_exact(g.x0, g.t, p)));
      mart_err = std::max(
          mart_err,
          std::abs(integrate_law([kappa](double x) { return std::tanh(kappa * x); }, g.x0, g.t, p) -
                   std::tanh(kappa * g.x0)));
      const double w = analytic::mixture_weight(g.x0, p);
      const double sd = g.sigma * std::sqrt(g.t);
      for (int i = -8; i <= 8; ++i) {
        const double x = m + 0.5 * i * sd;
        const analytic::TransitionQuery q{g.x0, x, g.t};
        const double direct = analytic::transition_pdf(q, p);
        const double mix = w * analytic::gaussian_component_pdf(q, +1, p) +
                           (1.0 - w) * analytic::gaussian_component_pdf(q, -1, p);
        if (mix > 1e-280) mix_err = std::max(mix_err, std::abs(direct - mix) / mix);
        const double mirrored = analytic::transition_pdf({-g.x0, -x, g.t}, p);
        if (direct > 0.0) sym_err = std::max(sym_err, std::abs(mirrored - direct) / direct);
      }
    }
    out.push_back(at_most("normalization_max_error", norm_err, 1e-10, "144-point standard grid"));
    out.push_back(at_most("mean_max_error", mean_err, 1e-8));
    out.push_back(at_most("variance_max_error", var_err, 1e-8));
    out.push_back(at_most("martingale_max_error", mart_err, 1e-8));
    out.push_back(at_most("mixture_identity_max_rel_error", mix_err, 1e-12));
    out.push_back(at_most("reflection_symmetry_max_rel_error", sym_err, 1e-15));

    const ProcessParams p(1.0, 1.0);
    const double far = analytic::transition_log_pdf({0.0, 1000.0, 1.0}, p);
    out.push_back(at_most("log_density_far_tail_finite", std::isfinite(far) ? 0.0 : 1.0, 0.0,
                          "log p(1000, 1; 0) = " + fmt(far)));

    // Forward-equation residual under refinement of the difference step.
    const std::vector<double> steps = {0.02, 0.01, 0.005};
    std::vector<double> residuals;
    for (double h : steps) {
      double worst = 0.0;
      for (double x : {-2.0, -1.0, 0.0, 0.5, 1.0, 2.5}) {
        worst = std::max(worst, std::abs(fpe_residual(x, 1.0, 0.5, p, h)));
      }
      residuals.push_back(worst);
    }
    const double order = stats::fit_order(steps, residuals).slope;
    out.push_back(at_least("forward_equation_residual_order", order, 1.8,
                           "max residuals " + fmt(residuals[0]) + ", " + fmt(residuals[1]) + ", " +
                               fmt(residuals[2]) + " at h = 0.02, 0.01, 0.005"));
    out.push_back(at_most("forward_equation_residual_finest", residuals.back(), 1e-4));
  });
}

CriterionResult exact_sampler(const VerifyOptions& opt) {
  return guarded(2, "exact sampler", [&](std::vector<Check>& out) {
    if (opt.flip_drift_sign) {
      auto b = sampler_battery(control_grid(), reverting_generator(), scaled(opt, 100000, 1000),
                               scaled(opt, 100000, 1000), 0.01, seed_for(opt, 2, 0), opt.threads);
      out = std::move(b.checks);
      return;
    }
    auto b = sampler_battery(standard_grid(), exact_generator(), scaled(opt, 100000, 1000),
                             scaled(opt, 1000000, 1000), 0.01, seed_for(opt, 2, 0), opt.threads);
    out = std::move(b.checks);
  });
}

CriterionResult chapman_kolmogorov(const VerifyOptions&) {
  return guarded(3, "Chapman-Kolmogorov composition", [&](std::vector<Check>& out) {
    struct Point {
      double v_d, sigma, x0, x, t, t_mid;
    };
    const Point points[] = {{1.0, 1.0, 0.0, 1.0, 1.0, 0.5},
                            {0.0, 1.0, 0.0, 0.3, 1.0, 0.4},
                            {3.0, 0.5, 0.7, 2.0, 1.0, 0.3},
                            {0.5, 2.0, -2.0, -1.0, 10.0, 4.0},
                            {3.0, 1.0, 5.0, 8.0, 2.0, 1.5}};
    double worst = 0.0;
    std::string detail;
    for (const auto& q : points) {
      const double r = analytic::chapman_kolmogorov_residual(q.x, q.t, q.t_mid, q.x0,
                                                             ProcessParams(q.v_d, q.sigma));
      worst = std::max(worst, r);
      detail += fmt(r) + " ";
    }
    out.push_back(at_most("max_residual", worst, 1e-8, "residuals: " + detail));
  });
}

CriterionResult msd_invariance(const VerifyOptions& opt) {
  return guarded(4, "MSD invariance", [&](std::vector<Check>& out) {
    auto b = opt.flip_drift_sign
                 ? msd_battery(reverting_generator(), scaled(opt, 10000, 1000), seed_for(opt, 4, 0),
                               opt.threads)
                 : msd_battery(exact_generator(), scaled(opt, 100000, 1000), seed_for(opt, 4, 0),
                               opt.threads);
    out = std::move(b.checks);
  });
}

CriterionResult covariance(const VerifyOptions& opt) {
  return guarded(5, "two-time covariance", [&](std::vector<Check>& out) {
    const ProcessParams p(1.0, 1.0);
    const double x0 = 0.0, t = 1.0, tau = 1.0;
    const std::size_t n = scaled(opt, 1000000, 1000);
    const auto [a, b] = exact_generator().pairs(x0, t, tau, p, n, seed_for(opt, 5, 0), opt.threads);
    const auto cov = stats::covariance_from_pairs(a, b);
    const double exact = analytic::covariance_exact(x0, t, tau, p);
    out.push_back(at_most("covariance_z", z_score(cov.value, exact, cov.se), 5.0,
                          "estimate " + fmt(cov.value) + " +/- " + fmt(cov.se) + " vs " +
                              fmt(exact) + ", N=" + std::to_string(n)));
    const auto msd = stats::msd_from_pairs(a, b);
    out.push_back(at_most("msd_z", z_score(msd.value, analytic::msd_exact(tau, p), msd.se), 5.0,
                          "estimate " + fmt(msd.value) + " +/- " + fmt(msd.se)));
    const auto self = stats::covariance_from_pairs(a, a);
    const auto summary = stats::summarize(a, p, t, x0);
    out.push_back(at_most("zero_lag_equals_variance", std::abs(self.value - summary.variance.value),
                          0.0));
  });
}

CriterionResult integrators(const VerifyOptions& opt) {
  return guarded(6, "SDE integrators", [&](std::vector<Check>& out) {
    const ProcessParams p(1.0, 1.0);
    const double x0 = 0.5, T = 1.0, dt = 1e-3;
    const std::size_t n = scaled(opt, 100000, 1000);
    const auto exact =
        analytic::exact_terminal_ensemble(x0, T, p, n, seed_for(opt, 6, 0), opt.threads);
    const auto ref = stats::summarize(exact, p, T, x0);
    for (auto scheme : {sde::Scheme::EulerMaruyama, sde::Scheme::Heun}) {
      const std::string label = scheme == sde::Scheme::Heun ? "heun" : "euler_maruyama";
      const sde::IntegratorConfig cfg{scheme, dt, sde::steps_in(T, dt)};
      const auto xs = sde::terminal_ensemble(x0, sde::BoundedDrift::tanh(p), cfg, p, n,
                                             seed_for(opt, 6, scheme == sde::Scheme::Heun ? 2 : 1),
                                             opt.threads);
      const auto s = stats::summarize(xs, p, T, x0);
      const double mean_se = std::hypot(s.mean.se, ref.mean.se);
      const double var_se = std::hypot(s.variance.se, ref.variance.se);
      out.push_back(at_most(label + "_mean_z", z_score(s.mean.value, ref.mean.value, mean_se), 4.0,
                            fmt(s.mean.value) + " vs exact ensemble " + fmt(ref.mean.value)));
      out.push_back(at_most(label + "_variance_z",
                            z_score(s.variance.value, ref.variance.value, var_se), 5.0,
                            fmt(s.variance.value) + " vs exact ensemble " +
                                fmt(ref.variance.value)));
    }

    const ProcessParams wp(2.0, 1.0);
    const std::vector<double> dts = {0.1, 0.05, 0.025};
    const auto curve = sde::weak_error_curve(0.5, 2.0, dts, scaled(opt, 100000, 10000), wp,
                                             seed_for(opt, 6, 3),
                                             {sde::Scheme::EulerMaruyama, analytic::DriftFamily(), opt.threads, 12});
    std::vector<double> errs;
    std::string detail;
    double worst_consistency = 0.0;
    for (const auto& point : curve) {
      const auto& e = point.at(sde::Observable::X);
      errs.push_back(std::abs(e.error));
      detail += "dt=" + fmt(point.dt) + ": " + fmt(e.error) + "+/-" + fmt(e.error_se) +
                " (direct " + fmt(e.direct_error) + "+/-" + fmt(e.direct_se) + ") ";
      worst_consistency = std::max(
          worst_consistency,
          z_score(e.error, e.direct_error, std::hypot(e.error_se, e.direct_se)));
    }
    const double slope = stats::fit_order(dts, errs).slope;
    out.push_back(at_least("euler_weak_order_lower", slope, 0.8,
                           "E[X_T] at v_d=2 sigma=1 x0=0.5 T=2; " + detail));
    out.push_back(at_most("euler_weak_order_upper", slope, 1.3));
    out.push_back(at_most("weak_error_estimators_agree_z", worst_consistency, 4.0,
                          "backward-function estimate vs direct matched-seed estimate"));
  });
}

CriterionResult walk_invariants(const VerifyOptions& opt) {
  return guarded(7, "random-walk invariants", [&](std::vector<Check>& out) {
    const double dx = 0.1;
    double cons = 0.0, loop = 0.0, loop2 = 0.0, matrix = 0.0, mart = 0.0, total = 0.0, ck = 0.0;
    RngStream rng = substream(seed_for(opt, 7, 0), 0);
    for (double xi : {0.0, 0.1, 0.5, 1.0, 2.0}) {
      const walk::WalkParams wp{dx, 0.01, xi};
      const double c2 = std::cosh(xi) * std::cosh(xi);
      for (int i = 0; i < 1000; ++i) {
        const double x = (2.0 * rng.uniform() - 1.0) * 1000.0 * dx;
        const auto pr = walk::step_probabilities(x, wp);
        cons = std::max(cons, std::abs(pr.up + pr.down - 1.0));
        loop = std::max(loop, std::abs(walk::loop_product(x, wp) - 1.0 / (4.0 * c2)));
        const double two = walk::step_probabilities(x, wp).up *
                           walk::step_probabilities(x + dx, wp).up *
                           walk::step_probabilities(x + 2.0 * dx, wp).down *
                           walk::step_probabilities(x + dx, wp).down;
        loop2 = std::max(loop2, std::abs(two - 1.0 / (16.0 * c2 * c2)));
      }
      // Transition-matrix powers with the literal cosh ratio in extended
      // precision, started from several lattice sites.
      for (int k0 : {0, 3, -2}) {
        const double x0 = k0 * dx;
        const long double ch = std::cosh(static_cast<long double>(xi));
        const int n_max = 20;
        std::vector<long double> prob(2 * n_max + 1, 0.0L);
        prob[n_max] = 1.0L;
        for (int n = 1; n <= n_max; ++n) {
          std::vector<long double> next(prob.size(), 0.0L);
          for (int j = 0; j < static_cast<int>(prob.size()); ++j) {
            if (prob[j] == 0.0L) continue;
            const long double site = k0 + j - n_max;
            const long double here = std::cosh(site * xi);
            const long double up = std::cosh((site + 1) * xi) / (2.0L * ch * here);
            const long double down = std::cosh((site - 1) * xi) / (2.0L * ch * here);
            next[j + 1] += prob[j] * up;
            next[j - 1] += prob[j] * down;
          }
          prob.swap(next);
          const auto dist = walk::exact_walk_distribution(x0, n, wp);
          double m = 0.0;
          for (int off = -n_max; off <= n_max; ++off) {
            matrix = std::max(matrix, std::abs(dist.at_offset(off) -
                                               static_cast<double>(prob[off + n_max])));
          }
          for (std::size_t i = 0; i < dist.size(); ++i) {
            m += std::tanh(xi * static_cast<double>(k0 + dist.offset(i))) * dist.probability(i);
          }
          mart = std::max(mart, std::abs(m - std::tanh(xi * k0)));
          total = std::max(total, std::abs(dist.total() - 1.0));
        }
      }
      // Lattice Chapman-Kolmogorov: 13 steps = 7 steps, then 6 from each site.
      const auto first = walk::exact_walk_distribution(0.0, 7, wp);
      const auto direct = walk::exact_walk_distribution(0.0, 13, wp);
      std::vector<double> composed(2 * 13 + 1, 0.0);
      for (std::size_t i = 0; i < first.size(); ++i) {
        const auto second = walk::exact_walk_distribution(first.position(i), 6, wp);
        for (std::size_t j = 0; j < second.size(); ++j) {
          composed[static_cast<std::size_t>(first.offset(i) + second.offset(j) + 13)] +=
              first.probability(i) * second.probability(j);
        }
      }
      for (int off = -13; off <= 13; ++off) {
        ck = std::max(ck, std::abs(composed[off + 13] - direct.at_offset(off)));
      }
    }
    out.push_back(at_most("conservation_max_error", cons, 1e-15,
                          "1000 sites per xi in {0, 0.1, 0.5, 1, 2}"));
    out.push_back(at_most("loop_product_max_error", loop, 1e-14));
    out.push_back(at_most("two_step_loop_max_error", loop2, 1e-14));
    out.push_back(at_most("matrix_power_max_error", matrix, 1e-12, "n <= 20, three start sites"));
    out.push_back(at_most("lattice_martingale_max_error", mart, 1e-12));
    out.push_back(at_most("normalization_max_error", total, 1e-12));
    out.push_back(at_most("lattice_chapman_kolmogorov_max_error", ck, 1e-12));
  });
}

CriterionResult continuum_limit(const VerifyOptions&) {
  return guarded(8, "walk continuum limit", [&](std::vector<Check>& out) {
    const ProcessParams target(0.5, 1.0);
    std::vector<walk::WalkParams> seq;
    for (double dx : {0.2, 0.1, 0.05}) seq.push_back(walk::walk_params_for(target, dx));
    const auto pts = walk::continuum_convergence(0.0, 1.0, seq, target);
    std::string detail;
    double worst_ratio = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      detail += "dx=" + fmt(pts[i].dx) + ": " + fmt(pts[i].distance) + " ";
      if (i > 0) worst_ratio = std::max(worst_ratio, pts[i].distance / pts[i - 1].distance);
    }
    out.push_back({"distance_ratio_max", worst_ratio, 1.0, Comparison::LessEqual,
                   worst_ratio < 1.0, "strictly decreasing required; " + detail});
    const double coarse =
        walk::walk_to_continuum_distance(0.0, 1.0, walk::walk_params_for(target, 0.5));
    out.push_back(at_most("coarse_distance_finite", std::isfinite(coarse) ? 0.0 : 1.0, 0.0,
                          "dx=0.5: " + fmt(coarse)));
  });
}

CriterionResult fpe_solver(const VerifyOptions&) {
  return guarded(9, "Fokker-Planck solver", [&](std::vector<Check>& out) {
    const ProcessParams p(1.0, 1.0);
    const auto grid = fpe::padded_grid(0.0, p, 1.0, 0.01, 1e-4);
    const auto sol = fpe::solve_fpe(0.0, p, grid, {analytic::DriftFamily(), 10});
    double min_density = kInf;
    for (const auto& s : sol.snapshots) min_density = std::min(min_density, s.min_density);
    out.push_back(at_most("l1_gap_reference", fpe::l1_gap(sol, sol.final(), 0.0, p), 1e-3,
                          "v_d=1 sigma=1 x0=0 t=1 h=0.01 dt=1e-4"));
    out.push_back(at_most("mass_error", sol.max_mass_error, 1e-8));
    out.push_back(at_least("min_density", min_density, -1e-12));
    const auto& d = sol.final().density;
    double asym = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) asym = std::max(asym, std::abs(d[i] - d[d.size() - 1 - i]));
    out.push_back(at_most("symmetry_max_error", asym, 1e-10));

    const auto plus = analytic::DriftFamily::plus_bias();
    const auto sol_plus = fpe::solve_fpe(0.0, p, grid, {plus, 1});
    out.push_back(at_most("constant_drift_l1_gap",
                          fpe::l1_gap(sol_plus, sol_plus.final(), 0.0, p, plus), 1e-3));

    const ProcessParams heat(0.0, 1.0);
    const auto heat_study =
        fpe::fpe_convergence(0.0, heat, fpe::padded_grid(0.0, heat, 1.0, 0.08, 0.004), 3);
    const auto tanh_study =
        fpe::fpe_convergence(0.0, p, fpe::padded_grid(0.0, p, 1.0, 0.08, 0.004), 3);
    auto gaps = [](const fpe::ConvergenceStudy& s) {
      std::string g;
      for (std::size_t i = 0; i < s.h.size(); ++i) g += "h=" + fmt(s.h[i]) + ": " + fmt(s.gaps[i]) + " ";
      return g;
    };
    out.push_back(at_least("heat_order", heat_study.order, 1.8, gaps(heat_study)));
    out.push_back(at_least("tanh_order", tanh_study.order, 1.7, gaps(tanh_study)));
  });
}

CriterionResult drift_family(const VerifyOptions&) {
  return guarded(10, "drift-family theory", [&](std::vector<Check>& out) {
    using analytic::DriftFamily;
    const std::vector<DriftFamily> families = {DriftFamily::tanh(0.0), DriftFamily::tanh(std::tanh(0.3)),
                                               DriftFamily::tanh(-0.6), DriftFamily::plus_bias(),
                                               DriftFamily::minus_bias()};
    double ode = 0.0, g_ode = 0.0, g_sol = 0.0;
    for (const auto& fam : families) {
      for (int i = -1000; i <= 1000; ++i) {
        const double u = 0.01 * i;
        ode = std::max(ode, std::abs(analytic::ode_residual(fam, u)));
        if (i == 0) continue;
        const auto g = analytic::g_family_residual(fam, u, 1.0, 0.0);
        g_ode = std::max(g_ode, std::abs(g.ode));
        g_sol = std::max(g_sol, std::abs(g.solution));
      }
    }
    out.push_back(at_most("ode_residual_max", ode, 1e-12, "u in [-10, 10], five family members"));
    out.push_back(at_most("g_family_ode_residual_max", g_ode, 1e-12, "c0=1, c1=0"));
    out.push_back(at_most("g_family_solution_residual_max", g_sol, 1e-12));

    const ProcessParams p(1.0, 1.0);
    const auto naive = analytic::naive_superposition_moments(0.0, 1.0, p);
    const double exact = analytic::variance_exact(0.0, 1.0, p);
    out.push_back(at_least("naive_variance_gap", std::abs(exact - naive.variance), 1.0,
                           "naive " + fmt(naive.variance) + " vs mixture " + fmt(exact)));
    out.push_back(at_most("naive_mean_gap", std::abs(naive.mean - analytic::mean_exact(0.0, 1.0, p)),
                          0.0));
  });
}

CriterionResult negative_control(const VerifyOptions& opt) {
  return guarded(11, "negative control (reverting drift)", [&](std::vector<Check>& out) {
    const auto gen = reverting_generator();
    const auto b2 = sampler_battery(control_grid(), gen, scaled(opt, 100000, 1000),
                                    scaled(opt, 100000, 1000), 0.01, seed_for(opt, 11, 0),
                                    opt.threads);
    const auto b4 = msd_battery(gen, scaled(opt, 10000, 1000), seed_for(opt, 11, 1), opt.threads);
    auto failed = [](const std::vector<Check>& cs) {
      std::string names;
      double n = 0;
      for (const auto& c : cs) {
        if (!c.passed) {
          names += c.name + " ";
          ++n;
        }
      }
      return std::pair{n, names};
    };
    const auto [n2, names2] = failed(b2.checks);
    const auto [n4, names4] = failed(b4.checks);
    out.push_back(at_least("sampler_battery_failed_checks", n2, 1.0, "failed: " + names2));
    out.push_back(at_least("msd_battery_failed_checks", n4, 1.0, "failed: " + names4));
    out.push_back({"mean_check_rejects", b2.max_mean_z, 4.0, Comparison::GreaterEqual,
                   b2.max_mean_z > 4.0, "max mean z under the reverting drift"});
    out.push_back({"msd_check_rejects", b4.max_z, 5.0, Comparison::GreaterEqual, b4.max_z > 5.0,
                   "max MSD z under the reverting drift"});
  });
}

CriterionResult run_criterion(int id, const VerifyOptions& opt) {
  switch (id) {
    case 1: return closed_form_law(opt);
    case 2: return exact_sampler(opt);
    case 3: return chapman_kolmogorov(opt);
    case 4: return msd_invariance(opt);
    case 5: return covariance(opt);
    case 6: return integrators(opt);
    case 7: return walk_invariants(opt);
    case 8: return continuum_limit(opt);
    case 9: return fpe_solver(opt);
    case 10: return drift_family(opt);
    case 11: return negative_control(opt);
  }
  throw std::domain_error("no criterion " + std::to_string(id));
}

std::vector<CriterionResult> run_all(const VerifyOptions& opt) {
  validate_selection(opt.only);
  std::vector<CriterionResult> out;
  for (int id = 1; id <= 11; ++id) {
    const bool selected = opt.only.empty() || opt.only.count(std::string(group_of(id))) > 0 ||
                          opt.only.count(std::to_string(id)) > 0;
    if (selected) out.push_back(run_criterion(id, opt));
  }
  return out;
}

}  // namespace merged::verify
