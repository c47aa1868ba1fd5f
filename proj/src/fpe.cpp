#include "merged/fpe.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "merged/numerics.hpp"
#include "merged/stats.hpp"

namespace merged::fpe {

using analytic::DriftFamily;

void FpeGrid::validate() const {
  if (!(x_min < x_max)) throw std::domain_error("FPE grid needs x_min < x_max");
  if (n_cells < 16) throw std::domain_error("FPE grid needs at least 16 cells");
  if (!(dt_pde > 0.0)) throw std::domain_error("FPE time step must be > 0");
  if (!(t_final > 0.0)) throw std::domain_error("FPE horizon must be > 0");
  if (dt_pde > t_final) throw std::domain_error("FPE time step exceeds the horizon");
}

std::vector<double> FpeSolution::mass_history() const {
  std::vector<double> out;
  out.reserve(snapshots.size());
  for (const auto& s : snapshots) out.push_back(s.mass);
  return out;
}

namespace {

// Tridiagonal system lower[i] y[i-1] + diag[i] y[i] + upper[i] y[i+1] = r[i],
// factored once and solved by forward sweep and back substitution.
class Tridiagonal {
 public:
  Tridiagonal(std::vector<double> lower, std::vector<double> diag, std::vector<double> upper)
      : lower_(std::move(lower)), upper_(std::move(upper)), pivot_(diag.size()),
        scaled_upper_(diag.size()) {
    const std::size_t n = diag.size();
    pivot_[0] = diag[0];
    scaled_upper_[0] = upper_[0] / pivot_[0];
    for (std::size_t i = 1; i < n; ++i) {
      pivot_[i] = diag[i] - lower_[i] * scaled_upper_[i - 1];
      if (pivot_[i] == 0.0) throw std::runtime_error("singular tridiagonal system");
      scaled_upper_[i] = (i + 1 < n) ? upper_[i] / pivot_[i] : 0.0;
    }
  }

  void solve(std::vector<double>& rhs) const {
    const std::size_t n = rhs.size();
    rhs[0] /= pivot_[0];
    for (std::size_t i = 1; i < n; ++i) rhs[i] = (rhs[i] - lower_[i] * rhs[i - 1]) / pivot_[i];
    for (std::size_t i = n - 1; i-- > 0;) rhs[i] -= scaled_upper_[i] * rhs[i + 1];
  }

 private:
  std::vector<double> lower_, upper_, pivot_, scaled_upper_;
};

// dp_i/dt = lower_i p_{i-1} + diag_i p_i + upper_i p_{i+1}.
struct Operator {
  std::vector<double> lower, diag, upper;

  void apply(const std::vector<double>& p, double scale, std::vector<double>& out) const {
    const std::size_t n = p.size();
    for (std::size_t i = 0; i < n; ++i) {
      double v = diag[i] * p[i];
      if (i > 0) v += lower[i] * p[i - 1];
      if (i + 1 < n) v += upper[i] * p[i + 1];
      out[i] = p[i] + scale * v;
    }
  }

  Tridiagonal implicit(double scale) const {
    const std::size_t n = diag.size();
    std::vector<double> l(n), d(n), u(n);
    for (std::size_t i = 0; i < n; ++i) {
      l[i] = -scale * lower[i];
      d[i] = 1.0 - scale * diag[i];
      u[i] = -scale * upper[i];
    }
    return Tridiagonal(std::move(l), std::move(d), std::move(u));
  }
};

Operator build_operator(const FpeGrid& grid, const ProcessParams& params, const DriftFamily& fam) {
  const std::size_t n = grid.n_cells;
  const double h = grid.h();
  const double diffusion = 0.5 * params.sigma2() / h;
  const double kappa = params.kappa();
  Operator op{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0),
              std::vector<double>(n, 0.0)};
  // Interface j + 1/2 sits between cells j and j + 1; its flux leaves cell j
  // and enters cell j + 1, so every column of the operator sums to zero.
  for (std::size_t j = 0; j + 1 < n; ++j) {
    const double x_face = grid.x_min + static_cast<double>(j + 1) * h;
    const double a = params.v_d() * analytic::drift_family_eval(fam, kappa * x_face);
    const double from_left = (0.5 * a + diffusion) / h;
    const double from_right = (0.5 * a - diffusion) / h;
    op.diag[j] -= from_left;
    op.upper[j] -= from_right;
    op.lower[j + 1] += from_left;
    op.diag[j + 1] += from_right;
  }
  return op;
}

double total_mass(const std::vector<double>& p, double h) { return pairwise_sum(p) * h; }

Snapshot take_snapshot(double t, const std::vector<double>& p, double h) {
  Snapshot s{t, p, total_mass(p, h), *std::min_element(p.begin(), p.end())};
  for (double& v : s.density) v = std::max(v, 0.0);
  return s;
}

}  // namespace

FpeSolution solve_fpe(double x0, const ProcessParams& params, const FpeGrid& grid,
                      const SolveOptions& options) {
  grid.validate();
  if (!(x0 > grid.x_min && x0 < grid.x_max)) {
    throw std::domain_error("FPE start x0 = " + std::to_string(x0) + " lies outside (" +
                            std::to_string(grid.x_min) + ", " + std::to_string(grid.x_max) + ")");
  }
  const double reach =
      params.v_d() * grid.t_final + 8.0 * params.sigma() * std::sqrt(grid.t_final);
  if (grid.x_min > x0 - reach || grid.x_max < x0 + reach) {
    throw std::domain_error("FPE domain too narrow: need [" + std::to_string(x0 - reach) + ", " +
                            std::to_string(x0 + reach) + "] (v_d t + 8 sigma sqrt(t) around x0)");
  }
  const std::size_t n_steps = static_cast<std::size_t>(std::llround(grid.t_final / grid.dt_pde));
  if (n_steps < 2 ||
      std::abs(static_cast<double>(n_steps) * grid.dt_pde - grid.t_final) > 1e-9 * grid.t_final) {
    throw std::domain_error("FPE time step must divide the horizon into at least two steps");
  }
  if (options.n_snapshots < 1) throw std::domain_error("FPE needs at least one snapshot");

  const double h = grid.h();
  const double dt = grid.dt_pde;
  FpeSolution sol{grid, {}, 2.0 * h, 0.0, {}};
  if (params.v_d() * dt / h > 1.0) {
    sol.warnings.push_back("v_d dt / h = " + std::to_string(params.v_d() * dt / h) +
                           " exceeds 1; expect reduced accuracy");
  }

  std::vector<double> p(grid.n_cells);
  const double s = sol.initial_sd;
  for (std::size_t i = 0; i < grid.n_cells; ++i) {
    const double lo = grid.x_min + static_cast<double>(i) * h;
    p[i] = (normal_cdf((lo + h - x0) / s) - normal_cdf((lo - x0) / s)) / h;
  }
  const double m0 = total_mass(p, h);
  for (double& v : p) v /= m0;

  const Operator op = build_operator(grid, params, options.family);
  // I - (dt/2) A is both the Crank-Nicolson left side and a backward-Euler
  // half step.
  const Tridiagonal lhs = op.implicit(0.5 * dt);

  std::vector<std::size_t> snapshot_steps;
  for (std::size_t k = 1; k <= options.n_snapshots; ++k) {
    snapshot_steps.push_back(static_cast<std::size_t>(
        std::llround(static_cast<double>(k) * static_cast<double>(n_steps) /
                     static_cast<double>(options.n_snapshots))));
  }

  sol.snapshots.push_back(take_snapshot(0.0, p, h));
  std::vector<double> rhs(grid.n_cells);
  std::size_t next_snapshot = 0;
  for (std::size_t step = 1; step <= n_steps; ++step) {
    if (step <= 2) {
      // Rannacher start: two backward-Euler half steps per full step.
      for (int half = 0; half < 2; ++half) lhs.solve(p);
    } else {
      op.apply(p, 0.5 * dt, rhs);
      lhs.solve(rhs);
      p.swap(rhs);
    }
    sol.max_mass_error = std::max(sol.max_mass_error, std::abs(total_mass(p, h) - 1.0));
    if (next_snapshot < snapshot_steps.size() && step == snapshot_steps[next_snapshot]) {
      sol.snapshots.push_back(take_snapshot(static_cast<double>(step) * dt, p, h));
      ++next_snapshot;
    }
  }
  return sol;
}

double smoothed_density(double x, double t, double x0, double init_sd,
                        const ProcessParams& params, const DriftFamily& family) {
  if (!(init_sd > 0.0)) throw std::domain_error("smoothing width must be > 0");
  if (t < 0.0) throw std::domain_error("smoothed density needs t >= 0");
  int bias = 0;
  switch (family.branch()) {
    case DriftFamily::Branch::PlusBias: bias = 1; break;
    case DriftFamily::Branch::MinusBias: bias = -1; break;
    case DriftFamily::Branch::Tanh:
      if (family.shift() != 0.0) {
        throw std::domain_error("smoothed density supports the canonical tanh drift only");
      }
      break;
  }
  if (t == 0.0 || bias != 0 || params.v_d() == 0.0) {
    const double sd = std::sqrt(params.sigma2() * t + init_sd * init_sd);
    const double mean = x0 + bias * params.v_d() * t;
    return normal_pdf((x - mean) / sd) / sd;
  }
  static const GaussHermiteRule gh(48);
  return gh.expectation(
      [&](double z) { return analytic::transition_pdf({x0 + init_sd * z, x, t}, params); });
}

double l1_gap(const FpeSolution& solution, const Snapshot& snapshot, double x0,
              const ProcessParams& params, const DriftFamily& family) {
  const auto& grid = solution.grid;
  std::vector<double> diff(grid.n_cells);
  for (std::size_t i = 0; i < grid.n_cells; ++i) {
    diff[i] = std::abs(snapshot.density[i] - smoothed_density(grid.center(i), snapshot.time, x0,
                                                              solution.initial_sd, params, family));
  }
  return pairwise_sum(diff) * grid.h();
}

ConvergenceStudy fpe_convergence(double x0, const ProcessParams& params, const FpeGrid& base_grid,
                                 int refinements, const SolveOptions& options) {
  if (refinements < 2) throw std::domain_error("convergence study needs refinements >= 2");
  ConvergenceStudy study{{}, {}, 0.0};
  FpeGrid grid = base_grid;
  for (int r = 0; r <= refinements; ++r) {
    const auto sol = solve_fpe(x0, params, grid, {options.family, 1});
    study.h.push_back(grid.h());
    study.gaps.push_back(l1_gap(sol, sol.final(), x0, params, options.family));
    grid.n_cells *= 2;
    grid.dt_pde /= 4.0;
  }
  study.order = stats::fit_order(study.h, study.gaps).slope;
  return study;
}

double fpe_convergence_order(double x0, const ProcessParams& params, const FpeGrid& base_grid,
                             int refinements) {
  return fpe_convergence(x0, params, base_grid, refinements).order;
}

FpeGrid padded_grid(double x0, const ProcessParams& params, double t_final, double h,
                    double dt_pde, double n_sd) {
  const double half_width = params.v_d() * t_final + n_sd * params.sigma() * std::sqrt(t_final);
  const auto m = static_cast<std::size_t>(std::ceil(half_width / h));
  FpeGrid grid;
  grid.x_min = x0 - static_cast<double>(m) * h;
  grid.x_max = x0 + static_cast<double>(m) * h;
  grid.n_cells = 2 * m;
  grid.dt_pde = dt_pde;
  grid.t_final = t_final;
  return grid;
}

}  // namespace merged::fpe
