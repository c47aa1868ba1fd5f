#pragma once

#include <string>
#include <vector>

#include "merged/analytic.hpp"
#include "merged/params.hpp"

namespace merged::fpe {

struct FpeGrid {
  double x_min = -10.0;
  double x_max = 10.0;
  std::size_t n_cells = 2000;
  double dt_pde = 1e-4;
  double t_final = 1.0;

  double h() const noexcept { return (x_max - x_min) / static_cast<double>(n_cells); }
  double center(std::size_t i) const noexcept {
    return x_min + (static_cast<double>(i) + 0.5) * h();
  }
  void validate() const;
};

struct Snapshot {
  double time;
  std::vector<double> density;  // cell averages
  double mass;
  double min_density;  // before clamping
};

struct FpeSolution {
  FpeGrid grid;
  std::vector<Snapshot> snapshots;
  double initial_sd;  // width of the Gaussian that replaces the delta start
  double max_mass_error;
  std::vector<std::string> warnings;

  const Snapshot& final() const { return snapshots.back(); }
  std::vector<double> mass_history() const;
};

struct SolveOptions {
  analytic::DriftFamily family{};
  /// Snapshots are taken at t = 0 and at n_snapshots equally spaced times
  /// ending at t_final.
  std::size_t n_snapshots = 1;
};

/// Crank-Nicolson solve of dp/dt = -d/dx[v_d f(kappa x) p] + (sigma^2/2) d2p/dx2
/// on cell averages with zero-flux walls. The drift flux uses the average of
/// the neighbouring cells (centred, conservative). The first two steps are
/// taken as four backward-Euler half steps, which damps the grid-scale
/// content of the narrow initial Gaussian (sd 2h).
///
/// Throws std::domain_error when x0 lies outside the domain or the domain
/// does not reach v_d t_final + 8 sigma sqrt(t_final) past x0 on both sides.
FpeSolution solve_fpe(double x0, const ProcessParams& params, const FpeGrid& grid,
                      const SolveOptions& options = {});

/// Exact density at time t of the process started from N(x0, init_sd^2)
/// instead of a point, i.e. the closed-form law convolved over the start.
/// Pure-bias families are Gaussian in closed form; the tanh family is
/// integrated numerically.
double smoothed_density(double x, double t, double x0, double init_sd,
                        const ProcessParams& params,
                        const analytic::DriftFamily& family = analytic::DriftFamily{});

/// h * sum |p_i - smoothed_density(center_i, t)| for a snapshot.
double l1_gap(const FpeSolution& solution, const Snapshot& snapshot, double x0,
              const ProcessParams& params,
              const analytic::DriftFamily& family = analytic::DriftFamily{});

struct ConvergenceStudy {
  std::vector<double> h;
  std::vector<double> gaps;
  double order;
};

/// Solves on base_grid and `refinements` successively refined grids (h
/// halved, dt quartered) and fits the slope of log gap against log h.
/// Needs refinements >= 2.
ConvergenceStudy fpe_convergence(double x0, const ProcessParams& params, const FpeGrid& base_grid,
                                 int refinements, const SolveOptions& options = {});

double fpe_convergence_order(double x0, const ProcessParams& params, const FpeGrid& base_grid,
                             int refinements);

/// Symmetric domain around x0 wide enough for solve_fpe, with margin.
FpeGrid padded_grid(double x0, const ProcessParams& params, double t_final, double h,
                    double dt_pde, double n_sd = 10.0);

}  // namespace merged::fpe
