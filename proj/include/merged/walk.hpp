#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "merged/params.hpp"
#include "merged/path.hpp"
#include "merged/rng.hpp"

namespace merged::walk {

/// Lattice spacing, time step and bias of the site-dependent random walk.
struct WalkParams {
  double dx = 1.0;
  double dt = 1.0;
  double xi = 0.0;

  void validate() const;
};

struct StepProbabilities {
  double up;
  double down;
};

/// p_{x -> x +/- dx} = cosh((x +/- dx) xi / dx) / (2 cosh(xi) cosh(xi x / dx)).
///
/// Evaluated as (1 +/- tanh(s) tanh(xi)) / 2 with s = xi x / dx; the smaller
/// of the two is formed from sums of positive terms so it keeps full relative
/// accuracy however far the site is from the origin.
StepProbabilities step_probabilities(double x, const WalkParams& wp);

/// p_{x -> x+dx} p_{x+dx -> x}; equal to 1 / (4 cosh^2 xi) at every site.
double loop_product(double x, const WalkParams& wp);

/// n_steps moves of +/- dx from x0 on the time grid k dt.
Path walk_path(double x0, std::size_t n_steps, const WalkParams& wp, RngStream& rng);

/// End position after n_steps, as a signed site offset from x0.
std::int64_t walk_terminal_offset(double x0, std::size_t n_steps, const WalkParams& wp,
                                  RngStream& rng);

/// Terminal offsets of n_paths independent walks; walk i uses
/// substream(master_seed, i) and draws exactly as walk_terminal_offset does.
std::vector<std::int64_t> walk_terminal_ensemble(double x0, std::size_t n_steps,
                                                 const WalkParams& wp, std::size_t n_paths,
                                                 std::uint64_t master_seed, unsigned threads = 0);

/// Law of the walk after a fixed number of steps, on the sites x0 + k dx for
/// k = -n, -n + 2, ..., n.
class WalkDistribution {
 public:
  WalkDistribution(double x0, double dx, std::size_t n_steps, std::vector<double> probabilities);

  double x0() const noexcept { return x0_; }
  double dx() const noexcept { return dx_; }
  std::size_t n_steps() const noexcept { return n_; }
  std::size_t size() const noexcept { return prob_.size(); }

  /// Site offset (in units of dx) of support point i.
  std::int64_t offset(std::size_t i) const noexcept {
    return -static_cast<std::int64_t>(n_) + 2 * static_cast<std::int64_t>(i);
  }
  double position(std::size_t i) const noexcept {
    return x0_ + static_cast<double>(offset(i)) * dx_;
  }
  double probability(std::size_t i) const noexcept { return prob_[i]; }
  std::span<const double> probabilities() const noexcept { return prob_; }

  /// Probability of ending at offset k (0 off the support).
  double at_offset(std::int64_t k) const noexcept;
  double total() const;

 private:
  double x0_;
  double dx_;
  std::size_t n_;
  std::vector<double> prob_;
};

/// Closed-form law after n_steps: binomial weight (log-gamma) times
/// cosh(xi x / dx) / ((2 cosh xi)^n cosh(xi x0 / dx)), assembled in log space.
WalkDistribution exact_walk_distribution(double x0, std::size_t n_steps, const WalkParams& wp);

/// Diffusion the walk approaches as dx, dt, xi -> 0 with sigma = dx/sqrt(dt)
/// and kappa = xi/dx held fixed.
ProcessParams continuum_params(const WalkParams& wp);

struct ConvergencePoint {
  double dx;
  double distance;  // total variation
};

/// Total variation between the exact walk law at T and the diffusion law
/// integrated over cells of width 2 dx centred on the reachable sites.
double walk_to_continuum_distance(double x0, double T, const WalkParams& wp);

/// walk_to_continuum_distance along a refinement sequence. Every entry must
/// map to `target` under continuum_params and T / dt must be an integer.
std::vector<ConvergencePoint> continuum_convergence(double x0, double T,
                                                    std::span<const WalkParams> sequence,
                                                    const ProcessParams& target);

/// Walk parameters with spacing dx whose continuum image is `target`.
WalkParams walk_params_for(const ProcessParams& target, double dx);

}  // namespace merged::walk
