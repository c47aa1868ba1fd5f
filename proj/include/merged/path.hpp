#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace merged {

enum class Provenance { Exact, EulerMaruyama, Heun, Walk };

std::string_view to_string(Provenance p);

/// A sampled trajectory on a strictly increasing time grid starting at 0.
class Path {
 public:
  Path(std::vector<double> times, std::vector<double> positions, Provenance provenance);

  std::span<const double> times() const noexcept { return times_; }
  std::span<const double> positions() const noexcept { return positions_; }
  Provenance provenance() const noexcept { return provenance_; }
  std::size_t size() const noexcept { return times_.size(); }

  double start() const noexcept { return positions_.front(); }
  double end() const noexcept { return positions_.back(); }

  /// Index of the grid point whose time equals `t` up to a relative
  /// tolerance of 1e-12, if any.
  std::optional<std::size_t> find_time(double t) const;

  /// Position at grid time `t`; throws std::domain_error when `t` is not on
  /// the grid.
  double at_time(double t) const;

 private:
  std::vector<double> times_;
  std::vector<double> positions_;
  Provenance provenance_;
};

/// Throws std::domain_error unless `times` is non-empty, starts at 0 and is
/// strictly increasing.
void validate_time_grid(std::span<const double> times);

/// {0, step, 2 step, ..., n step}.
std::vector<double> uniform_grid(double step, std::size_t n_steps);

}  // namespace merged
