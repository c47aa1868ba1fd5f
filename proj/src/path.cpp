#include "merged/path.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace merged {

std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::Exact: return "Exact";
    case Provenance::EulerMaruyama: return "EulerMaruyama";
    case Provenance::Heun: return "Heun";
    case Provenance::Walk: return "Walk";
  }
  return "Unknown";
}

void validate_time_grid(std::span<const double> times) {
  if (times.empty()) throw std::domain_error("time grid is empty");
  if (times.front() != 0.0) throw std::domain_error("time grid must start at 0");
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (!(times[i] > times[i - 1]) || !std::isfinite(times[i])) {
      throw std::domain_error("time grid is not strictly increasing at index " +
                              std::to_string(i));
    }
  }
}

Path::Path(std::vector<double> times, std::vector<double> positions, Provenance provenance)
    : times_(std::move(times)), positions_(std::move(positions)), provenance_(provenance) {
  validate_time_grid(times_);
  if (positions_.size() != times_.size()) {
    throw std::domain_error("path has " + std::to_string(times_.size()) + " times but " +
                            std::to_string(positions_.size()) + " positions");
  }
}

std::optional<std::size_t> Path::find_time(double t) const {
  const double tol = 1e-12 * std::max(1.0, std::abs(t));
  auto it = std::lower_bound(times_.begin(), times_.end(), t - tol);
  if (it != times_.end() && std::abs(*it - t) <= tol) {
    return static_cast<std::size_t>(it - times_.begin());
  }
  return std::nullopt;
}

double Path::at_time(double t) const {
  if (auto i = find_time(t)) return positions_[*i];
  throw std::domain_error("time " + std::to_string(t) + " is not on the path grid");
}

std::vector<double> uniform_grid(double step, std::size_t n_steps) {
  if (!(step > 0.0)) throw std::domain_error("grid step must be > 0");
  std::vector<double> times(n_steps + 1);
  for (std::size_t k = 0; k <= n_steps; ++k) times[k] = static_cast<double>(k) * step;
  return times;
}

}  // namespace merged
