#include "merged/params.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace merged {

ProcessParams::ProcessParams(double v_d, double sigma) : v_d_(v_d), sigma_(sigma) {
  if (!std::isfinite(sigma) || !(sigma > 0.0)) {
    throw std::domain_error("sigma must be finite and > 0, got " + std::to_string(sigma));
  }
  if (!std::isfinite(v_d) || !(v_d >= 0.0)) {
    throw std::domain_error("v_d must be finite and >= 0, got " + std::to_string(v_d));
  }
}

ProcessParams params_from_physical(const PhysicalParams& phys) {
  auto require_positive = [](double value, const char* name) {
    if (!std::isfinite(value) || !(value > 0.0)) {
      throw std::domain_error(std::string(name) + " must be finite and > 0, got " +
                              std::to_string(value));
    }
  };
  require_positive(phys.q, "q");
  require_positive(phys.E, "E");
  require_positive(phys.mu_q, "mu_q");
  require_positive(phys.kBT, "kBT");

  const double v_d = phys.mu_q * phys.E;
  const double sigma = std::sqrt(2.0 * phys.mu_q * phys.kBT / phys.q);
  return ProcessParams(v_d, sigma);
}

}  // namespace merged
