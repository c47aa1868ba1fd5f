#pragma once

namespace merged {

/// Drift speed and noise amplitude of dX = v_d tanh(kappa X) dt + sigma dW.
/// kappa is never stored; it is always v_d / sigma^2.
class ProcessParams {
 public:
  ProcessParams(double v_d, double sigma);

  double v_d() const noexcept { return v_d_; }
  double sigma() const noexcept { return sigma_; }
  double sigma2() const noexcept { return sigma_ * sigma_; }
  double kappa() const noexcept { return v_d_ / (sigma_ * sigma_); }

  bool operator==(const ProcessParams&) const = default;

 private:
  double v_d_;
  double sigma_;
};

/// Charged particles drifting in a field that flips sign at the origin.
struct PhysicalParams {
  double q;      // charge
  double E;      // field magnitude
  double mu_q;   // electrical mobility
  double kBT;    // thermal energy
};

/// v_d = mu_q E, sigma^2 = 2 mu_q kBT / q (Einstein-Smoluchowski), which
/// gives kappa = qE / (2 kBT). Throws std::domain_error naming the first
/// non-positive field.
ProcessParams params_from_physical(const PhysicalParams& phys);

}  // namespace merged
