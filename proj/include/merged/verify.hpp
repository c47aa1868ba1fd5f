#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace merged::verify {

enum class Comparison { LessEqual, GreaterEqual, Equal };

struct Check {
  std::string name;
  double value;
  double threshold;
  Comparison comparison;
  bool passed;
  std::string detail;
};

struct CriterionResult {
  int id;
  std::string title;
  std::string group;
  std::vector<Check> checks;
  double seconds = 0.0;

  bool passed() const;
};

struct VerifyOptions {
  std::uint64_t seed = 20240611;
  unsigned threads = 0;
  /// Groups or criterion numbers to run; empty runs everything.
  std::set<std::string> only;
  /// Multiplies every Monte Carlo ensemble size (floors keep the estimators
  /// valid). 1 is the full suite.
  double scale = 1.0;
  /// Replace the exact sampler by the mean-reverting drift in the sampler
  /// and MSD batteries. Those checks are expected to fail.
  bool flip_drift_sign = false;
};

/// Group names: analytic (1, 10), sampler (2, 5), ck (3), msd (4), sde (6),
/// walk (7, 8), fpe (9), control (11).
const std::vector<std::string>& group_names();
std::string_view group_of(int criterion);

/// Throws std::domain_error for an entry that is neither a group nor 1..11.
void validate_selection(const std::set<std::string>& only);

CriterionResult closed_form_law(const VerifyOptions& opt);     // 1
CriterionResult exact_sampler(const VerifyOptions& opt);       // 2
CriterionResult chapman_kolmogorov(const VerifyOptions& opt);  // 3
CriterionResult msd_invariance(const VerifyOptions& opt);      // 4
CriterionResult covariance(const VerifyOptions& opt);          // 5
CriterionResult integrators(const VerifyOptions& opt);         // 6
CriterionResult walk_invariants(const VerifyOptions& opt);     // 7
CriterionResult continuum_limit(const VerifyOptions& opt);     // 8
CriterionResult fpe_solver(const VerifyOptions& opt);          // 9
CriterionResult drift_family(const VerifyOptions& opt);        // 10
CriterionResult negative_control(const VerifyOptions& opt);    // 11

CriterionResult run_criterion(int id, const VerifyOptions& opt);

/// Every selected criterion in order.
std::vector<CriterionResult> run_all(const VerifyOptions& opt);

std::string_view to_string(Comparison c);

}  // namespace merged::verify
