#pragma once

#include <cstdint>
#include <string>
#include <vector>

// Independent oracles shared by the unit tests and the acceptance binary.
namespace silfd::checks {

struct CheckResult {
  bool pass = false;
  double worst = 0.0;  // worst observed error / statistic
  std::string detail;
};

/// Analytic backward vs central differences (h = 1e-5) on a random net.
/// Error per parameter: |a - f| / max(|a|, |f|), or |a - f| when both are
/// below the 1e-8 floor.
CheckResult gradient_check(const std::vector<int>& sizes, int batch, std::uint64_t seed,
                           double tolerance = 1e-4);

/// compute_returns and compute_gae against direct double sums on random
/// sequences of the given length (dones included for GAE).
CheckResult returns_oracle(int length, std::uint64_t seed, double tolerance = 1e-10);
CheckResult gae_oracle(int length, std::uint64_t seed, double tolerance = 1e-10);

/// Chi-square goodness of fit of prioritized sampling on a frozen buffer of
/// `elements` (<= 16) transitions, `draws` samples, significance 0.01.
CheckResult sampling_chi_square(int elements, int draws, std::uint64_t seed);

/// SIL gradients on a batch with every R <= V: critic gradient exactly zero,
/// actor gradient equal to the entropy term alone (checked against central
/// differences of the weighted entropy).
CheckResult sil_null_gradient(std::uint64_t seed);

/// Pinned demos survive many pushes unchanged; the agent region never
/// exceeds capacity and evicts oldest first.
CheckResult buffer_pinning_capacity(std::uint64_t seed);

/// Root mass equals the leaf sum within 1e-6 relative after random updates.
CheckResult sum_tree_consistency(std::uint64_t seed);

/// save/load/save of generated demo sets is byte-identical.
CheckResult demo_round_trip(int adversarial_count);

/// Chi-square critical value at significance 0.01 for 1..15 degrees of freedom.
double chi_square_critical_001(int dof);

}  // namespace silfd::checks
