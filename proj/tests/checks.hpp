#pragma once

// Seeded property checks shared by the unit tests and the acceptance run.

#include <cstdint>
#include <string>

namespace hml::checks {

struct CheckResult {
    bool ok = true;
    std::string detail;
};

/// pf_step keeps weights a probability vector, including after underflow.
CheckResult weight_normalization(std::uint64_t seed);

/// ||dev||^2 = ||dev_ucm||^2 + ||dev_ort||^2 summed over trials, to 1e-9.
CheckResult ucm_additivity(std::uint64_t seed);

/// Isotropic 20-D deviations over 500 trials give fraction 0.5 +- 0.05.
CheckResult ucm_isotropic(std::uint64_t seed);

/// Softmin sums to one and ignores a common shift of the values.
CheckResult softmin_invariance(std::uint64_t seed);

/// Noiseless P = 2 SNMPC equals enumeration of every two-trial sequence.
CheckResult snmpc_exhaustive(std::uint64_t seed);

/// pareto_rank fronts equal brute-force dominance counting on
/// `populations` random 50-member populations.
CheckResult pareto_bruteforce(std::uint64_t seed, int populations = 4);

/// SBX children average to their parents.
CheckResult sbx_mean(std::uint64_t seed);

/// Noiseless integrate_trial against classical RK4 at dt/10 (max |dx|).
CheckResult integrator_oracle(std::uint64_t seed);

}  // namespace hml::checks
