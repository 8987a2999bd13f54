#pragma once

#include "hml/metrics.hpp"
#include "hml/model.hpp"

#include <deque>
#include <span>
#include <vector>

namespace hml {

enum class AdmissibleRule { kExcludeCurrent, kAllTargets };

struct CurriculumConfig {
    double beta_w = 1.0;
    double beta_re = 0.5;
    double beta_sot = 0.5;
    double beta_p = 2.0;   ///< weight on the terminal stage cost
    int horizon = 4;       ///< lookahead P in trials
    double tau = 0.2;      ///< softmin temperature
    int n_rollouts = 5;    ///< Monte Carlo samples per tree edge
    AdmissibleRule admissible_rule = AdmissibleRule::kExcludeCurrent;
    /// Running-average window for the heuristic (0 = cumulative).
    int heuristic_window = 0;

    void validate() const;
};

/// Candidate next targets under the admissible rule, in ascending order.
std::vector<TargetId> admissible_targets(TargetId current, std::size_t n_targets, AdmissibleRule rule);

/// Uniform draw from the admissible set.
TargetId random_next(TargetId current, std::size_t n_targets, AdmissibleRule rule, Rng& rng);

/// Running RE/SoT averages per ordered target pair.
class PairStats {
public:
    explicit PairStats(std::size_t n_targets, int window = 0);

    void record(TargetId from, TargetId to, double re, double sot);
    std::size_t count(TargetId from, TargetId to) const;
    double mean_re(TargetId from, TargetId to) const;
    double mean_sot(TargetId from, TargetId to) const;
    std::size_t n_targets() const { return n_; }

private:
    struct Entry {
        std::size_t visits = 0;
        double sum_re = 0.0;
        double sum_sot = 0.0;
        std::deque<std::pair<double, double>> recent;
    };
    const Entry& at(TargetId from, TargetId to) const;

    std::size_t n_;
    int window_;
    std::vector<Entry> entries_;
};

/// |RE_avg| + 10 |SoT_avg| for the pair. Unvisited pairs cost +infinity so
/// they are tried first.
double heuristic_cost(const PairStats& stats, TargetId from, TargetId to);

/// Highest-cost admissible target; ties go to the least-visited pair, then to
/// the lowest target index.
TargetId heuristic_next(const PairStats& stats, TargetId current,
                        AdmissibleRule rule = AdmissibleRule::kExcludeCurrent);

/// beta_W ||W_hat - W||_F + beta_RE RE + beta_SoT SoT.
double stage_cost(const WeightMat& w_hat, const WeightMat& w_true, const TrialMetrics& m,
                  const CurriculumConfig& cfg);

struct QValue {
    TargetId target = 0;
    double value = 0.0;
};

/// Everything a planner needs besides the start state.
struct PlanningContext {
    const SynergySystem& system;
    const ModelParams& params;
    const GameConfig& game;
    const CurriculumConfig& cfg;
};

/// Rollout cost assigned to a trial that diverged.
inline constexpr double kDivergencePenalty = 1e6;

/// Monte Carlo estimate of Q(state, first target) for every admissible first
/// target. Each tree node carries n_rollouts sampled learner states; every
/// edge advances all of them by one simulated trial (common random numbers
/// across sibling edges) and averages the stage cost:
///   V*_1(node) = min_v beta_P E[l],   V*_k(node) = min_v E[l + V*_{k-1}(child)],
///   Q(v) = E[l] + V*_{P-1}(child)   (Q(v) = beta_P E[l] when P = 1).
/// Rollout r starts from start_states[r % start_states.size()].
std::vector<QValue> snmpc_q_values(std::span<const LearnerState> start_states, TargetId current,
                                   const PlanningContext& ctx, Rng& rng);

inline std::vector<QValue> snmpc_q_values(const LearnerState& state, TargetId current, const PlanningContext& ctx,
                                          Rng& rng)
{
    return snmpc_q_values(std::span<const LearnerState>(&state, 1), current, ctx, rng);
}

/// p_i proportional to exp(-(z_i - z_min) / tau); tau = 0 puts uniform mass on
/// the argmin set.
std::vector<double> softmin_probabilities(std::span<const double> values, double tau);

/// Index drawn from softmin_probabilities().
std::size_t softmin_sample(std::span<const double> values, double tau, Rng& rng);

}  // namespace hml
