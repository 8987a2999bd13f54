#include "hml/curriculum.hpp"

#include "hml/log.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace hml {

void CurriculumConfig::validate() const
{
    if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
    if (!(tau >= 0)) throw std::invalid_argument("tau must be >= 0");
    if (n_rollouts < 1) throw std::invalid_argument("n_rollouts must be >= 1");
    if (beta_w < 0 || beta_re < 0 || beta_sot < 0 || beta_p < 0) {
        throw std::invalid_argument("stage-cost weights must be non-negative");
    }
    if (beta_w + beta_re + beta_sot == 0) throw std::invalid_argument("stage-cost weights are all zero");
}

std::vector<TargetId> admissible_targets(TargetId current, std::size_t n_targets, AdmissibleRule rule)
{
    std::vector<TargetId> out;
    for (TargetId t = 0; t < n_targets; ++t) {
        if (rule == AdmissibleRule::kExcludeCurrent && t == current) continue;
        out.push_back(t);
    }
    return out;
}

TargetId random_next(TargetId current, std::size_t n_targets, AdmissibleRule rule, Rng& rng)
{
    if (n_targets < 2) throw std::invalid_argument("random_next needs at least two targets");
    const auto candidates = admissible_targets(current, n_targets, rule);
    return candidates[rng.index(candidates.size())];
}

PairStats::PairStats(std::size_t n_targets, int window)
    : n_(n_targets), window_(window), entries_(n_targets * n_targets)
{
}

const PairStats::Entry& PairStats::at(TargetId from, TargetId to) const { return entries_.at(from * n_ + to); }

void PairStats::record(TargetId from, TargetId to, double re, double sot)
{
    Entry& e = entries_.at(from * n_ + to);
    ++e.visits;
    if (window_ <= 0) {
        e.sum_re += re;
        e.sum_sot += sot;
        return;
    }
    e.recent.emplace_back(re, sot);
    if (e.recent.size() > static_cast<std::size_t>(window_)) e.recent.pop_front();
}

std::size_t PairStats::count(TargetId from, TargetId to) const { return at(from, to).visits; }

double PairStats::mean_re(TargetId from, TargetId to) const
{
    const Entry& e = at(from, to);
    if (e.visits == 0) return std::numeric_limits<double>::quiet_NaN();
    if (window_ <= 0) return e.sum_re / double(e.visits);
    double s = 0.0;
    for (const auto& r : e.recent) s += r.first;
    return s / double(e.recent.size());
}

double PairStats::mean_sot(TargetId from, TargetId to) const
{
    const Entry& e = at(from, to);
    if (e.visits == 0) return std::numeric_limits<double>::quiet_NaN();
    if (window_ <= 0) return e.sum_sot / double(e.visits);
    double s = 0.0;
    for (const auto& r : e.recent) s += r.second;
    return s / double(e.recent.size());
}

double heuristic_cost(const PairStats& stats, TargetId from, TargetId to)
{
    if (stats.count(from, to) == 0) return std::numeric_limits<double>::infinity();
    return std::abs(stats.mean_re(from, to)) + 10.0 * std::abs(stats.mean_sot(from, to));
}

TargetId heuristic_next(const PairStats& stats, TargetId current, AdmissibleRule rule)
{
    const auto candidates = admissible_targets(current, stats.n_targets(), rule);
    if (candidates.empty()) throw std::invalid_argument("heuristic_next: no admissible targets");
    TargetId best = candidates.front();
    for (TargetId t : candidates) {
        const double c = heuristic_cost(stats, current, t);
        const double cb = heuristic_cost(stats, current, best);
        if (c > cb || (c == cb && stats.count(current, t) < stats.count(current, best))) best = t;
    }
    return best;
}

double stage_cost(const WeightMat& w_hat, const WeightMat& w_true, const TrialMetrics& m,
                  const CurriculumConfig& cfg)
{
    return cfg.beta_w * (w_hat - w_true).norm() + cfg.beta_re * m.re + cfg.beta_sot * m.sot;
}

namespace {

struct Rollout {
    LearnerState state;
    bool alive = true;
};

class TreeSearch {
public:
    TreeSearch(const PlanningContext& ctx, std::uint64_t seed) : ctx_(ctx), seed_(seed) {}

    /// Mean stage cost of moving every rollout of `node` to `target`;
    /// fills `child` with the successor rollouts.
    double expand(const std::vector<Rollout>& node, TargetId target, int depth, std::vector<Rollout>& child) const
    {
        const Vec2& goal = ctx_.game.targets[target];
        child.resize(node.size());
        double total = 0.0;
        for (std::size_t r = 0; r < node.size(); ++r) {
            child[r] = node[r];
            if (!node[r].alive) {
                total += kDivergencePenalty;
                continue;
            }
            // Common random numbers: the stream depends on rollout and depth
            // only, so sibling edges see the same noise.
            Rng rng(derive_seed(seed_, {r, static_cast<std::uint64_t>(depth)}));
            try {
                CursorTrial trial =
                    simulate_cursor_trial(node[r].state, goal, ctx_.system, ctx_.params, ctx_.game, rng);
                const TrialMetrics m =
                    trial_metrics(trial.path, goal, ctx_.game.dt(), ctx_.game.trial_cutoff);
                total += stage_cost(trial.end.w_hat, ctx_.system.w_true, m, ctx_.cfg);
                child[r].state = trial.end;
            } catch (const DivergenceError& e) {
                log_warning(std::string("planner rollout diverged: ") + e.what());
                child[r].alive = false;
                total += kDivergencePenalty;
            }
        }
        return total / double(node.size());
    }

    /// V*_k of a node whose learner is resting at `current`.
    double optimal_value(const std::vector<Rollout>& node, TargetId current, int k, int depth) const
    {
        double best = std::numeric_limits<double>::infinity();
        std::vector<Rollout> child;
        for (TargetId t : admissible_targets(current, ctx_.game.targets.size(), ctx_.cfg.admissible_rule)) {
            const double cost = expand(node, t, depth, child);
            const double value =
                k == 1 ? ctx_.cfg.beta_p * cost : cost + optimal_value(child, t, k - 1, depth + 1);
            best = std::min(best, value);
        }
        return best;
    }

private:
    const PlanningContext& ctx_;
    std::uint64_t seed_;
};

}  // namespace

std::vector<QValue> snmpc_q_values(std::span<const LearnerState> start_states, TargetId current,
                                   const PlanningContext& ctx, Rng& rng)
{
    ctx.cfg.validate();
    if (start_states.empty()) throw std::invalid_argument("snmpc_q_values: no start state");
    const TreeSearch search(ctx, rng.next_seed());

    std::vector<Rollout> root(static_cast<std::size_t>(ctx.cfg.n_rollouts));
    for (std::size_t r = 0; r < root.size(); ++r) root[r].state = start_states[r % start_states.size()];

    std::vector<QValue> out;
    std::vector<Rollout> child;
    for (TargetId t : admissible_targets(current, ctx.game.targets.size(), ctx.cfg.admissible_rule)) {
        const double cost = search.expand(root, t, 0, child);
        const double q = ctx.cfg.horizon == 1 ? ctx.cfg.beta_p * cost
                                              : cost + search.optimal_value(child, t, ctx.cfg.horizon - 1, 1);
        out.push_back({t, q});
    }
    return out;
}

std::vector<double> softmin_probabilities(std::span<const double> values, double tau)
{
    if (values.empty()) throw std::invalid_argument("softmin: no candidates");
    if (!(tau >= 0)) throw std::invalid_argument("softmin: tau must be >= 0");
    const double z_min = *std::min_element(values.begin(), values.end());
    std::vector<double> p(values.size(), 0.0);
    if (tau == 0) {
        for (std::size_t i = 0; i < values.size(); ++i) p[i] = values[i] == z_min ? 1.0 : 0.0;
    } else {
        for (std::size_t i = 0; i < values.size(); ++i) p[i] = std::exp(-(values[i] - z_min) / tau);
    }
    const double total = std::accumulate(p.begin(), p.end(), 0.0);
    for (double& v : p) v /= total;
    return p;
}

std::size_t softmin_sample(std::span<const double> values, double tau, Rng& rng)
{
    const auto p = softmin_probabilities(values, tau);
    const double u = rng.uniform();
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        acc += p[i];
        if (u < acc) return i;
    }
    // Round-off: fall back to the last candidate with non-zero mass.
    for (std::size_t i = p.size(); i-- > 0;) {
        if (p[i] > 0) return i;
    }
    return 0;
}

}  // namespace hml
