#include "checks.hpp"

#include "hml/curriculum.hpp"
#include "hml/estimation.hpp"
#include "hml/fitting.hpp"
#include "hml/log.hpp"
#include "hml/ucm.hpp"

#include <cmath>
#include <sstream>

namespace hml::checks {
namespace {

CheckResult fail(const std::string& what)
{
    return {false, what};
}

template <typename T>
std::string str(const T& v)
{
    std::ostringstream os;
    os.precision(10);
    os << v;
    return os.str();
}

struct QuietLog {
    LogSink previous = set_log_sink(nullptr);
    ~QuietLog() { set_log_sink(previous); }
};

Mapping random_mapping(Rng& rng)
{
    Mapping c;
    for (Eigen::Index i = 0; i < c.size(); ++i) c(i) = rng.normal();
    return c;
}

// Written out from the model equations on the flat state, independently of
// drift_rhs.
using Flat = LearnerState::Flat;

Flat oracle_rhs(const Flat& s, const Vec2& target, const SynergySystem& sys, const ModelParams& p)
{
    using namespace state_layout;
    const Vec2 x = s.segment<2>(kX);
    const Eigen::Map<const WeightMat> w(s.data() + kWHat);
    const JointVec dq = s.segment<kJoints>(kDeltaQ);
    const JointVec u = s.segment<kJoints>(kU);

    const SynergyVec e = p.increment_scale * sys.phi * dq;
    const WeightMat w_dot = -p.gamma * (w - sys.w_true) * e * e.transpose();
    const Eigen::Matrix<double, kJoints, kJoints> gain =
        sys.phi.transpose() * w.transpose() * w * sys.phi + p.mu * Eigen::Matrix<double, kJoints, kJoints>::Identity();
    const JointVec u_dot = -p.eta * (gain * u - p.k_p * sys.phi.transpose() * w.transpose() * (target - x));

    Flat d;
    d.segment<2>(kX) = sys.c * u;
    d.segment<2 * kSynergies>(kWHat) = w_dot.reshaped();
    d.segment<kJoints>(kDeltaQ) = -p.a * dq + u;
    d.segment<kJoints>(kU) = u_dot;
    d.segment<kJoints>(kQ) = u;
    return d;
}

void oracle_rk4(Flat& s, const Vec2& target, const SynergySystem& sys, const ModelParams& p, double h)
{
    const Flat k1 = oracle_rhs(s, target, sys, p);
    const Flat k2 = oracle_rhs(s + h / 2 * k1, target, sys, p);
    const Flat k3 = oracle_rhs(s + h / 2 * k2, target, sys, p);
    const Flat k4 = oracle_rhs(s + h * k3, target, sys, p);
    s += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
}

/// Ranks by repeatedly peeling off the non-dominated set.
std::vector<int> brute_force_ranks(const std::vector<Individual>& pop)
{
    const std::size_t n = pop.size();
    std::vector<int> rank(n, 0);
    std::size_t assigned = 0;
    for (int r = 1; assigned < n; ++r) {
        std::vector<std::size_t> front;
        for (std::size_t i = 0; i < n; ++i) {
            if (rank[i] != 0) continue;
            bool dominated = false;
            for (std::size_t j = 0; j < n && !dominated; ++j) {
                if (j == i || rank[j] != 0) continue;
                const auto& a = pop[j].objectives;
                const auto& b = pop[i].objectives;
                dominated = (a.array() <= b.array()).all() && (a.array() < b.array()).any();
            }
            if (!dominated) front.push_back(i);
        }
        for (std::size_t i : front) rank[i] = r;
        assigned += front.size();
    }
    return rank;
}

}  // namespace

CheckResult weight_normalization(std::uint64_t seed)
{
    QuietLog quiet;
    Rng rng(seed);
    const SynergySystem sys = synthesize_system(seed);
    const GameConfig game;
    FilterConfig cfg;
    cfg.n_particles = 64;
    cfg.init_w_spread = 0.1;
    ParticleEnsemble e = make_ensemble(initial_learner_state(sys, rng), cfg, rng);
    for (int k = 0; k < 60; ++k) {
        Observation obs;
        obs.x = sys.center() + 0.1 * Vec2::Random();
        obs.q = 0.05 * JointVec::Random();
        // Every 10th observation is far enough away to underflow all weights.
        if (k % 10 == 9) obs.x.setConstant(1e4);
        e = pf_step(std::move(e), obs, game.targets[static_cast<std::size_t>(k) % 4], sys, {}, cfg, rng);
        const double sum = e.weights.sum();
        if (std::abs(sum - 1.0) > 1e-12 || (e.weights.array() < 0).any()) {
            return fail("step " + str(k) + ": weights sum to " + str(sum));
        }
    }
    return {};
}

CheckResult ucm_additivity(std::uint64_t seed)
{
    Rng rng(seed);
    const Mapping c = random_mapping(rng);
    std::vector<NormalizedTrial> trials(12, NormalizedTrial(5, kJoints));
    for (auto& t : trials) {
        for (Eigen::Index i = 0; i < t.size(); ++i) t(i) = rng.normal();
    }
    const UcmSeries s = variance_decompose(trials, c);
    const double n1 = double(trials.size() - 1);
    for (Eigen::Index k = 0; k < 5; ++k) {
        Eigen::MatrixXd dev(kJoints, static_cast<Eigen::Index>(trials.size()));
        for (std::size_t i = 0; i < trials.size(); ++i) dev.col(static_cast<Eigen::Index>(i)) = trials[i].row(k).transpose();
        dev.colwise() -= dev.rowwise().mean();
        const double total = dev.squaredNorm();
        const auto kk = static_cast<std::size_t>(k);
        const double parts = s.v_ucm[kk] * (kJoints - 2) * n1 + s.v_ort[kk] * 2 * n1;
        if (std::abs(total - parts) > 1e-9) {
            return fail("time point " + str(k) + ": total " + str(total) + " vs parts " + str(parts));
        }
    }
    return {};
}

CheckResult ucm_isotropic(std::uint64_t seed)
{
    Rng rng(seed);
    const Mapping c = random_mapping(rng);
    std::vector<NormalizedTrial> trials(500, NormalizedTrial(1, kJoints));
    for (auto& t : trials) {
        for (Eigen::Index i = 0; i < t.size(); ++i) t(i) = rng.normal();
    }
    const double f = variance_decompose(trials, c).mean_fraction();
    if (std::abs(f - 0.5) > 0.05) return fail("fraction " + str(f));
    return {};
}

CheckResult softmin_invariance(std::uint64_t seed)
{
    Rng rng(seed);
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<double> v(2 + rng.index(6));
        for (double& x : v) x = 10 * rng.normal();
        const double tau = rep % 5 == 0 ? 0.0 : std::exp(3 * rng.normal());
        const auto p = softmin_probabilities(v, tau);
        double sum = 0.0;
        for (double x : p) sum += x;
        if (std::abs(sum - 1.0) > 1e-12) return fail("probabilities sum to " + str(sum));
        const double shift = 100 * rng.normal();
        std::vector<double> shifted = v;
        for (double& x : shifted) x += shift;
        const auto q = softmin_probabilities(shifted, tau);
        for (std::size_t i = 0; i < p.size(); ++i) {
            if (std::abs(p[i] - q[i]) > 1e-9) return fail("shift by " + str(shift) + " changed p" + str(i));
        }
    }
    return {};
}

CheckResult snmpc_exhaustive(std::uint64_t seed)
{
    Rng rng(seed);
    const SynergySystem sys = synthesize_system(seed);
    const ModelParams params = ModelParams{}.noiseless();
    const GameConfig game;
    CurriculumConfig cfg;
    cfg.horizon = 2;
    cfg.n_rollouts = 1;
    const PlanningContext ctx{sys, params, game, cfg};

    LearnerState start = initial_learner_state(sys, rng, 0.3);
    const TargetId current = rng.index(game.targets.size());
    start.x = game.targets[current];

    Rng plan_rng(seed + 1);
    const auto q = snmpc_q_values(start, current, ctx, plan_rng);

    auto step = [&](const LearnerState& s, TargetId t, double& cost) {
        Rng unused(0);
        const CursorTrial trial = simulate_cursor_trial(s, game.targets[t], sys, params, game, unused);
        cost = stage_cost(trial.end.w_hat, sys.w_true, trial_metrics(trial.path, game.targets[t], game.dt()), cfg);
        return trial.end;
    };
    std::size_t i = 0;
    for (TargetId first = 0; first < game.targets.size(); ++first) {
        if (first == current) continue;
        double l1 = 0.0;
        const LearnerState mid = step(start, first, l1);
        double best = std::numeric_limits<double>::infinity();
        for (TargetId second = 0; second < game.targets.size(); ++second) {
            if (second == first) continue;
            double l2 = 0.0;
            step(mid, second, l2);
            best = std::min(best, cfg.beta_p * l2);
        }
        const double expected = l1 + best;
        if (i >= q.size() || q[i].target != first || q[i].value != expected) {
            return fail("first target " + str(first) + ": planner " + (i < q.size() ? str(q[i].value) : "-") +
                        " vs enumeration " + str(expected));
        }
        ++i;
    }
    if (i != q.size()) return fail("planner returned " + str(q.size()) + " candidates");
    return {};
}

CheckResult pareto_bruteforce(std::uint64_t seed, int populations)
{
    Rng rng(seed);
    for (int p = 0; p < populations; ++p) {
        std::vector<Individual> pop(50);
        for (auto& ind : pop) {
            // Coarse grid values so ties and duplicates occur.
            for (int m = 0; m < 3; ++m) ind.objectives(m) = double(rng.index(8));
        }
        const auto expected = brute_force_ranks(pop);
        pareto_rank(pop);
        for (std::size_t i = 0; i < pop.size(); ++i) {
            if (pop[i].rank != expected[i]) {
                return fail("population " + str(p) + " member " + str(i) + ": rank " + str(pop[i].rank) +
                            " vs " + str(expected[i]));
            }
        }
    }
    return {};
}

CheckResult sbx_mean(std::uint64_t seed)
{
    Rng rng(seed);
    const FitBounds bounds;
    for (int rep = 0; rep < 200; ++rep) {
        Genes a, b;
        for (int i = 0; i < kFitDim; ++i) {
            a(i) = bounds.lower(i) + rng.uniform() * (bounds.upper(i) - bounds.lower(i));
            b(i) = bounds.lower(i) + rng.uniform() * (bounds.upper(i) - bounds.lower(i));
        }
        const auto c = sbx_crossover(a, b, 1.0 + 30 * rng.uniform(), rng);
        const double err = ((c[0] + c[1]) - (a + b)).cwiseAbs().maxCoeff();
        if (err > 1e-9 * (1.0 + (a + b).cwiseAbs().maxCoeff())) return fail("mean shifted by " + str(err));
    }
    return {};
}

CheckResult integrator_oracle(std::uint64_t seed)
{
    Rng rng(seed);
    const SynergySystem sys = synthesize_system(seed);
    const ModelParams params = ModelParams{}.noiseless();
    const GameConfig game;
    const LearnerState init = initial_learner_state(sys, rng, 0.3);
    const Vec2 target = game.targets[rng.index(game.targets.size())];

    Rng unused(0);
    const TrialOutcome out = integrate_trial(init, target, sys, params, game, unused);
    constexpr int kSub = 10;
    const double h = game.dt() / kSub;
    Flat s = init.flatten();
    double worst = 0.0;
    for (const TrialSample& sample : out.record.samples) {
        for (int k = 0; k < kSub; ++k) oracle_rk4(s, target, sys, params, h);
        worst = std::max(worst, (s.segment<2>(state_layout::kX) - sample.x).cwiseAbs().maxCoeff());
    }
    if (!(worst <= 1e-3)) return fail("max |x - x_oracle| = " + str(worst));
    return {true, "max |dx| = " + str(worst)};
}

}  // namespace hml::checks
