#pragma once

#include "hml/random.hpp"
#include "hml/types.hpp"

#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace hml {

/// Deterministic part of each integration step.
enum class StepScheme { kRungeKutta, kEuler };

/// Human motor learning model parameters.
struct ModelParams {
    double gamma = 0.0001;   ///< forward learning rate
    double eta = 0.6348;     ///< inverse learning rate (1/s)
    double mu = 5.7399;      ///< optimality parameter
    double k_p = 11.3432;    ///< control intensity (1/s)
    double sigma_u = 0.8358; ///< exploratory noise intensity on u
    double sigma_q = 0.0010; ///< perceptual noise intensity on delta_q
    double a = 10.0;         ///< perceptual recency (1/s)
    /// Filtered joint increments enter the forward-model update in degrees;
    /// gamma is expressed per squared degree of increment.
    double increment_scale = 180.0 / std::numbers::pi;
    StepScheme scheme = StepScheme::kRungeKutta;

    /// Published population-mean fit.
    static ModelParams published() { return {}; }
    ModelParams noiseless() const
    {
        ModelParams p = *this;
        p.sigma_u = 0.0;
        p.sigma_q = 0.0;
        return p;
    }
    void validate() const;
    std::string describe() const;
};

struct SynergySystem {
    SynergyBasis phi;   ///< rows are orthonormal synergies
    WeightMat w_true;   ///< true synergy weights
    Mapping c;          ///< c == w_true * phi, grid units per rad
    double grid_side = 5.0;
    double unit_scale = 1.0; ///< grid units per calibration-projection unit

    Vec2 center() const { return Vec2::Constant(grid_side / 2.0); }
};

struct GameConfig {
    std::vector<Vec2> targets{Vec2(0.5, 4.5), Vec2(2.5, 0.5), Vec2(2.5, 2.5), Vec2(4.5, 4.5)};
    double target_half_width = 0.5;
    double capture_variance_threshold = 0.0025;
    int capture_window = 15;
    double sample_rate = 100.0;
    double trial_cutoff = 2.0;
    double trial_max_duration = 5.0;

    double dt() const { return 1.0 / sample_rate; }
    int max_steps() const;
    void validate() const;
};

/// Concatenated model state (x, W_hat, delta_q, u, q).
template <typename Scalar>
struct LearnerStateT {
    static constexpr int kDim = 2 + 2 * kSynergies + 3 * kJoints;
    using Flat = Eigen::Matrix<Scalar, kDim, 1>;

    Vec2T<Scalar> x = Vec2T<Scalar>::Zero();
    WeightMatT<Scalar> w_hat = WeightMatT<Scalar>::Zero();
    JointVecT<Scalar> delta_q = JointVecT<Scalar>::Zero();
    JointVecT<Scalar> u = JointVecT<Scalar>::Zero();
    JointVecT<Scalar> q = JointVecT<Scalar>::Zero();

    Flat flatten() const
    {
        Flat f;
        f << x, w_hat.reshaped(), delta_q, u, q;
        return f;
    }

    static LearnerStateT unflatten(const Flat& f)
    {
        LearnerStateT s;
        s.x = f.template segment<2>(0);
        s.w_hat = f.template segment<2 * kSynergies>(2).reshaped(2, kSynergies);
        s.delta_q = f.template segment<kJoints>(2 + 2 * kSynergies);
        s.u = f.template segment<kJoints>(2 + 2 * kSynergies + kJoints);
        s.q = f.template segment<kJoints>(2 + 2 * kSynergies + 2 * kJoints);
        return s;
    }

    bool all_finite() const
    {
        return x.allFinite() && w_hat.allFinite() && delta_q.allFinite() && u.allFinite() && q.allFinite();
    }

    /// this += h * d
    void add_scaled(const LearnerStateT& d, Scalar h)
    {
        x += h * d.x;
        w_hat += h * d.w_hat;
        delta_q += h * d.delta_q;
        u += h * d.u;
        q += h * d.q;
    }
};

using LearnerState = LearnerStateT<double>;

/// Offsets of each block in LearnerState::flatten().
namespace state_layout {
inline constexpr int kX = 0;
inline constexpr int kWHat = 2;
inline constexpr int kDeltaQ = kWHat + 2 * kSynergies;
inline constexpr int kU = kDeltaQ + kJoints;
inline constexpr int kQ = kU + kJoints;
inline constexpr int kDim = kQ + kJoints;
}  // namespace state_layout

/// Deterministic part of the learner dynamics:
///   x'       = C u
///   delta_q' = -a delta_q + u
///   W_hat'   = -gamma (W_hat - W) Phi dq dq^T Phi^T,  dq = increment_scale * delta_q
///   u'       = -eta ((Phi^T W_hat^T W_hat Phi + mu I) u - k_P Phi^T W_hat^T (target - x))
///   q'       = u
template <typename Scalar>
LearnerStateT<Scalar> drift_rhs(const LearnerStateT<Scalar>& s, const Vec2T<Scalar>& target,
                                const SynergySystem& sys, const ModelParams& p)
{
    const auto phi = sys.phi.template cast<Scalar>();
    const auto w_true = sys.w_true.template cast<Scalar>();
    const Scalar gamma(p.gamma), eta(p.eta), mu(p.mu), k_p(p.k_p), a(p.a);

    LearnerStateT<Scalar> d;
    d.x = sys.c.template cast<Scalar>() * s.u;
    d.delta_q = -a * s.delta_q + s.u;

    const SynergyVecT<Scalar> excitation = Scalar(p.increment_scale) * (phi * s.delta_q);
    d.w_hat = -gamma * ((s.w_hat - w_true) * excitation) * excitation.transpose();

    const SynergyVecT<Scalar> phi_u = phi * s.u;
    const Vec2T<Scalar> error = target - s.x;
    const SynergyVecT<Scalar> drive =
        s.w_hat.transpose() * (s.w_hat * phi_u) - k_p * (s.w_hat.transpose() * error);
    d.u = -eta * (phi.transpose() * drive + mu * s.u);
    d.q = s.u;
    return d;
}

/// Classical Runge-Kutta step of the drift alone.
template <typename Scalar>
void drift_step(LearnerStateT<Scalar>& s, const Vec2T<Scalar>& target, const SynergySystem& sys,
                const ModelParams& p, Scalar h)
{
    const auto k1 = drift_rhs(s, target, sys, p);
    LearnerStateT<Scalar> probe = s;
    probe.add_scaled(k1, h / 2);
    const auto k2 = drift_rhs(probe, target, sys, p);
    probe = s;
    probe.add_scaled(k2, h / 2);
    const auto k3 = drift_rhs(probe, target, sys, p);
    probe = s;
    probe.add_scaled(k3, h);
    const auto k4 = drift_rhs(probe, target, sys, p);
    s.add_scaled(k1, h / 6);
    s.add_scaled(k2, h / 3);
    s.add_scaled(k3, h / 3);
    s.add_scaled(k4, h / 6);
}

/// One step of length dt: drift (RK4, or forward Euler under
/// StepScheme::kEuler) plus the additive white-noise increments
/// sigma_q sqrt(dt) N(0, I) on delta_q and sigma_u sqrt(dt) N(0, I) on u.
/// The noise is additive, so the RK4 variant keeps Euler-Maruyama's strong
/// order and reduces to plain RK4 without noise.
void sde_step(LearnerState& s, const Vec2& target, const SynergySystem& sys, const ModelParams& p, double dt,
              Rng& rng);

class DivergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Synthetic calibration followed by PCA. C rows are PCs 2 and 3 scaled by
/// the square roots of their eigenvalues, then by a unit scale such that the
/// grid covers +-1 standard deviation of the calibration cursor projections.
SynergySystem synthesize_system(std::uint64_t seed, int n_postures = 300);

/// PCA on calibration postures (rows = postures, 20 columns). Throws when the
/// leading eigenvalues are not separated.
SynergySystem extract_synergies(const Eigen::MatrixXd& postures, double grid_side = 5.0);

/// Naive learner: cursor at the window centre, mean posture, at rest,
/// W_hat = 0.1 W_true + perturbation * N(0, 1).
LearnerState initial_learner_state(const SynergySystem& sys, Rng& rng, double perturbation = 0.01);

/// Truth-agnostic prior mean for W_hat used by the estimators and planners.
LearnerState prior_learner_state(const SynergySystem& sys);

/// True iff every sample of the window lies inside the target square and
/// the per-axis sample variance of the window is below the threshold.
bool capture_check(std::span<const Vec2> window, const Vec2& target, const GameConfig& game);

struct TrialSample {
    double t = 0.0;
    Vec2 x = Vec2::Zero();
    JointVec q = JointVec::Zero();
};

struct TrialRecord {
    std::optional<Vec2> target_from;
    Vec2 target_to = Vec2::Zero();
    std::vector<TrialSample> samples;
    bool captured = false;

    double duration() const { return samples.empty() ? 0.0 : samples.back().t - samples.front().t; }
    std::vector<Vec2> cursor_path() const;
};

struct TrialOutcome {
    LearnerState end;
    TrialRecord record;
};

/// sde_step integration at the game sample rate until capture or the
/// duration cap. Samples are recorded after every step at absolute time
/// t_start + k dt. Throws DivergenceError when the state blows up.
TrialOutcome integrate_trial(const LearnerState& init, const Vec2& target, const SynergySystem& sys,
                             const ModelParams& p, const GameConfig& game, Rng& rng,
                             double t_start = 0.0, std::optional<Vec2> target_from = std::nullopt);

/// One realisation of the trial-to-trial map: the end state of this trial
/// is the start state of the next.
inline TrialOutcome trial_transition(const LearnerState& state, const Vec2& next_target,
                                     const SynergySystem& sys, const ModelParams& p,
                                     const GameConfig& game, Rng& rng, double t_start = 0.0,
                                     std::optional<Vec2> target_from = std::nullopt)
{
    return integrate_trial(state, next_target, sys, p, game, rng, t_start, target_from);
}

/// Cursor-only trial used by planners and fitting, where joint history is
/// not needed.
struct CursorTrial {
    LearnerState end;
    std::vector<Vec2> path;
    bool captured = false;
};

/// When fixed_steps is set the trial runs exactly that many steps and
/// ignores capture.
CursorTrial simulate_cursor_trial(const LearnerState& init, const Vec2& target, const SynergySystem& sys,
                                  const ModelParams& p, const GameConfig& game, Rng& rng,
                                  std::optional<int> fixed_steps = std::nullopt);

}  // namespace hml
