#include "hml/model.hpp"

#include <cmath>
#include <sstream>

namespace hml {
namespace {

constexpr double kDivergenceNorm = 1e6;

// Calibration covariance spectrum (rad^2): lambda_k = 1.6 * 0.6^k.
constexpr double kLeadingVariance = 1.6;
constexpr double kSpectrumDecay = 0.6;
constexpr double kMinEigenGap = 1e-12;

bool diverged(const LearnerState& s)
{
    const double sq = s.x.squaredNorm() + s.w_hat.squaredNorm() + s.delta_q.squaredNorm() +
                      s.u.squaredNorm() + s.q.squaredNorm();
    return !std::isfinite(sq) || sq > kDivergenceNorm * kDivergenceNorm;
}

/// Runs up to n_steps sde_step steps, reporting each post-step state to
/// `on_step(k, state)`. Returns true when the capture rule fired.
template <typename OnStep>
bool run_trial(LearnerState& s, const Vec2& target, const SynergySystem& sys, const ModelParams& p,
               const GameConfig& game, Rng& rng, int n_steps, bool stop_on_capture,
               std::vector<Vec2>& path, OnStep&& on_step)
{
    const double dt = game.dt();
    const auto window = static_cast<std::size_t>(game.capture_window);
    bool captured = false;
    path.reserve(static_cast<std::size_t>(n_steps));
    for (int k = 1; k <= n_steps; ++k) {
        sde_step(s, target, sys, p, dt, rng);
        if (diverged(s)) {
            throw DivergenceError("trial diverged (|state| > 1e6) with " + p.describe());
        }
        path.push_back(s.x);
        on_step(k, s);
        if (!captured && path.size() >= window &&
            capture_check(std::span<const Vec2>(path).last(window), target, game)) {
            captured = true;
            if (stop_on_capture) break;
        }
    }
    return captured;
}

void fix_sign(Eigen::Ref<Eigen::VectorXd> v)
{
    Eigen::Index i = 0;
    v.cwiseAbs().maxCoeff(&i);
    if (v(i) < 0) v = -v;
}

}  // namespace

void ModelParams::validate() const
{
    const bool nonneg = gamma >= 0 && eta >= 0 && mu >= 0 && k_p >= 0 && sigma_u >= 0 && sigma_q >= 0;
    if (!nonneg || !(a > 0) || !(mu > 0) || !(increment_scale > 0)) {
        throw std::invalid_argument("invalid model parameters: " + describe());
    }
}

std::string ModelParams::describe() const
{
    std::ostringstream os;
    os.precision(6);
    os << "gamma=" << gamma << " eta=" << eta << " mu=" << mu << " k_p=" << k_p << " sigma_u=" << sigma_u
       << " sigma_q=" << sigma_q << " a=" << a;
    return os.str();
}

int GameConfig::max_steps() const { return static_cast<int>(std::lround(trial_max_duration * sample_rate)); }

void GameConfig::validate() const
{
    if (capture_window < 1) throw std::invalid_argument("capture_window must be >= 1");
    if (!(sample_rate > 0)) throw std::invalid_argument("sample_rate must be positive");
    if (max_steps() < 1) throw std::invalid_argument("trial_max_duration shorter than one sample");
    for (const Vec2& t : targets) {
        if ((t.array() < 0.0).any() || (t.array() > 5.0).any()) {
            throw std::invalid_argument("target outside the 5x5 window");
        }
    }
}

void sde_step(LearnerState& s, const Vec2& target, const SynergySystem& sys, const ModelParams& p, double dt,
              Rng& rng)
{
    if (p.scheme == StepScheme::kRungeKutta) {
        drift_step(s, target, sys, p, dt);
    } else {
        s.add_scaled(drift_rhs(s, target, sys, p), dt);
    }
    const double root_dt = std::sqrt(dt);
    if (p.sigma_q > 0) rng.add_normal(s.delta_q, p.sigma_q * root_dt);
    if (p.sigma_u > 0) rng.add_normal(s.u, p.sigma_u * root_dt);
}

SynergySystem synthesize_system(std::uint64_t seed, int n_postures)
{
    if (n_postures < kJoints + 1) {
        throw std::invalid_argument("synthesize_system needs more postures than joints (got " +
                                    std::to_string(n_postures) + ")");
    }
    Rng rng(seed);

    Eigen::MatrixXd gaussian(kJoints, kJoints);
    for (Eigen::Index i = 0; i < gaussian.size(); ++i) gaussian(i) = rng.normal();
    const Eigen::MatrixXd basis = Eigen::HouseholderQR<Eigen::MatrixXd>(gaussian).householderQ();

    Eigen::VectorXd spread(kJoints);
    for (int k = 0; k < kJoints; ++k) spread(k) = std::sqrt(kLeadingVariance * std::pow(kSpectrumDecay, k));

    Eigen::MatrixXd postures(n_postures, kJoints);
    for (Eigen::Index i = 0; i < postures.size(); ++i) postures(i) = rng.normal();
    postures = postures * spread.asDiagonal() * basis.transpose();

    return extract_synergies(postures);
}

SynergySystem extract_synergies(const Eigen::MatrixXd& postures, double grid_side)
{
    if (postures.cols() != kJoints || postures.rows() < kJoints + 1) {
        throw std::invalid_argument("calibration postures must be n x 20 with n > 20");
    }
    const Eigen::MatrixXd centered = postures.rowwise() - postures.colwise().mean();
    const Eigen::MatrixXd cov = centered.transpose() * centered / double(postures.rows() - 1);

    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    const Eigen::VectorXd values = es.eigenvalues().reverse();
    Eigen::MatrixXd vectors = es.eigenvectors().rowwise().reverse();

    for (int k = 0; k < kSynergies; ++k) {
        const double gap = values(k) - values(k + 1);
        if (gap < kMinEigenGap) {
            std::ostringstream os;
            os << "degenerate calibration covariance: eigenvalue gap " << gap << " between modes " << k + 1
               << " and " << k + 2;
            throw std::runtime_error(os.str());
        }
    }
    for (int k = 0; k < kSynergies; ++k) fix_sign(vectors.col(k));

    SynergySystem sys;
    sys.grid_side = grid_side;
    sys.phi = vectors.leftCols(kSynergies).transpose();

    Mapping raw;
    raw.row(0) = std::sqrt(values(1)) * vectors.col(1).transpose();
    raw.row(1) = std::sqrt(values(2)) * vectors.col(2).transpose();

    const Eigen::MatrixXd proj = centered * raw.transpose();
    const Eigen::RowVector2d sd =
        ((proj.rowwise() - proj.colwise().mean()).colwise().squaredNorm() / double(proj.rows() - 1)).cwiseSqrt();
    sys.unit_scale = (grid_side / 2.0) / sd.maxCoeff();
    sys.c = sys.unit_scale * raw;

    // Least-squares coordinates of C's rows in the synergy basis.
    const Eigen::Matrix4d gram = sys.phi * sys.phi.transpose();
    sys.w_true = gram.ldlt().solve(sys.phi * sys.c.transpose()).transpose();
    return sys;
}

LearnerState prior_learner_state(const SynergySystem& sys)
{
    LearnerState s;
    s.x = sys.center();
    s.w_hat = 0.1 * sys.w_true;
    return s;
}

LearnerState initial_learner_state(const SynergySystem& sys, Rng& rng, double perturbation)
{
    LearnerState s = prior_learner_state(sys);
    rng.add_normal(s.w_hat, perturbation);
    return s;
}

bool capture_check(std::span<const Vec2> window, const Vec2& target, const GameConfig& game)
{
    if (window.size() != static_cast<std::size_t>(game.capture_window)) {
        throw std::invalid_argument("capture window must hold exactly " + std::to_string(game.capture_window) +
                                    " samples");
    }
    Vec2 mean = Vec2::Zero();
    for (const Vec2& x : window) {
        if ((x - target).cwiseAbs().maxCoeff() > game.target_half_width) return false;
        mean += x;
    }
    if (window.size() < 2) return true;
    mean /= double(window.size());
    Vec2 var = Vec2::Zero();
    for (const Vec2& x : window) var += (x - mean).cwiseAbs2();
    var /= double(window.size() - 1);
    return (var.array() < game.capture_variance_threshold).all();
}

std::vector<Vec2> TrialRecord::cursor_path() const
{
    std::vector<Vec2> path;
    path.reserve(samples.size());
    for (const auto& s : samples) path.push_back(s.x);
    return path;
}

TrialOutcome integrate_trial(const LearnerState& init, const Vec2& target, const SynergySystem& sys,
                             const ModelParams& p, const GameConfig& game, Rng& rng, double t_start,
                             std::optional<Vec2> target_from)
{
    TrialOutcome out{init, {}};
    out.record.target_from = target_from;
    out.record.target_to = target;
    const int n_steps = game.max_steps();
    out.record.samples.reserve(static_cast<std::size_t>(n_steps));
    const double dt = game.dt();
    std::vector<Vec2> path;
    out.record.captured = run_trial(out.end, target, sys, p, game, rng, n_steps, true, path,
                                    [&](int k, const LearnerState& s) {
                                        out.record.samples.push_back({t_start + k * dt, s.x, s.q});
                                    });
    return out;
}

CursorTrial simulate_cursor_trial(const LearnerState& init, const Vec2& target, const SynergySystem& sys,
                                  const ModelParams& p, const GameConfig& game, Rng& rng,
                                  std::optional<int> fixed_steps)
{
    CursorTrial out{init, {}, false};
    const int n_steps = fixed_steps.value_or(game.max_steps());
    out.captured = run_trial(out.end, target, sys, p, game, rng, n_steps, !fixed_steps.has_value(), out.path,
                             [](int, const LearnerState&) {});
    return out;
}

}  // namespace hml
