#include "hml/estimation.hpp"

#include "hml/log.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace hml {
namespace {

constexpr double kCovarianceFloor = 1e-12;
constexpr int kObsDim = 2 + kJoints;

Eigen::VectorXd observation_vector(const Observation& obs)
{
    Eigen::VectorXd y(kObsDim);
    y << obs.x, obs.q;
    return y;
}

Eigen::VectorXd measure(const Eigen::VectorXd& state)
{
    Eigen::VectorXd y(kObsDim);
    y << state.segment<2>(state_layout::kX), state.segment<kJoints>(state_layout::kQ);
    return y;
}

Eigen::MatrixXd measurement_covariance(const FilterConfig& cfg)
{
    Eigen::VectorXd d(kObsDim);
    d.head<2>().setConstant(cfg.likelihood_std_x * cfg.likelihood_std_x);
    d.tail<kJoints>().setConstant(cfg.likelihood_std_q * cfg.likelihood_std_q);
    return d.asDiagonal();
}

Eigen::MatrixXd process_covariance(const ModelParams& p, double dt)
{
    Eigen::VectorXd d = Eigen::VectorXd::Zero(state_layout::kDim);
    d.segment<kJoints>(state_layout::kDeltaQ).setConstant(p.sigma_q * p.sigma_q * dt);
    d.segment<kJoints>(state_layout::kU).setConstant(p.sigma_u * p.sigma_u * dt);
    return d.asDiagonal();
}

/// Matrix square root of (scale * cov) via Cholesky, repairing cov first if
/// needed.
Eigen::MatrixXd scaled_sqrt(Eigen::MatrixXd cov, double scale)
{
    Eigen::LLT<Eigen::MatrixXd> llt(scale * cov);
    if (llt.info() != Eigen::Success) {
        repair_covariance(cov);
        llt.compute(scale * cov);
    }
    return llt.matrixL();
}

Eigen::MatrixXd sigma_points(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov, const SigmaWeights& w)
{
    const Eigen::Index n = mean.size();
    const Eigen::MatrixXd root = scaled_sqrt(cov, double(n) + w.lambda);
    Eigen::MatrixXd pts(n, 2 * n + 1);
    pts.col(0) = mean;
    for (Eigen::Index i = 0; i < n; ++i) {
        pts.col(1 + i) = mean + root.col(i);
        pts.col(1 + n + i) = mean - root.col(i);
    }
    return pts;
}

}  // namespace

FilterConfig FilterConfig::defaults_for(const SynergySystem& sys)
{
    FilterConfig cfg;
    cfg.init_w_spread = 0.2 * sys.w_true.norm() / std::sqrt(8.0);
    return cfg;
}

void FilterConfig::validate() const
{
    if (n_particles < 2 || !(likelihood_std_x > 0) || !(likelihood_std_q > 0) || !(resample_ess_fraction > 0) ||
        resample_ess_fraction > 1 || !(init_w_spread >= 0) || !(sample_period > 0)) {
        throw std::invalid_argument("invalid filter configuration");
    }
}

void ParticleEnsemble::validate() const
{
    if (particles.size() < 2 || weights.size() != static_cast<Eigen::Index>(particles.size())) {
        throw std::invalid_argument("particle ensemble needs >= 2 particles with matching weights");
    }
    if ((weights.array() < 0).any() || std::abs(weights.sum() - 1.0) > 1e-12) {
        throw std::invalid_argument("particle weights must be a probability vector");
    }
}

ParticleEnsemble make_ensemble(const LearnerState& prior, const FilterConfig& cfg, Rng& rng)
{
    cfg.validate();
    ParticleEnsemble e;
    e.particles.assign(cfg.n_particles, prior);
    for (auto& p : e.particles) rng.add_normal(p.w_hat, cfg.init_w_spread);
    e.weights = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(cfg.n_particles), 1.0 / double(cfg.n_particles));
    return e;
}

double effective_sample_size(const Eigen::VectorXd& weights) { return 1.0 / weights.squaredNorm(); }

std::vector<std::size_t> systematic_resample(const Eigen::VectorXd& weights, Rng& rng)
{
    const auto n = static_cast<std::size_t>(weights.size());
    std::vector<std::size_t> ancestors(n);
    const double step = 1.0 / double(n);
    double pointer = rng.uniform() * step;
    double cumulative = weights(0);
    std::size_t j = 0;
    for (std::size_t i = 0; i < n; ++i) {
        while (pointer > cumulative && j + 1 < n) cumulative += weights(static_cast<Eigen::Index>(++j));
        ancestors[i] = j;
        pointer += step;
    }
    return ancestors;
}

ParticleEnsemble pf_step(ParticleEnsemble ensemble, const Observation& obs, const Vec2& target,
                         const SynergySystem& sys, const ModelParams& params, const FilterConfig& cfg, Rng& rng)
{
    ensemble.validate();
    const auto n = static_cast<Eigen::Index>(ensemble.size());
    const double inv_var_x = 1.0 / (cfg.likelihood_std_x * cfg.likelihood_std_x);
    const double inv_var_q = 1.0 / (cfg.likelihood_std_q * cfg.likelihood_std_q);

    Eigen::VectorXd log_w(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        LearnerState& s = ensemble.particles[static_cast<std::size_t>(i)];
        sde_step(s, target, sys, params, cfg.sample_period, rng);
        const double ll = -0.5 * ((s.x - obs.x).squaredNorm() * inv_var_x + (s.q - obs.q).squaredNorm() * inv_var_q);
        log_w(i) = std::isfinite(ll) ? std::log(ensemble.weights(i)) + ll : -std::numeric_limits<double>::infinity();
    }

    const double top = log_w.maxCoeff();
    double total = 0.0;
    if (std::isfinite(top)) {
        ensemble.weights = (log_w.array() - top).exp().matrix();
        total = ensemble.weights.sum();
    }
    if (!(total > 0) || !std::isfinite(total)) {
        log_warning("particle filter: all likelihoods underflowed, resetting to uniform weights");
        ensemble.weights.setConstant(1.0 / double(n));
    } else {
        ensemble.weights /= total;
    }

    if (effective_sample_size(ensemble.weights) < cfg.resample_ess_fraction * double(n)) {
        const auto ancestors = systematic_resample(ensemble.weights, rng);
        std::vector<LearnerState> next;
        next.reserve(ancestors.size());
        for (std::size_t a : ancestors) next.push_back(ensemble.particles[a]);
        ensemble.particles = std::move(next);
        ensemble.weights.setConstant(1.0 / double(n));
    }
    return ensemble;
}

PfEstimate pf_estimate(const ParticleEnsemble& ensemble, const SynergySystem& sys)
{
    PfEstimate est{WeightMat::Zero(), Mapping::Zero()};
    for (std::size_t i = 0; i < ensemble.size(); ++i) {
        est.w_hat_mean += ensemble.weights(static_cast<Eigen::Index>(i)) * ensemble.particles[i].w_hat;
    }
    est.c_hat = est.w_hat_mean * sys.phi;
    return est;
}

LearnerState pf_mean_state(const ParticleEnsemble& ensemble)
{
    LearnerState mean;
    for (std::size_t i = 0; i < ensemble.size(); ++i) {
        mean.add_scaled(ensemble.particles[i], ensemble.weights(static_cast<Eigen::Index>(i)));
    }
    return mean;
}

SigmaWeights sigma_weights(Eigen::Index n, const UnscentedParams& ut)
{
    SigmaWeights w;
    w.lambda = ut.alpha * ut.alpha * (double(n) + ut.kappa) - double(n);
    const double denom = double(n) + w.lambda;
    w.mean = Eigen::VectorXd::Constant(2 * n + 1, 0.5 / denom);
    w.cov = w.mean;
    w.mean(0) = w.lambda / denom;
    w.cov(0) = w.lambda / denom + (1.0 - ut.alpha * ut.alpha + ut.beta);
    return w;
}

bool repair_covariance(Eigen::MatrixXd& cov)
{
    cov = 0.5 * (cov + cov.transpose()).eval();
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() == Eigen::Success) return false;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    const Eigen::VectorXd floored = es.eigenvalues().cwiseMax(kCovarianceFloor);
    cov = es.eigenvectors() * floored.asDiagonal() * es.eigenvectors().transpose();
    cov = 0.5 * (cov + cov.transpose()).eval();
    std::ostringstream os;
    os << "covariance lost positive definiteness (min eigenvalue " << es.eigenvalues().minCoeff()
       << "), flooring at 1e-12";
    log_warning(os.str());
    return true;
}

Eigen::MatrixXd numerical_jacobian(const VectorMap& f, const Eigen::VectorXd& x, double step)
{
    const Eigen::VectorXd f0 = f(x);
    Eigen::MatrixXd jac(f0.size(), x.size());
    Eigen::VectorXd probe = x;
    for (Eigen::Index j = 0; j < x.size(); ++j) {
        probe(j) = x(j) + step;
        const Eigen::VectorXd plus = f(probe);
        probe(j) = x(j) - step;
        const Eigen::VectorXd minus = f(probe);
        probe(j) = x(j);
        jac.col(j) = (plus - minus) / (2.0 * step);
    }
    return jac;
}

GaussianBelief ekf_step(const GaussianBelief& belief, const VectorMap& dynamics, const Eigen::MatrixXd& process_cov,
                        const Eigen::VectorXd& y, const VectorMap& measurement,
                        const Eigen::MatrixXd& measurement_cov)
{
    const Eigen::MatrixXd f_jac = numerical_jacobian(dynamics, belief.mean);
    GaussianBelief pred{dynamics(belief.mean), f_jac * belief.cov * f_jac.transpose() + process_cov};

    const Eigen::MatrixXd h_jac = numerical_jacobian(measurement, pred.mean);
    const Eigen::MatrixXd s = h_jac * pred.cov * h_jac.transpose() + measurement_cov;
    const Eigen::MatrixXd gain = s.ldlt().solve(h_jac * pred.cov).transpose();

    GaussianBelief out;
    out.mean = pred.mean + gain * (y - measurement(pred.mean));
    const Eigen::MatrixXd joseph = Eigen::MatrixXd::Identity(pred.mean.size(), pred.mean.size()) - gain * h_jac;
    out.cov = joseph * pred.cov * joseph.transpose() + gain * measurement_cov * gain.transpose();
    repair_covariance(out.cov);
    return out;
}

GaussianBelief ukf_step(const GaussianBelief& belief, const VectorMap& dynamics, const Eigen::MatrixXd& process_cov,
                        const Eigen::VectorXd& y, const VectorMap& measurement,
                        const Eigen::MatrixXd& measurement_cov, const UnscentedParams& ut)
{
    const Eigen::Index n = belief.mean.size();
    const SigmaWeights w = sigma_weights(n, ut);

    const Eigen::MatrixXd pts = sigma_points(belief.mean, belief.cov, w);
    Eigen::MatrixXd prop(n, pts.cols());
    for (Eigen::Index i = 0; i < pts.cols(); ++i) prop.col(i) = dynamics(pts.col(i));
    GaussianBelief pred;
    pred.mean = prop * w.mean;
    const Eigen::MatrixXd dev = prop.colwise() - pred.mean;
    pred.cov = dev * w.cov.asDiagonal() * dev.transpose() + process_cov;

    const Eigen::MatrixXd pts2 = sigma_points(pred.mean, pred.cov, w);
    const Eigen::Index m = y.size();
    Eigen::MatrixXd z(m, pts2.cols());
    for (Eigen::Index i = 0; i < pts2.cols(); ++i) z.col(i) = measurement(pts2.col(i));
    const Eigen::VectorXd z_mean = z * w.mean;
    const Eigen::MatrixXd dz = z.colwise() - z_mean;
    const Eigen::MatrixXd dx = pts2.colwise() - pred.mean;
    const Eigen::MatrixXd s = dz * w.cov.asDiagonal() * dz.transpose() + measurement_cov;
    const Eigen::MatrixXd cross = dx * w.cov.asDiagonal() * dz.transpose();
    const Eigen::MatrixXd gain = s.ldlt().solve(cross.transpose()).transpose();

    GaussianBelief out;
    out.mean = pred.mean + gain * (y - z_mean);
    out.cov = pred.cov - gain * s * gain.transpose();
    repair_covariance(out.cov);
    return out;
}

GaussianBelief gaussian_filter_step(GaussianFilterKind kind, const GaussianBelief& belief, const Observation& obs,
                                    const Vec2& target, const SynergySystem& sys, const ModelParams& params,
                                    const FilterConfig& cfg, const UnscentedParams& ut)
{
    const double dt = cfg.sample_period;
    const VectorMap dynamics = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
        LearnerState s = LearnerState::unflatten(v);
        if (params.scheme == StepScheme::kRungeKutta) {
            drift_step(s, target, sys, params, dt);
        } else {
            s.add_scaled(drift_rhs(s, target, sys, params), dt);
        }
        return s.flatten();
    };
    const Eigen::MatrixXd q = process_covariance(params, dt);
    const Eigen::MatrixXd r = measurement_covariance(cfg);
    const Eigen::VectorXd y = observation_vector(obs);
    return kind == GaussianFilterKind::kEkf ? ekf_step(belief, dynamics, q, y, measure, r)
                                            : ukf_step(belief, dynamics, q, y, measure, r, ut);
}

FilterBenchResult filter_consistency_bench(const SynergySystem& sys, const ModelParams& params,
                                           const FilterBenchOptions& opts, Rng& rng)
{
    const std::uint64_t seed = rng.next_seed();
    FilterBenchResult result;
    const LearnerState nominal = prior_learner_state(sys);
    const double w_sd = opts.perturb_scale * sys.w_true.norm() / std::sqrt(8.0);
    const double x_sd = opts.perturb_scale * nominal.x.norm() / std::sqrt(2.0);
    constexpr double kKnownVariance = 1e-10;

    std::vector<TargetId> goals;
    for (TargetId t = 0; t < opts.game.targets.size(); ++t) {
        if ((opts.game.targets[t] - nominal.x).norm() > opts.game.target_half_width) goals.push_back(t);
    }

    for (int run = 0; run < opts.n_mc; ++run) {
        Rng run_rng(derive_seed(seed, {static_cast<std::uint64_t>(run)}));
        LearnerState truth = nominal;
        run_rng.add_normal(truth.x, x_sd);
        run_rng.add_normal(truth.w_hat, w_sd);
        const Vec2 target = opts.game.targets[goals[run_rng.index(goals.size())]];
        const TrialOutcome trial = integrate_trial(truth, target, sys, params, opts.game, run_rng);

        std::vector<Observation> observations;
        for (const auto& sample : trial.record.samples) {
            Observation o{sample.x, sample.q};
            if (opts.observation_std_x > 0) run_rng.add_normal(o.x, opts.observation_std_x);
            if (opts.observation_std_q > 0) run_rng.add_normal(o.q, opts.observation_std_q);
            observations.push_back(o);
        }

        Eigen::VectorXd prior_var = Eigen::VectorXd::Constant(state_layout::kDim, kKnownVariance);
        prior_var.segment<2>(state_layout::kX).array() += x_sd * x_sd;
        prior_var.segment<2 * kSynergies>(state_layout::kWHat).array() += w_sd * w_sd;
        const GaussianBelief prior{nominal.flatten(), prior_var.asDiagonal()};

        FilterConfig cfg = opts.filter;
        cfg.sample_period = opts.game.dt();
        const auto final_error = [&](const WeightMat& est) {
            const double e = (est - trial.end.w_hat).norm();
            return std::isfinite(e) ? e : std::numeric_limits<double>::infinity();
        };

        for (const GaussianFilterKind kind : {GaussianFilterKind::kEkf, GaussianFilterKind::kUkf}) {
            double err = std::numeric_limits<double>::infinity();
            try {
                GaussianBelief b = prior;
                for (const auto& o : observations) {
                    b = gaussian_filter_step(kind, b, o, target, sys, params, cfg, opts.ut);
                    if (!b.mean.allFinite()) break;
                }
                if (b.mean.allFinite()) err = final_error(LearnerState::unflatten(b.mean).w_hat);
            } catch (const std::exception& e) {
                log_warning(std::string("gaussian filter failed: ") + e.what());
            }
            (kind == GaussianFilterKind::kEkf ? result.ekf : result.ukf).push_back(err);
        }

        Rng pf_rng(derive_seed(seed, {static_cast<std::uint64_t>(run), 1}));
        FilterConfig pf_cfg = cfg;
        pf_cfg.init_w_spread = w_sd;
        ParticleEnsemble ensemble = make_ensemble(nominal, pf_cfg, pf_rng);
        for (auto& p : ensemble.particles) pf_rng.add_normal(p.x, x_sd);
        for (const auto& o : observations) ensemble = pf_step(std::move(ensemble), o, target, sys, params, pf_cfg, pf_rng);
        result.pf.push_back(final_error(pf_estimate(ensemble, sys).w_hat_mean));
    }
    return result;
}

}  // namespace hml
