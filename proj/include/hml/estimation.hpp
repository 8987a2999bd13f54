#pragma once

#include "hml/model.hpp"

#include <functional>
#include <vector>

namespace hml {

struct FilterConfig {
    std::size_t n_particles = 500;
    double likelihood_std_x = 0.05; ///< grid units
    double likelihood_std_q = 0.02; ///< rad
    double resample_ess_fraction = 0.5;
    double init_w_spread = 0.1;     ///< std of the initial W_hat particle cloud
    double sample_period = 0.01;    ///< observation interval (s)

    /// Defaults with init_w_spread = 0.2 ||W_true||_F / sqrt(8).
    static FilterConfig defaults_for(const SynergySystem& sys);
    void validate() const;
};

struct Observation {
    Vec2 x = Vec2::Zero();
    JointVec q = JointVec::Zero();
};

struct ParticleEnsemble {
    std::vector<LearnerState> particles;
    Eigen::VectorXd weights;

    std::size_t size() const { return particles.size(); }
    /// Throws std::invalid_argument unless weights are a probability vector
    /// (to 1e-12) over at least two particles.
    void validate() const;
};

/// Particles share the prior state; W_hat is dispersed with cfg.init_w_spread.
ParticleEnsemble make_ensemble(const LearnerState& prior, const FilterConfig& cfg, Rng& rng);

/// 1 / sum w^2.
double effective_sample_size(const Eigen::VectorXd& weights);

/// Systematic resampling: ancestor indices for N equally spaced pointers.
std::vector<std::size_t> systematic_resample(const Eigen::VectorXd& weights, Rng& rng);

/// Propagate one sample interval, reweight with the Gaussian (x, q)
/// likelihood, resample when ESS < resample_ess_fraction * N.
ParticleEnsemble pf_step(ParticleEnsemble ensemble, const Observation& obs, const Vec2& target,
                         const SynergySystem& sys, const ModelParams& params, const FilterConfig& cfg, Rng& rng);

struct PfEstimate {
    WeightMat w_hat_mean;
    Mapping c_hat;
};

PfEstimate pf_estimate(const ParticleEnsemble& ensemble, const SynergySystem& sys);

/// Weighted mean of every state block.
LearnerState pf_mean_state(const ParticleEnsemble& ensemble);

// ---------------------------------------------------------------------------
// Gaussian filters

struct GaussianBelief {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
};

/// Scaled unscented transform parameters.
struct UnscentedParams {
    double alpha = 1e-3;
    double beta = 2.0;
    double kappa = 0.0;
};

/// Mean and covariance weights of the 2n+1 sigma points.
struct SigmaWeights {
    Eigen::VectorXd mean;
    Eigen::VectorXd cov;
    double lambda = 0.0;
};
SigmaWeights sigma_weights(Eigen::Index n, const UnscentedParams& ut);

using VectorMap = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// Symmetrises `cov` and floors its eigenvalues at 1e-12 when it is not
/// positive definite. Returns true (and logs) when a repair happened.
bool repair_covariance(Eigen::MatrixXd& cov);

/// Central-difference Jacobian.
Eigen::MatrixXd numerical_jacobian(const VectorMap& f, const Eigen::VectorXd& x, double step = 1e-5);

/// Generic discrete-time EKF predict + update.
GaussianBelief ekf_step(const GaussianBelief& belief, const VectorMap& dynamics, const Eigen::MatrixXd& process_cov,
                        const Eigen::VectorXd& y, const VectorMap& measurement,
                        const Eigen::MatrixXd& measurement_cov);

/// Generic discrete-time UKF predict + update (sigma points are redrawn from
/// the predicted belief for the update).
GaussianBelief ukf_step(const GaussianBelief& belief, const VectorMap& dynamics, const Eigen::MatrixXd& process_cov,
                        const Eigen::VectorXd& y, const VectorMap& measurement,
                        const Eigen::MatrixXd& measurement_cov, const UnscentedParams& ut = {});

enum class GaussianFilterKind { kEkf, kUkf };

/// One observation interval of the learner model through the EKF or UKF.
/// The state is LearnerState::flatten(); the measurement picks (x, q).
GaussianBelief gaussian_filter_step(GaussianFilterKind kind, const GaussianBelief& belief, const Observation& obs,
                                    const Vec2& target, const SynergySystem& sys, const ModelParams& params,
                                    const FilterConfig& cfg, const UnscentedParams& ut = {});

struct FilterBenchResult {
    std::vector<double> ekf;
    std::vector<double> ukf;
    std::vector<double> pf;
};

struct FilterBenchOptions {
    int n_mc = 100;
    double perturb_scale = 0.1;
    FilterConfig filter;
    UnscentedParams ut;
    GameConfig game;
    /// Measurement noise added to the simulated observations.
    double observation_std_x = 0.0;
    double observation_std_q = 0.0;
};

/// Consistency benchmark: per Monte Carlo run, perturb the initial learner,
/// simulate one trial, run all three filters on its observations, and record
/// the final ||W_hat_est - W_hat_true||_F (+inf when a filter diverges).
FilterBenchResult filter_consistency_bench(const SynergySystem& sys, const ModelParams& params,
                                           const FilterBenchOptions& opts, Rng& rng);

}  // namespace hml
