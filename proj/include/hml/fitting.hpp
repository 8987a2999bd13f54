#pragma once

#include "hml/metrics.hpp"
#include "hml/model.hpp"

#include <array>
#include <vector>

namespace hml {

/// Fitted genes in order (log10 gamma, eta, mu, k_p, sigma_u, sigma_q); `a`
/// stays fixed. gamma spans four decades, so it is searched on a log scale.
inline constexpr int kFitDim = 6;
using Genes = Eigen::Matrix<double, kFitDim, 1>;
using Objectives = Eigen::Vector3d; ///< (f_RE, f_SoT, f_TE)

Genes to_genes(const ModelParams& p);
ModelParams from_genes(const Genes& g, const ModelParams& base = {});

struct FitBounds {
    Genes lower = (Genes() << -6.0, 0.01, 0.1, 0.5, 0.0, 0.0).finished();
    Genes upper = (Genes() << -2.0, 5.0, 50.0, 50.0, 3.0, 0.1).finished();

    Genes clip(const Genes& g) const { return g.cwiseMax(lower).cwiseMin(upper); }
    bool contains(const Genes& g) const { return (g.array() >= lower.array()).all() && (g.array() <= upper.array()).all(); }
};

struct Individual {
    Genes genes = Genes::Zero();
    Objectives objectives = Objectives::Zero();
    int rank = 0;
    double crowding = 0.0;
};

struct GaPhase {
    std::size_t population = 32;
    int generations = 20;
    double sbx_prob = 0.9;
    double sbx_eta = 15.0;
    double pm_prob = 0.17;
    double pm_eta = 10.0;
};

struct GaConfig {
    GaPhase phase1{256, 250, 0.9, 15.0, 0.17, 10.0};
    GaPhase phase2{128, 250, 0.9, 20.0, 0.1, 15.0};
    int resample_every = 5;
    int resample_count = 3;
    int restarts = 10;
    FitBounds bounds;
    std::size_t workers = 1;

    static GaConfig paper() { return {}; }
    /// Population 32, 20 + 20 generations, one restart.
    static GaConfig desk();
    void validate() const;
};

/// Reference gameplay: the learner's start state and the recorded trials
/// (their target sequence and sample counts drive the model replay).
struct ReferenceData {
    LearnerState initial;
    std::vector<TrialRecord> trials;
};

/// Records `targets.size()` trials of the model with `params`.
ReferenceData make_reference(const ModelParams& params, const SynergySystem& sys, const GameConfig& game,
                             const LearnerState& initial, const std::vector<TargetId>& targets, Rng& rng);

/// Objective value assigned when a candidate diverges.
inline constexpr double kFitPenalty = 1e6;

/// Replays the reference target sequence, each trial lasting exactly as many
/// samples as the recorded one, and returns the norms of the per-trial RE,
/// SoT and trajectory discrepancies.
Objectives evaluate_objectives(const ModelParams& params, const ReferenceData& ref, const SynergySystem& sys,
                               const GameConfig& game, Rng& rng);

/// a <= b everywhere and a < b somewhere.
bool dominates(const Objectives& a, const Objectives& b);

/// Fast nondominated sort (rank 1 = first front) and per-front crowding
/// distance (boundary points get +infinity).
void pareto_rank(std::vector<Individual>& population);

/// Binary tournament on (rank, crowding).
std::size_t tournament_select(const std::vector<Individual>& population, Rng& rng);

/// SBX on one pair of gene vectors (each gene crosses with probability 0.5).
std::array<Genes, 2> sbx_crossover(const Genes& a, const Genes& b, double eta, Rng& rng);

/// Polynomial mutation, each gene with probability `prob`, clipped to bounds.
Genes polynomial_mutation(const Genes& g, double prob, double eta, const FitBounds& bounds, Rng& rng);

/// SBX on consecutive parent pairs followed by mutation; returns as many
/// children as parents, clipped to bounds.
std::vector<Genes> variation(const std::vector<Genes>& parents, const GaPhase& phase, const FitBounds& bounds,
                             Rng& rng);

struct GenerationStats {
    int phase = 1;
    int restart = 0;
    int generation = 0;
    double best_re = 0.0;
    double median_re = 0.0;
    std::size_t front_size = 0;
};

struct FitResult {
    ModelParams selected;
    Individual selected_individual;
    std::vector<Individual> front; ///< pooled final fronts
    std::vector<GenerationStats> history;
    double generation0_median_re = 0.0;
};

/// Phase-2 start: the rank-1 members of a ranked phase-1 population in
/// crowded order, cycled up to n.
std::vector<Individual> seed_phase2(std::vector<Individual> pop, std::size_t n);

/// Among `candidates`, minimum f_RE subject to f_SoT below the candidates'
/// average f_SoT; falls back to the global minimum f_RE (logged).
const Individual& select_fit(const std::vector<Individual>& candidates);

FitResult run_fit(const ReferenceData& ref, const SynergySystem& sys, const GameConfig& game, const GaConfig& cfg,
                  std::uint64_t seed, const ModelParams& base = {});

}  // namespace hml
