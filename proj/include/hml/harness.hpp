#pragma once

#include "hml/curriculum.hpp"
#include "hml/estimation.hpp"
#include "hml/fitting.hpp"
#include "hml/ucm.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace hml {

enum class CurriculumKind { kRandom, kHeuristic, kSnmpc };
enum class PlannerState { kEstimated, kOracle };
enum class Preset { kDesk, kPaper };

/// One experimental group.
struct Arm {
    CurriculumKind kind = CurriculumKind::kRandom;
    int horizon = 4;
    double tau = 0.2;
    /// Planner and estimator use model B while the learner follows model A.
    bool mismatched = false;

    std::string label() const;
    bool operator==(const Arm&) const = default;
};

/// Model B = model A with eta, k_P and gamma scaled.
struct ModelBPreset {
    double eta_factor = 1.5;
    double k_p_factor = 0.5;
    double gamma_factor = 5.0;

    ModelParams apply(const ModelParams& a) const;
};

struct ExperimentSpec {
    std::string scenario = "fig2b";
    std::vector<Arm> arms;
    ModelParams params; ///< model A (simulated learner)
    ModelBPreset model_b;
    int n_mc = 10;
    int n_blocks = 8;
    int trials_per_block = 60;
    std::uint64_t seed = 1;
    CurriculumConfig curriculum;
    FilterConfig filter;
    /// Negative: match w0_perturbation.
    double filter_init_w_spread = -1.0;
    GameConfig game;
    double w0_perturbation = 0.01;
    /// Integration scheme of the planner's and estimator's internal model.
    StepScheme model_scheme = StepScheme::kEuler;
    int calibration_postures = 300;
    PlannerState planner_state = PlannerState::kEstimated;
    /// Planner rollouts start from resampled particles instead of the
    /// particle mean.
    bool ensemble_rollouts = false;
    double fme_threshold = 0.2;
    std::size_t workers = 1;
    // filters scenario
    int bench_runs = 100;
    double bench_perturb = 0.1;
    // fit scenario
    int fit_reference_trials = 60;
    GaConfig ga = GaConfig::desk();
    // ucm scenario
    std::vector<int> ucm_phases{1, 2};

    int n_trials() const { return n_blocks * trials_per_block; }
    void validate() const;
};

/// Built-in scenario with its default arms and sizes.
ExperimentSpec scenario_spec(const std::string& scenario, Preset preset);
const std::vector<std::string>& scenario_ids();

struct TrialRow {
    int trial = 0;
    TargetId target = 0;
    double re = 0.0;
    double sot = 0.0;
    double fme_true = 0.0;
    double fme_est = 0.0;
    bool captured = false;
    double wall_time = 0.0; ///< seconds spent on the trial (not deterministic)
};

struct Decision {
    int trial = 0;
    std::vector<QValue> q;
    TargetId chosen = 0;
    double tau = 0.0;
    std::uint64_t seed = 0;
};

struct RunManifest {
    std::string spec_hash;
    std::uint64_t seed = 0;
    std::size_t run = 0;
    std::string arm;
    std::vector<TrialRow> rows;
    std::vector<Decision> decisions;
    std::string environment;
    bool complete = true;
    std::string error;
    /// Full trial records, kept only when requested (UCM).
    std::vector<TrialRecord> records;

    /// First trial whose estimated (or true) FME is <= threshold; rows+1 when
    /// never reached.
    int trials_to_threshold(double threshold, bool estimated = true) const;
};

struct ExperimentResult {
    ExperimentSpec spec;
    std::string spec_hash;
    std::vector<RunManifest> runs;
    std::optional<FilterBenchResult> bench;
    std::optional<FitResult> fit;
    std::vector<UcmSeries> ucm_series;
    std::vector<PhaseSummary> ucm_phases;

    bool complete() const;
};

/// FNV-1a of the canonical (sorted-key) JSON form of the spec.
std::string spec_hash(const ExperimentSpec& spec);
std::string environment_fingerprint();

/// The system, learner start, learner noise stream and estimator stream of
/// Monte Carlo run `mc` do not depend on the arm, so arms are compared on
/// common random numbers.
RunManifest run_arm(const ExperimentSpec& spec, std::size_t mc, const Arm& arm, bool keep_records = false);

ExperimentResult run_experiment(const ExperimentSpec& spec);

/// Synergy system of Monte Carlo run `mc`.
SynergySystem run_system(const ExperimentSpec& spec, std::size_t mc);

/// UCM phase analysis over kept records, grouped by arm, phase and target
/// pair. Records are released afterwards.
void analyze_ucm(ExperimentResult& result);

// ---------------------------------------------------------------------------
// Output

struct SeriesStats {
    std::vector<double> mean;
    std::vector<double> half_width; ///< 1.96 sd / sqrt(n)
};

/// Per-trial mean and CI of `field` across the runs of one arm.
SeriesStats series_stats(const std::vector<const RunManifest*>& runs, double TrialRow::*field);

/// Writes manifest.json, runs.csv, one <arm>.csv per arm, summary.csv,
/// decisions.csv, SVG plots and scenario extras into `dir`.
void emit_outputs(const ExperimentResult& result, const std::filesystem::path& dir);

/// Parses a runs.csv written by emit_outputs.
std::vector<RunManifest> read_runs_csv(const std::filesystem::path& file);

}  // namespace hml
