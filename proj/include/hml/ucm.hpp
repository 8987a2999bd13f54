#pragma once

#include "hml/model.hpp"

#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace hml {

/// One trial's joint angles on the normalised time grid (rows = time points).
using NormalizedTrial = Eigen::Matrix<double, Eigen::Dynamic, kJoints>;

inline constexpr std::size_t kUcmTimePoints = 1001;

/// Linear interpolation of each record's q series onto n_points equispaced
/// points of normalised time [0, 1].
std::vector<NormalizedTrial> time_normalize(std::span<const TrialRecord> records,
                                            std::size_t n_points = kUcmTimePoints);

/// Orthonormal bases of row(C) (first columns) and null(C) (remaining
/// columns) from a rank-revealing QR of C^T. Throws when rank(C) != rows(C).
struct UcmBasis {
    Eigen::MatrixXd row;
    Eigen::MatrixXd null;
};
UcmBasis ucm_basis(const Mapping& c, double threshold = 1e-10);

struct UcmSeries {
    std::string group;
    int phase = 0;
    std::string pair;
    std::vector<double> t_norm;
    std::vector<double> v_ucm;
    std::vector<double> v_ort;
    std::vector<double> fraction;

    double mean_fraction() const;
};

/// Per time point: deviations from the across-trial mean projected onto
/// null(C) and row(C); squared norms summed over trials and divided by
/// DoF * (n - 1).
UcmSeries variance_decompose(std::span<const NormalizedTrial> trials, const Mapping& c);

/// 1-3 -> 1, 4-6 -> 2, anything else -> 0 (excluded).
int phase_of_block(int block);

struct RunUcm {
    std::size_t run = 0;
    UcmSeries series;
};

struct PhaseSummary {
    std::string group;
    int phase = 0;
    double mean = 0.0;
    double ci_half_width = 0.0; ///< 1.96 sd / sqrt(n)
    std::size_t n_runs = 0;
};

/// Averages each run's time-mean fraction across target pairs, then takes the
/// mean and normal-approximation 95% interval across runs, per (group, phase).
/// Throws when a requested phase has no data for a group.
std::vector<PhaseSummary> phase_aggregate(std::span<const RunUcm> results, std::span<const int> phases);

/// CSV columns: group,phase,pair,t_norm,v_ucm,v_ort,fraction
void write_ucm_csv(std::ostream& os, std::span<const UcmSeries> series);

}  // namespace hml
