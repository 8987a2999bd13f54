#pragma once

#include "hml/types.hpp"

#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace hml {

struct TrialMetrics {
    double re = 0.0;  ///< reaching error (grid units)
    double sot = 0.0; ///< straightness of trajectory
    std::optional<double> te;
};

/// Movement starts at the first sample whose forward-difference speed stays
/// above `speed_threshold` for `sustain` consecutive samples.
struct MovementOnset {
    double speed_threshold = 0.05;
    int sustain = 3;
};

/// Index of movement start in a cursor path (0 when no movement is found).
std::size_t movement_onset(std::span<const Vec2> path, double sample_period, const MovementOnset& rule = {});

/// Distance from the cursor to the target at the end of the movement or
/// `cutoff` seconds after movement start, whichever comes first.
double reaching_error(std::span<const Vec2> path, const Vec2& target, double sample_period, double cutoff = 2.0,
                      const MovementOnset& rule = {});

/// Maximum distance of the path from the start-end segment over the segment
/// length. Throws std::domain_error when start and end coincide.
double straightness(std::span<const Vec2> path);

/// straightness() or nullopt for a degenerate chord.
std::optional<double> try_straightness(std::span<const Vec2> path);

/// Linear interpolation of a path onto n equispaced normalised-time points.
std::vector<Vec2> resample_linear(std::span<const Vec2> path, std::size_t n);

/// Norm of stacked pointwise differences; the shorter path is resampled to
/// the longer one's length first.
double trajectory_error(std::span<const Vec2> model_path, std::span<const Vec2> data_path);

/// ||C - C_hat||_F / ||C||_F.
template <typename DerivedA, typename DerivedB>
double forward_modeling_error(const Eigen::MatrixBase<DerivedA>& c, const Eigen::MatrixBase<DerivedB>& c_hat)
{
    if (c.rows() != c_hat.rows() || c.cols() != c_hat.cols()) {
        throw std::invalid_argument("forward_modeling_error: shape mismatch");
    }
    const double scale = c.norm();
    if (!(scale > 0)) throw std::invalid_argument("forward_modeling_error: zero mapping");
    return (c - c_hat).norm() / scale;
}

/// RE and SoT of one trial toward `target`; a degenerate chord counts as
/// SoT = 0.
TrialMetrics trial_metrics(std::span<const Vec2> path, const Vec2& target, double sample_period,
                           double cutoff = 2.0);

}  // namespace hml
