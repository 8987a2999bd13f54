#include "hml/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace hml {

std::size_t movement_onset(std::span<const Vec2> path, double sample_period, const MovementOnset& rule)
{
    const auto sustain = static_cast<std::size_t>(std::max(rule.sustain, 1));
    std::size_t run = 0;
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
        const double speed = (path[i + 1] - path[i]).norm() / sample_period;
        run = speed > rule.speed_threshold ? run + 1 : 0;
        if (run == sustain) return i + 1 - sustain;
    }
    return 0;
}

double reaching_error(std::span<const Vec2> path, const Vec2& target, double sample_period, double cutoff,
                      const MovementOnset& rule)
{
    if (path.empty()) throw std::invalid_argument("reaching_error: empty path");
    const std::size_t start = movement_onset(path, sample_period, rule);
    const auto offset = static_cast<std::size_t>(std::lround(cutoff / sample_period));
    const std::size_t at = std::min(path.size() - 1, start + offset);
    return (path[at] - target).norm();
}

std::optional<double> try_straightness(std::span<const Vec2> path)
{
    if (path.empty()) return std::nullopt;
    const Vec2 start = path.front();
    const Vec2 chord = path.back() - start;
    const double length = chord.norm();
    if (!(length > 1e-9)) return std::nullopt;
    double worst = 0.0;
    for (const Vec2& x : path) {
        const double s = std::clamp((x - start).dot(chord) / (length * length), 0.0, 1.0);
        worst = std::max(worst, (x - (start + s * chord)).norm());
    }
    return worst / length;
}

double straightness(std::span<const Vec2> path)
{
    const auto sot = try_straightness(path);
    if (!sot) throw std::domain_error("straightness: start and end points coincide");
    return *sot;
}

std::vector<Vec2> resample_linear(std::span<const Vec2> path, std::size_t n)
{
    if (path.empty() || n == 0) throw std::invalid_argument("resample_linear: empty input");
    std::vector<Vec2> out(n, path.front());
    if (path.size() == 1 || n == 1) return out;
    const double span = double(path.size() - 1);
    for (std::size_t k = 0; k < n; ++k) {
        const double pos = span * double(k) / double(n - 1);
        const auto lo = std::min(static_cast<std::size_t>(pos), path.size() - 2);
        const double frac = pos - double(lo);
        out[k] = (1.0 - frac) * path[lo] + frac * path[lo + 1];
    }
    return out;
}

double trajectory_error(std::span<const Vec2> model_path, std::span<const Vec2> data_path)
{
    if (model_path.empty() || data_path.empty()) throw std::invalid_argument("trajectory_error: empty input");
    const std::size_t n = std::max(model_path.size(), data_path.size());
    std::vector<Vec2> model_storage, data_storage;
    if (model_path.size() != n) {
        model_storage = resample_linear(model_path, n);
        model_path = model_storage;
    }
    if (data_path.size() != n) {
        data_storage = resample_linear(data_path, n);
        data_path = data_storage;
    }
    double sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) sq += (model_path[i] - data_path[i]).squaredNorm();
    return std::sqrt(sq);
}

TrialMetrics trial_metrics(std::span<const Vec2> path, const Vec2& target, double sample_period, double cutoff)
{
    TrialMetrics m;
    m.re = reaching_error(path, target, sample_period, cutoff);
    m.sot = try_straightness(path).value_or(0.0);
    return m;
}

}  // namespace hml
