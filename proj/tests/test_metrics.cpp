#include "hml/metrics.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace hml;

namespace {

constexpr double kDt = 0.01;

std::vector<Vec2> segment(const Vec2& a, const Vec2& b, int n)
{
    std::vector<Vec2> out;
    for (int i = 0; i < n; ++i) out.push_back(a + (b - a) * double(i) / double(n - 1));
    return out;
}

}  // namespace

TEST(ReachingError, EndsAtTarget)
{
    const auto path = segment(Vec2(0.5, 0.5), Vec2(2.5, 2.5), 100);
    EXPECT_NEAR(reaching_error(path, Vec2(2.5, 2.5), kDt), 0.0, 1e-12);
}

TEST(ReachingError, StationaryCursor)
{
    const std::vector<Vec2> path(300, Vec2(1.0, 1.0));
    EXPECT_NEAR(reaching_error(path, Vec2(1.0, 1.7), kDt), 0.7, 1e-12);
}

TEST(ReachingError, OvershootMeasuredAtMovementEnd)
{
    // Onset at t = 0, reaches the target at t = 1 s, ends 0.3 past it at 1.5 s.
    const Vec2 start(0.5, 2.5), target(2.5, 2.5), overshoot(2.8, 2.5);
    auto path = segment(start, target, 101);
    const auto tail = segment(target, overshoot, 51);
    path.insert(path.end(), tail.begin() + 1, tail.end());
    EXPECT_NEAR(reaching_error(path, target, kDt), 0.3, 1e-12);
}

TEST(ReachingError, CutoffAfterOnset)
{
    // Rest for 1 s, then move; the cutoff sample is 2 s after the onset.
    std::vector<Vec2> path(100, Vec2(0, 0));
    for (int i = 1; i <= 400; ++i) path.push_back(Vec2(0.01 * i, 0));
    const std::size_t onset = movement_onset(path, kDt);
    EXPECT_EQ(onset, 99u);
    EXPECT_NEAR(reaching_error(path, Vec2(0, 0), kDt), path[onset + 200].x(), 1e-12);
}

TEST(Straightness, Straight)
{
    EXPECT_NEAR(straightness(segment(Vec2(0, 0), Vec2(3, 4), 50)), 0.0, 1e-12);
}

TEST(Straightness, Semicircle)
{
    const double r = 1.3;
    std::vector<Vec2> arc;
    for (int i = 0; i <= 2000; ++i) {
        const double th = std::numbers::pi * double(i) / 2000.0;
        arc.push_back(Vec2(r - r * std::cos(th), r * std::sin(th)));
    }
    EXPECT_NEAR(straightness(arc), 0.5, 1e-6);
}

TEST(Straightness, RightAngle)
{
    const double leg = 2.0;
    auto path = segment(Vec2(0, 0), Vec2(leg, 0), 11);
    const auto up = segment(Vec2(leg, 0), Vec2(leg, leg), 11);
    path.insert(path.end(), up.begin() + 1, up.end());
    EXPECT_NEAR(straightness(path), 0.5, 1e-12);
}

TEST(Straightness, DegenerateChord)
{
    const std::vector<Vec2> loop{Vec2(0, 0), Vec2(1, 1), Vec2(0, 0)};
    EXPECT_THROW(straightness(loop), std::domain_error);
    EXPECT_FALSE(try_straightness(loop).has_value());
    EXPECT_EQ(trial_metrics(loop, Vec2(0, 0), kDt).sot, 0.0);
}

TEST(TrajectoryError, IdenticalAndOffset)
{
    const auto a = segment(Vec2(0, 0), Vec2(1, 2), 64);
    EXPECT_EQ(trajectory_error(a, a), 0.0);
    std::vector<Vec2> b = a;
    for (Vec2& x : b) x += Vec2(0.3, 0.0);
    EXPECT_NEAR(trajectory_error(a, b), 0.3 * std::sqrt(64.0), 1e-12);
}

TEST(TrajectoryError, ResamplingSmoothPath)
{
    auto curve = [](double s) { return Vec2(s, std::sin(2 * std::numbers::pi * s)); };
    const int n = 2001;
    std::vector<Vec2> fine, coarse;
    for (int i = 0; i < 2 * n - 1; ++i) fine.push_back(curve(double(i) / double(2 * n - 2)));
    for (int i = 0; i < n; ++i) coarse.push_back(curve(double(i) / double(n - 1)));
    const auto up = resample_linear(coarse, fine.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < fine.size(); ++i) worst = std::max(worst, (up[i] - fine[i]).norm());
    // Linear interpolation bound h^2 max|f''| / 8.
    const double h = 1.0 / double(n - 1);
    EXPECT_LE(worst, h * h * 4 * std::numbers::pi * std::numbers::pi / 8 + 1e-12);
    EXPECT_GT(worst, 0.5 * h * h * 4 * std::numbers::pi * std::numbers::pi / 8);
}

TEST(Fme, ClosedForms)
{
    Mapping c;
    c.setRandom();
    EXPECT_EQ(forward_modeling_error(c, c), 0.0);
    EXPECT_DOUBLE_EQ(forward_modeling_error(c, Mapping::Zero()), 1.0);
    EXPECT_DOUBLE_EQ(forward_modeling_error(c, Mapping(2 * c)), 1.0);
    EXPECT_THROW(forward_modeling_error(Mapping::Zero(), c), std::invalid_argument);
    EXPECT_THROW(forward_modeling_error(c, Eigen::MatrixXd::Zero(3, 3)), std::invalid_argument);
}
