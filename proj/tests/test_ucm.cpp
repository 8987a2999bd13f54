#include "checks.hpp"

#include "hml/ucm.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace hml;

namespace {

TrialRecord record_from(const std::vector<JointVec>& qs)
{
    TrialRecord r;
    for (std::size_t i = 0; i < qs.size(); ++i) r.samples.push_back({0.01 * double(i), Vec2::Zero(), qs[i]});
    return r;
}

Mapping test_mapping()
{
    Rng rng(3);
    Mapping c;
    for (Eigen::Index i = 0; i < c.size(); ++i) c(i) = rng.normal();
    return c;
}

}  // namespace

TEST(TimeNormalize, IdentityOnUniformGrid)
{
    Rng rng(1);
    std::vector<JointVec> qs(kUcmTimePoints);
    for (auto& q : qs) {
        q.setZero();
        rng.add_normal(q, 1.0);
    }
    const auto out = time_normalize(std::vector<TrialRecord>{record_from(qs)});
    ASSERT_EQ(out.size(), 1u);
    for (std::size_t k = 0; k < kUcmTimePoints; ++k) EXPECT_EQ(out[0].row(static_cast<Eigen::Index>(k)).transpose(), qs[k]);
}

TEST(TimeNormalize, LinearSignalIsExact)
{
    const JointVec a = JointVec::LinSpaced(-1.0, 2.0), b = JointVec::Constant(0.3);
    std::vector<JointVec> qs;
    for (int i = 0; i < 137; ++i) qs.push_back(a + b * double(i) / 136.0);
    const auto out = time_normalize(std::vector<TrialRecord>{record_from(qs)});
    for (Eigen::Index k = 0; k < out[0].rows(); ++k) {
        const JointVec expected = a + b * double(k) / double(kUcmTimePoints - 1);
        EXPECT_LT((out[0].row(k).transpose() - expected).cwiseAbs().maxCoeff(), 1e-12);
    }
    EXPECT_THROW(time_normalize(std::vector<TrialRecord>{record_from({a})}), std::invalid_argument);
}

TEST(UcmBasis, OrthonormalComplement)
{
    const Mapping c = test_mapping();
    const UcmBasis b = ucm_basis(c);
    ASSERT_EQ(b.row.cols(), 2);
    ASSERT_EQ(b.null.cols(), kJoints - 2);
    EXPECT_LT((c * b.null).norm(), 1e-10);
    Eigen::MatrixXd all(kJoints, kJoints);
    all << b.row, b.null;
    EXPECT_LT((all.transpose() * all - Eigen::MatrixXd::Identity(kJoints, kJoints)).norm(), 1e-10);
}

TEST(UcmBasis, RankDeficientRejected)
{
    Mapping c = test_mapping();
    c.row(1) = 2 * c.row(0);
    EXPECT_THROW(ucm_basis(c), std::invalid_argument);
}

TEST(VarianceDecompose, NullSpaceOnly)
{
    const Mapping c = test_mapping();
    const UcmBasis b = ucm_basis(c);
    Rng rng(2);
    std::vector<NormalizedTrial> trials(30, NormalizedTrial(4, kJoints));
    for (auto& t : trials) {
        for (Eigen::Index k = 0; k < 4; ++k) {
            Eigen::VectorXd coef(kJoints - 2);
            for (Eigen::Index i = 0; i < coef.size(); ++i) coef(i) = rng.normal();
            t.row(k) = (b.null * coef).transpose();
        }
    }
    for (double f : variance_decompose(trials, c).fraction) EXPECT_NEAR(f, 1.0, 1e-12);
}

TEST(VarianceDecompose, TaskSpaceOnly)
{
    const Mapping c = test_mapping();
    Rng rng(2);
    std::vector<NormalizedTrial> trials(30, NormalizedTrial(4, kJoints));
    for (auto& t : trials) {
        for (Eigen::Index k = 0; k < 4; ++k) t.row(k) = (c.transpose() * Vec2(rng.normal(), rng.normal())).transpose();
    }
    for (double f : variance_decompose(trials, c).fraction) EXPECT_NEAR(f, 0.0, 1e-12);
}

TEST(VarianceDecompose, Properties)
{
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        auto r = checks::ucm_additivity(seed);
        EXPECT_TRUE(r.ok) << r.detail;
        r = checks::ucm_isotropic(seed);
        EXPECT_TRUE(r.ok) << r.detail;
    }
}

TEST(VarianceDecompose, NeedsTwoTrials)
{
    std::vector<NormalizedTrial> one(1, NormalizedTrial::Zero(3, kJoints));
    EXPECT_THROW(variance_decompose(one, test_mapping()), std::invalid_argument);
}

TEST(PhaseAggregate, Blocks)
{
    EXPECT_EQ(phase_of_block(1), 1);
    EXPECT_EQ(phase_of_block(3), 1);
    EXPECT_EQ(phase_of_block(4), 2);
    EXPECT_EQ(phase_of_block(6), 2);
    EXPECT_EQ(phase_of_block(7), 0);
}

namespace {

RunUcm run_with(std::size_t run, const std::string& group, int phase, double fraction)
{
    UcmSeries s;
    s.group = group;
    s.phase = phase;
    s.fraction = {fraction, fraction};
    return {run, s};
}

}  // namespace

TEST(PhaseAggregate, SingleRunIsPoint)
{
    const std::vector<RunUcm> r{run_with(0, "g", 1, 0.6)};
    const std::vector<int> phases{1};
    const auto s = phase_aggregate(r, phases);
    ASSERT_EQ(s.size(), 1u);
    EXPECT_DOUBLE_EQ(s[0].mean, 0.6);
    EXPECT_EQ(s[0].ci_half_width, 0.0);
}

TEST(PhaseAggregate, DuplicatedRunsZeroWidth)
{
    const std::vector<RunUcm> r{run_with(0, "g", 1, 0.6), run_with(1, "g", 1, 0.6)};
    const std::vector<int> phases{1};
    const auto s = phase_aggregate(r, phases);
    EXPECT_DOUBLE_EQ(s[0].mean, 0.6);
    EXPECT_NEAR(s[0].ci_half_width, 0.0, 1e-15);
}

TEST(PhaseAggregate, TwoRunsAverage)
{
    // Run 0 has two pairs (0.4, 0.8) -> 0.6; run 1 -> 0.7.
    const std::vector<RunUcm> r{run_with(0, "g", 1, 0.4), run_with(0, "g", 1, 0.8), run_with(1, "g", 1, 0.7)};
    const std::vector<int> phases{1};
    const auto s = phase_aggregate(r, phases);
    EXPECT_DOUBLE_EQ(s[0].mean, 0.65);
    const double sd = std::sqrt(2 * 0.05 * 0.05);
    EXPECT_NEAR(s[0].ci_half_width, 1.96 * sd / std::sqrt(2.0), 1e-12);
    EXPECT_EQ(s[0].n_runs, 2u);
}

TEST(PhaseAggregate, MissingPhaseThrows)
{
    const std::vector<RunUcm> r{run_with(0, "g", 1, 0.4)};
    const std::vector<int> phases{1, 2};
    EXPECT_THROW(phase_aggregate(r, phases), std::invalid_argument);
}

TEST(UcmCsv, Header)
{
    UcmSeries s;
    s.group = "random";
    s.phase = 2;
    s.pair = "0-1";
    s.t_norm = {0.0};
    s.v_ucm = {1.0};
    s.v_ort = {2.0};
    s.fraction = {1.0 / 3.0};
    std::ostringstream os;
    write_ucm_csv(os, std::vector<UcmSeries>{s});
    EXPECT_EQ(os.str().substr(0, os.str().find('\n')), "group,phase,pair,t_norm,v_ucm,v_ort,fraction");
    EXPECT_NE(os.str().find("random,2,0-1,0,1,2,0.3333333333"), std::string::npos);
}
