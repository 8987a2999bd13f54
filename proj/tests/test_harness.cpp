#include "hml/harness.hpp"
#include "hml/io.hpp"
#include "hml/log.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

using namespace hml;

namespace {

ExperimentSpec small_spec()
{
    ExperimentSpec s = scenario_spec("fig2b", Preset::kDesk);
    s.arms = {Arm{CurriculumKind::kRandom}, Arm{CurriculumKind::kHeuristic}, Arm{CurriculumKind::kSnmpc, 2, 0.2}};
    s.n_mc = 2;
    s.n_blocks = 1;
    s.trials_per_block = 4;
    s.curriculum.n_rollouts = 2;
    s.filter.n_particles = 40;
    return s;
}

std::filesystem::path temp_dir(const std::string& name)
{
    const auto d = std::filesystem::temp_directory_path() / ("hml_test_" + name);
    std::filesystem::remove_all(d);
    return d;
}

}  // namespace

TEST(Harness, RowsAndDecisions)
{
    ExperimentSpec s = small_spec();
    const ExperimentResult r = run_experiment(s);
    ASSERT_EQ(r.runs.size(), 6u);
    EXPECT_TRUE(r.complete());
    for (const auto& m : r.runs) {
        ASSERT_EQ(m.rows.size(), 4u);
        for (std::size_t k = 0; k < m.rows.size(); ++k) {
            EXPECT_EQ(m.rows[k].trial, int(k) + 1);
            EXPECT_GE(m.rows[k].fme_true, 0.0);
            EXPECT_GE(m.rows[k].fme_est, 0.0);
        }
        if (m.arm.rfind("snmpc", 0) == 0) {
            // The first trial is drawn, not planned.
            ASSERT_EQ(m.decisions.size(), m.rows.size());
            EXPECT_TRUE(m.decisions[0].q.empty());
            for (std::size_t i = 1; i < m.decisions.size(); ++i) {
                EXPECT_EQ(m.decisions[i].q.size(), s.game.targets.size() - 1);
                EXPECT_EQ(m.decisions[i].chosen, m.rows[i].target);
            }
        }
        EXPECT_EQ(m.spec_hash, r.spec_hash);
    }
    // Common random numbers: the first trial is shared by every arm.
    for (std::size_t i = 1; i < 3; ++i) EXPECT_EQ(r.runs[0].rows[0].target, r.runs[i].rows[0].target);
}

TEST(Harness, WorkerCountDoesNotChangeResults)
{
    ExperimentSpec s = small_spec();
    const ExperimentResult a = run_experiment(s);
    s.workers = 3;
    const ExperimentResult b = run_experiment(s);
    ASSERT_EQ(a.runs.size(), b.runs.size());
    for (std::size_t i = 0; i < a.runs.size(); ++i) {
        ASSERT_EQ(a.runs[i].rows.size(), b.runs[i].rows.size());
        for (std::size_t k = 0; k < a.runs[i].rows.size(); ++k) {
            EXPECT_EQ(a.runs[i].rows[k].target, b.runs[i].rows[k].target);
            EXPECT_EQ(a.runs[i].rows[k].fme_true, b.runs[i].rows[k].fme_true);
            EXPECT_EQ(a.runs[i].rows[k].fme_est, b.runs[i].rows[k].fme_est);
            EXPECT_EQ(a.runs[i].rows[k].re, b.runs[i].rows[k].re);
        }
    }
    EXPECT_EQ(a.spec_hash, b.spec_hash);
}

TEST(Harness, FailedRunIsFlagged)
{
    ExperimentSpec s = small_spec();
    s.arms = {Arm{CurriculumKind::kRandom}};
    s.n_mc = 1;
    s.params.eta = 1e5;
    s.w0_perturbation = 10.0;
    const LogSink previous = set_log_sink([](std::string_view) {});
    const ExperimentResult r = run_experiment(s);
    set_log_sink(previous);
    ASSERT_EQ(r.runs.size(), 1u);
    EXPECT_FALSE(r.complete());
    EXPECT_FALSE(r.runs[0].error.empty());
}

TEST(Harness, TrialsToThreshold)
{
    RunManifest m;
    for (int k = 1; k <= 5; ++k) m.rows.push_back({k, 0, 0, 0, 0.5 - 0.1 * k, 0.45 - 0.1 * k, true, 0});
    EXPECT_EQ(m.trials_to_threshold(0.2), 3);
    EXPECT_EQ(m.trials_to_threshold(0.2, false), 3);
    EXPECT_EQ(m.trials_to_threshold(0.1), 4);
    EXPECT_EQ(m.trials_to_threshold(-1.0), 6);
}

TEST(Harness, SeriesStatsHalfWidth)
{
    RunManifest a, b, c;
    a.rows = {{1, 0, 1.0}, {2, 0, 2.0}};
    b.rows = {{1, 0, 3.0}, {2, 0, 2.0}};
    c.rows = {{1, 0, 5.0}};
    const SeriesStats s = series_stats({&a, &b, &c}, &TrialRow::re);
    ASSERT_EQ(s.mean.size(), 2u);
    EXPECT_DOUBLE_EQ(s.mean[0], 3.0);
    EXPECT_NEAR(s.half_width[0], 1.96 * 2.0 / std::sqrt(3.0), 1e-12);
    EXPECT_DOUBLE_EQ(s.mean[1], 2.0);
    EXPECT_EQ(s.half_width[1], 0.0);
    const SeriesStats one = series_stats({&c}, &TrialRow::re);
    EXPECT_EQ(one.half_width[0], 0.0);
}

TEST(Harness, CsvRoundTrip)
{
    const ExperimentResult r = run_experiment(small_spec());
    const auto dir = temp_dir("csv");
    emit_outputs(r, dir);
    for (const char* f : {"manifest.json", "runs.csv", "summary.csv", "decisions.csv", "fme.svg", "random.csv"}) {
        EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
    }
    const auto back = read_runs_csv(dir / "runs.csv");
    ASSERT_EQ(back.size(), r.runs.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
        EXPECT_EQ(back[i].arm, r.runs[i].arm);
        EXPECT_EQ(back[i].run, r.runs[i].run);
        ASSERT_EQ(back[i].rows.size(), r.runs[i].rows.size());
        for (std::size_t k = 0; k < back[i].rows.size(); ++k) {
            EXPECT_EQ(back[i].rows[k].fme_est, r.runs[i].rows[k].fme_est);
            EXPECT_EQ(back[i].rows[k].re, r.runs[i].rows[k].re);
            EXPECT_EQ(back[i].rows[k].target, r.runs[i].rows[k].target);
        }
    }
    const json manifest = read_json(dir / "manifest.json");
    EXPECT_EQ(manifest.at("spec_hash").get<std::string>(), r.spec_hash);
    EXPECT_TRUE(manifest.at("complete").get<bool>());
    std::filesystem::remove_all(dir);
}

TEST(Spec, HashIgnoresKeyOrderAndWorkers)
{
    const ExperimentSpec base = small_spec();
    const json a = json::parse(R"({"seed": 7, "n_mc": 3, "workers": 1})");
    const json b = json::parse(R"({"workers": 4, "n_mc": 3, "seed": 7})");
    EXPECT_EQ(spec_hash(parse_spec(a, base)), spec_hash(parse_spec(b, base)));
    const json c = json::parse(R"({"seed": 8, "n_mc": 3})");
    EXPECT_NE(spec_hash(parse_spec(a, base)), spec_hash(parse_spec(c, base)));
}

TEST(Spec, JsonRoundTrip)
{
    const ExperimentSpec s = scenario_spec("fig6bc", Preset::kPaper);
    const ExperimentSpec back = parse_spec(json(s), ExperimentSpec{});
    EXPECT_EQ(json(back), json(s));
    EXPECT_EQ(spec_hash(back), spec_hash(s));
}

TEST(Spec, RejectsBadInput)
{
    const ExperimentSpec base = small_spec();
    EXPECT_THROW(parse_spec(json::parse(R"({"n_mcc": 3})"), base), std::exception);
    EXPECT_THROW(parse_spec(json::parse(R"({"n_mc": "three"})"), base), std::exception);
    EXPECT_THROW(parse_spec(json::parse(R"({"params": {"eta": 0.5, "bogus": 1}})"), base), std::exception);
    EXPECT_THROW(scenario_spec("fig9", Preset::kDesk), std::invalid_argument);
    ExperimentSpec bad = base;
    bad.n_mc = 0;
    EXPECT_THROW(bad.validate(), std::invalid_argument);
}

TEST(Spec, BuiltInScenariosValidate)
{
    for (const auto& id : scenario_ids()) {
        for (Preset p : {Preset::kDesk, Preset::kPaper}) EXPECT_NO_THROW(scenario_spec(id, p).validate()) << id;
    }
}

TEST(Spec, ModelBScalesParameters)
{
    const ModelParams a;
    const ModelParams b = ModelBPreset{}.apply(a);
    EXPECT_DOUBLE_EQ(b.eta, 1.5 * a.eta);
    EXPECT_DOUBLE_EQ(b.k_p, 0.5 * a.k_p);
    EXPECT_DOUBLE_EQ(b.gamma, 5.0 * a.gamma);
    EXPECT_EQ(b.mu, a.mu);
}

TEST(Io, DefaultParamsDocument)
{
    const ModelParams p = load_params(HML_DATA_DIR "/default_params.json");
    EXPECT_EQ(json(p), json(ModelParams{}));
}

TEST(Io, FitBoundsInParameterUnits)
{
    GaConfig g = GaConfig::desk();
    const json j = json(g);
    EXPECT_DOUBLE_EQ(j.at("lower")[0].get<double>(), 1e-6);
    EXPECT_DOUBLE_EQ(j.at("upper")[0].get<double>(), 1e-2);
    json k = j;
    k["lower"][0] = 1e-5;
    from_json(k, g);
    EXPECT_NEAR(g.bounds.lower(0), -5.0, 1e-12);
    k["lower"][0] = 0.0;
    EXPECT_THROW(from_json(k, g), std::invalid_argument);
}
