#include "hml/harness.hpp"

#include "hml/io.hpp"
#include "hml/log.hpp"
#include "hml/parallel.hpp"

#include <boost/version.hpp>

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

namespace hml {

std::string Arm::label() const
{
    std::ostringstream os;
    switch (kind) {
    case CurriculumKind::kRandom: os << "random"; break;
    case CurriculumKind::kHeuristic: os << "heuristic"; break;
    case CurriculumKind::kSnmpc: os << "snmpc_P" << horizon << "_tau" << tau; break;
    }
    if (mismatched) os << "_B";
    return os.str();
}

ModelParams ModelBPreset::apply(const ModelParams& a) const
{
    ModelParams b = a;
    b.eta *= eta_factor;
    b.k_p *= k_p_factor;
    b.gamma *= gamma_factor;
    return b;
}

void ExperimentSpec::validate() const
{
    if (n_mc < 1) throw std::invalid_argument("spec: n_mc must be >= 1");
    if (n_blocks < 1 || trials_per_block < 1) throw std::invalid_argument("spec: blocks and trials must be >= 1");
    for (const Arm& a : arms) {
        if (a.horizon < 1) throw std::invalid_argument("spec: horizons must be >= 1");
        if (!(a.tau >= 0)) throw std::invalid_argument("spec: tau must be >= 0");
    }
    params.validate();
    model_b.apply(params).validate();
    curriculum.validate();
    filter.validate();
    game.validate();
    if (game.targets.size() < 2) throw std::invalid_argument("spec: need at least two targets");
    if (!(w0_perturbation >= 0)) throw std::invalid_argument("spec: w0_perturbation must be >= 0");
    if (calibration_postures < kJoints + 1) throw std::invalid_argument("spec: calibration_postures must be >= 21");
    if (bench_runs < 1 || fit_reference_trials < 1) throw std::invalid_argument("spec: bench/fit sizes must be >= 1");
    ga.validate();
    const auto& ids = scenario_ids();
    if (std::find(ids.begin(), ids.end(), scenario) == ids.end()) {
        throw std::invalid_argument("unknown scenario '" + scenario + "'");
    }
}

const std::vector<std::string>& scenario_ids()
{
    static const std::vector<std::string> ids{"fig2a", "fig2b", "fig6a", "fig6bc", "filters", "ucm", "fit"};
    return ids;
}

ExperimentSpec scenario_spec(const std::string& scenario, Preset preset)
{
    ExperimentSpec s;
    s.scenario = scenario;
    const bool desk = preset == Preset::kDesk;
    const Arm random{CurriculumKind::kRandom}, heuristic{CurriculumKind::kHeuristic};
    const auto snmpc = [](int p, double tau = 0.2, bool b = false) { return Arm{CurriculumKind::kSnmpc, p, tau, b}; };
    if (desk) {
        s.n_mc = 3;
        s.n_blocks = 2;
    }
    if (scenario == "fig2a") {
        s.arms = {snmpc(4)};
    } else if (scenario == "fig2b") {
        s.arms = {random, heuristic, snmpc(3), snmpc(4), snmpc(6)};
    } else if (scenario == "fig6a") {
        for (bool b : {false, true}) {
            for (int p : {2, 4, 6}) s.arms.push_back(snmpc(p, 0.2, b));
        }
    } else if (scenario == "fig6bc") {
        for (bool b : {false, true}) {
            for (double tau : {0.0, 0.03, 0.2, 1.0}) s.arms.push_back(snmpc(4, tau, b));
        }
    } else if (scenario == "ucm") {
        s.arms = {random, heuristic, snmpc(4)};
        s.n_blocks = desk ? 6 : 8;
        if (desk) s.trials_per_block = 30;
    } else if (scenario == "filters") {
        s.bench_runs = desk ? 20 : 100;
    } else if (scenario == "fit") {
        s.ga = desk ? GaConfig::desk() : GaConfig::paper();
        s.fit_reference_trials = desk ? 20 : 480;
    } else {
        throw std::invalid_argument("unknown scenario '" + scenario + "'");
    }
    return s;
}

bool ExperimentResult::complete() const
{
    for (const auto& r : runs) {
        if (!r.complete) return false;
    }
    return true;
}

int RunManifest::trials_to_threshold(double threshold, bool estimated) const
{
    for (const TrialRow& r : rows) {
        if ((estimated ? r.fme_est : r.fme_true) <= threshold) return r.trial;
    }
    return static_cast<int>(rows.size()) + 1;
}

std::string spec_hash(const ExperimentSpec& spec)
{
    json j = spec;
    j.erase("workers");
    const std::string text = j.dump();
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

std::string environment_fingerprint()
{
    std::ostringstream os;
    os << "compiler=" << __VERSION__ << ";eigen=" << EIGEN_WORLD_VERSION << '.' << EIGEN_MAJOR_VERSION << '.'
       << EIGEN_MINOR_VERSION << ";boost=" << BOOST_VERSION << ";cxx=" << __cplusplus;
    return os.str();
}

SynergySystem run_system(const ExperimentSpec& spec, std::size_t mc)
{
    return synthesize_system(derive_seed(spec.seed, {mc, 0}), spec.calibration_postures);
}

namespace {

std::uint64_t label_hash(const std::string& s)
{
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

TargetId centre_target(const GameConfig& game, const Vec2& centre)
{
    TargetId best = 0;
    for (TargetId t = 1; t < game.targets.size(); ++t) {
        if ((game.targets[t] - centre).norm() < (game.targets[best] - centre).norm()) best = t;
    }
    return best;
}

}  // namespace

RunManifest run_arm(const ExperimentSpec& spec, std::size_t mc, const Arm& arm, bool keep_records)
{
    RunManifest m;
    m.spec_hash = spec_hash(spec);
    m.seed = spec.seed;
    m.run = mc;
    m.arm = arm.label();
    m.environment = environment_fingerprint();

    const SynergySystem sys = run_system(spec, mc);
    Rng init_rng(derive_seed(spec.seed, {mc, 1}));
    LearnerState learner = initial_learner_state(sys, init_rng, spec.w0_perturbation);
    Rng learner_rng(derive_seed(spec.seed, {mc, 2}));
    Rng policy_rng(derive_seed(spec.seed, {mc, 3, label_hash(m.arm)}));
    Rng pf_rng(derive_seed(spec.seed, {mc, 4}));

    const ModelParams& learner_params = spec.params;
    ModelParams model_params = arm.mismatched ? spec.model_b.apply(spec.params) : spec.params;
    model_params.scheme = spec.model_scheme;
    const GameConfig& game = spec.game;

    FilterConfig fcfg = spec.filter;
    // The prior cloud has the spread of the learner's own initialisation.
    fcfg.init_w_spread = spec.filter_init_w_spread >= 0 ? spec.filter_init_w_spread : spec.w0_perturbation;
    fcfg.sample_period = game.dt();
    ParticleEnsemble ensemble = make_ensemble(prior_learner_state(sys), fcfg, pf_rng);

    CurriculumConfig cfg = spec.curriculum;
    cfg.horizon = arm.horizon;
    cfg.tau = arm.tau;
    const PlanningContext ctx{sys, model_params, game, cfg};
    PairStats stats(game.targets.size(), cfg.heuristic_window);

    TargetId current = centre_target(game, sys.center());
    std::optional<Vec2> from;
    double t = 0.0;
    try {
        for (int k = 1; k <= spec.n_trials(); ++k) {
            const auto wall0 = std::chrono::steady_clock::now();
            TargetId next = current;
            if (k == 1) {
                // Shared by every arm of this run.
                Decision d{k, {}, 0, cfg.tau, derive_seed(spec.seed, {mc, 5})};
                Rng first(d.seed);
                next = d.chosen = first.index(game.targets.size());
                if (arm.kind == CurriculumKind::kSnmpc) m.decisions.push_back(std::move(d));
            } else {
                switch (arm.kind) {
                case CurriculumKind::kRandom:
                    next = random_next(current, game.targets.size(), cfg.admissible_rule, policy_rng);
                    break;
                case CurriculumKind::kHeuristic: next = heuristic_next(stats, current, cfg.admissible_rule); break;
                case CurriculumKind::kSnmpc: {
                    Decision d{k, {}, 0, cfg.tau, policy_rng.next_seed()};
                    Rng rng(d.seed);
                    std::vector<LearnerState> starts;
                    if (spec.planner_state == PlannerState::kOracle) {
                        starts.push_back(learner);
                    } else if (spec.ensemble_rollouts) {
                        for (std::size_t i : systematic_resample(ensemble.weights, rng)) {
                            if (starts.size() == static_cast<std::size_t>(cfg.n_rollouts)) break;
                            starts.push_back(ensemble.particles[i]);
                        }
                    } else {
                        starts.push_back(pf_mean_state(ensemble));
                    }
                    d.q = snmpc_q_values(starts, current, ctx, rng);
                    std::vector<double> values;
                    for (const QValue& q : d.q) values.push_back(q.value);
                    d.chosen = d.q[softmin_sample(values, cfg.tau, rng)].target;
                    next = d.chosen;
                    m.decisions.push_back(std::move(d));
                    break;
                }
            }
            }

            TrialOutcome o = integrate_trial(learner, game.targets[next], sys, learner_params, game, learner_rng, t, from);
            const std::vector<Vec2> path = o.record.cursor_path();
            const TrialMetrics met = trial_metrics(path, game.targets[next], game.dt(), game.trial_cutoff);
            stats.record(current, next, met.re, met.sot);
            for (const TrialSample& s : o.record.samples) {
                ensemble = pf_step(std::move(ensemble), {s.x, s.q}, game.targets[next], sys, model_params, fcfg, pf_rng);
            }
            learner = o.end;
            t = o.record.samples.back().t;
            from = game.targets[next];
            current = next;

            TrialRow row;
            row.trial = k;
            row.target = next;
            row.re = met.re;
            row.sot = met.sot;
            row.fme_true = forward_modeling_error(sys.c, learner.w_hat * sys.phi);
            row.fme_est = forward_modeling_error(sys.c, pf_estimate(ensemble, sys).c_hat);
            row.captured = o.record.captured;
            row.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();
            m.rows.push_back(row);
            if (keep_records) m.records.push_back(std::move(o.record));
        }
    } catch (const std::exception& e) {
        m.complete = false;
        m.error = e.what();
        log_warning("run " + std::to_string(mc) + " arm " + m.arm + " aborted: " + e.what());
    }
    return m;
}

void analyze_ucm(ExperimentResult& result)
{
    const ExperimentSpec& spec = result.spec;
    std::vector<RunUcm> tagged;
    for (RunManifest& run : result.runs) {
        if (run.records.empty()) continue;
        const SynergySystem sys = run_system(spec, run.run);
        // (phase, from, to) -> trials
        std::map<std::tuple<int, TargetId, TargetId>, std::vector<TrialRecord>> groups;
        TargetId from = centre_target(spec.game, sys.center());
        for (std::size_t i = 0; i < run.records.size(); ++i) {
            const int block = static_cast<int>(i) / spec.trials_per_block + 1;
            const TargetId to = run.rows[i].target;
            if (const int phase = phase_of_block(block); phase != 0) {
                groups[{phase, from, to}].push_back(std::move(run.records[i]));
            }
            from = to;
        }
        run.records.clear();
        for (auto& [key, records] : groups) {
            if (records.size() < 2) continue;
            const auto trials = time_normalize(records);
            UcmSeries s = variance_decompose(trials, sys.c);
            s.group = run.arm;
            s.phase = std::get<0>(key);
            s.pair = std::to_string(std::get<1>(key)) + "-" + std::to_string(std::get<2>(key));
            tagged.push_back({run.run, s});
        }
    }
    result.ucm_phases = phase_aggregate(tagged, result.spec.ucm_phases);
    for (auto& t : tagged) result.ucm_series.push_back(std::move(t.series));
}

ExperimentResult run_experiment(const ExperimentSpec& spec)
{
    spec.validate();
    ExperimentResult result{spec, spec_hash(spec), {}, {}, {}, {}, {}};

    if (spec.scenario == "filters") {
        const SynergySystem sys = run_system(spec, 0);
        FilterBenchOptions opts;
        opts.n_mc = spec.bench_runs;
        opts.perturb_scale = spec.bench_perturb;
        opts.filter = spec.filter;
        opts.game = spec.game;
        Rng rng(derive_seed(spec.seed, {0, 5}));
        result.bench = filter_consistency_bench(sys, spec.params, opts, rng);
        return result;
    }
    if (spec.scenario == "fit") {
        const SynergySystem sys = run_system(spec, 0);
        Rng rng(derive_seed(spec.seed, {0, 6}));
        const LearnerState init = prior_learner_state(sys);
        std::vector<TargetId> targets;
        TargetId current = centre_target(spec.game, sys.center());
        for (int k = 0; k < spec.fit_reference_trials; ++k) {
            current = random_next(current, spec.game.targets.size(), spec.curriculum.admissible_rule, rng);
            targets.push_back(current);
        }
        const ReferenceData ref = make_reference(spec.params.noiseless(), sys, spec.game, init, targets, rng);
        GaConfig ga = spec.ga;
        ga.workers = spec.workers;
        result.fit = run_fit(ref, sys, spec.game, ga, derive_seed(spec.seed, {0, 7}), spec.params);
        return result;
    }

    const bool keep = spec.scenario == "ucm";
    struct Job {
        std::size_t mc;
        Arm arm;
    };
    std::vector<Job> jobs;
    for (std::size_t mc = 0; mc < static_cast<std::size_t>(spec.n_mc); ++mc) {
        for (const Arm& a : spec.arms) jobs.push_back({mc, a});
    }
    result.runs.resize(jobs.size());
    parallel_for(jobs.size(), spec.workers,
                 [&](std::size_t i) { result.runs[i] = run_arm(spec, jobs[i].mc, jobs[i].arm, keep); });
    if (keep) analyze_ucm(result);
    return result;
}

SeriesStats series_stats(const std::vector<const RunManifest*>& runs, double TrialRow::*field)
{
    SeriesStats s;
    std::size_t n_rows = 0;
    for (const auto* r : runs) n_rows = std::max(n_rows, r->rows.size());
    for (std::size_t k = 0; k < n_rows; ++k) {
        double sum = 0.0, sq = 0.0;
        std::size_t n = 0;
        for (const auto* r : runs) {
            if (k < r->rows.size()) {
                sum += r->rows[k].*field;
                ++n;
            }
        }
        const double mean = sum / double(n);
        for (const auto* r : runs) {
            if (k < r->rows.size()) sq += (r->rows[k].*field - mean) * (r->rows[k].*field - mean);
        }
        s.mean.push_back(mean);
        s.half_width.push_back(n > 1 ? 1.96 * std::sqrt(sq / double(n - 1)) / std::sqrt(double(n)) : 0.0);
    }
    return s;
}

namespace {

std::ofstream open_out(const std::filesystem::path& file)
{
    std::ofstream out(file);
    if (!out) throw std::runtime_error("cannot write " + file.string());
    out << std::setprecision(17);
    return out;
}

std::map<std::string, std::vector<const RunManifest*>> by_arm(const ExperimentResult& r)
{
    std::map<std::string, std::vector<const RunManifest*>> out;
    for (const auto& run : r.runs) out[run.arm].push_back(&run);
    return out;
}

void write_rows(std::ostream& os, const RunManifest& m)
{
    for (const TrialRow& r : m.rows) {
        os << m.arm << ',' << m.run << ',' << r.trial << ',' << r.target << ',' << r.re << ',' << r.sot << ','
           << r.fme_true << ',' << r.fme_est << ',' << int(r.captured) << ',' << r.wall_time << '\n';
    }
}

constexpr const char* kRowHeader = "arm,run,trial,target,re,sot,fme_true,fme_est,captured,wall_time\n";

void write_svg(const std::filesystem::path& file, const std::string& title,
               const std::map<std::string, SeriesStats>& series)
{
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#7f7f7f"};
    const double w = 720, h = 420, left = 60, right = 190, top = 40, bottom = 50;
    std::size_t n = 0;
    double y_max = 0.0;
    for (const auto& [label, s] : series) {
        n = std::max(n, s.mean.size());
        for (std::size_t k = 0; k < s.mean.size(); ++k) y_max = std::max(y_max, s.mean[k] + s.half_width[k]);
    }
    if (n == 0) return;
    y_max = y_max > 0 ? y_max * 1.05 : 1.0;
    const auto px = [&](std::size_t k) { return left + (w - left - right) * (n > 1 ? double(k) / double(n - 1) : 0.0); };
    const auto py = [&](double v) { return top + (h - top - bottom) * (1.0 - v / y_max); };

    std::ofstream out = open_out(file);
    out << std::setprecision(6);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << "<text x=\"" << left << "\" y=\"24\" font-size=\"16\" font-family=\"sans-serif\">" << title << "</text>\n"
        << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << w - left - right << "\" height=\""
        << h - top - bottom << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double v = y_max * i / 4.0;
        out << "<text x=\"" << left - 6 << "\" y=\"" << py(v) + 4 << "\" font-size=\"11\" text-anchor=\"end\">" << v
            << "</text>\n";
    }
    out << "<text x=\"" << (w - right + left) / 2 << "\" y=\"" << h - 12
        << "\" font-size=\"12\" text-anchor=\"middle\">trial (1.." << n << ")</text>\n";
    std::size_t c = 0;
    for (const auto& [label, s] : series) {
        const char* color = colors[c % 8];
        out << "<polygon fill=\"" << color << "\" fill-opacity=\"0.2\" stroke=\"none\" points=\"";
        for (std::size_t k = 0; k < s.mean.size(); ++k) out << px(k) << ',' << py(s.mean[k] + s.half_width[k]) << ' ';
        for (std::size_t k = s.mean.size(); k-- > 0;) out << px(k) << ',' << py(s.mean[k] - s.half_width[k]) << ' ';
        out << "\"/>\n<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t k = 0; k < s.mean.size(); ++k) out << px(k) << ',' << py(s.mean[k]) << ' ';
        out << "\"/>\n<text x=\"" << w - right + 10 << "\" y=\"" << top + 16 * (c + 1) << "\" font-size=\"12\" fill=\""
            << color << "\">" << label << "</text>\n";
        ++c;
    }
    out << "</svg>\n";
}

}  // namespace

void emit_outputs(const ExperimentResult& result, const std::filesystem::path& dir)
{
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir)) throw std::runtime_error("cannot create " + dir.string());

    json manifest{{"spec", result.spec},
                  {"spec_hash", result.spec_hash},
                  {"environment", environment_fingerprint()},
                  {"complete", result.complete()},
                  {"runs", result.runs}};

    if (!result.runs.empty()) {
        auto all = open_out(dir / "runs.csv");
        all << kRowHeader;
        for (const auto& run : result.runs) write_rows(all, run);

        auto dec = open_out(dir / "decisions.csv");
        dec << "arm,run,trial,chosen,tau,seed,q\n";
        for (const auto& run : result.runs) {
            for (const Decision& d : run.decisions) {
                dec << run.arm << ',' << run.run << ',' << d.trial << ',' << d.chosen << ',' << d.tau << ',' << d.seed
                    << ',';
                for (std::size_t i = 0; i < d.q.size(); ++i) dec << (i ? ";" : "") << d.q[i].target << ':' << d.q[i].value;
                dec << '\n';
            }
        }

        auto summary = open_out(dir / "summary.csv");
        summary << "arm,trial,n_runs,fme_true_mean,fme_true_ci,fme_est_mean,fme_est_ci,sot_mean,sot_ci,re_mean,re_ci\n";
        std::map<std::string, SeriesStats> fme_plot, sot_plot;
        json thresholds = json::object();
        for (const auto& [arm, runs] : by_arm(result)) {
            auto per_arm = open_out(dir / (arm + ".csv"));
            per_arm << kRowHeader;
            for (const auto* r : runs) write_rows(per_arm, *r);

            const SeriesStats ft = series_stats(runs, &TrialRow::fme_true);
            const SeriesStats fe = series_stats(runs, &TrialRow::fme_est);
            const SeriesStats so = series_stats(runs, &TrialRow::sot);
            const SeriesStats re = series_stats(runs, &TrialRow::re);
            for (std::size_t k = 0; k < ft.mean.size(); ++k) {
                summary << arm << ',' << k + 1 << ',' << runs.size() << ',' << ft.mean[k] << ',' << ft.half_width[k]
                        << ',' << fe.mean[k] << ',' << fe.half_width[k] << ',' << so.mean[k] << ','
                        << so.half_width[k] << ',' << re.mean[k] << ',' << re.half_width[k] << '\n';
            }
            fme_plot[arm] = ft;
            fme_plot[arm + " (PF)"] = fe;
            sot_plot[arm] = so;
            std::vector<int> ttt;
            double mean = 0.0;
            for (const auto* r : runs) {
                ttt.push_back(r->trials_to_threshold(result.spec.fme_threshold));
                mean += ttt.back();
            }
            thresholds[arm] = {{"per_run", ttt}, {"mean", mean / double(ttt.size())}};
        }
        manifest["trials_to_threshold"] = thresholds;
        write_svg(dir / "fme.svg", "FME (mean, 95% CI)", fme_plot);
        write_svg(dir / "sot.svg", "SoT (mean, 95% CI)", sot_plot);
    }

    if (result.bench) {
        auto out = open_out(dir / "filters.csv");
        out << "run,ekf,ukf,pf\n";
        for (std::size_t i = 0; i < result.bench->pf.size(); ++i) {
            out << i << ',' << result.bench->ekf[i] << ',' << result.bench->ukf[i] << ',' << result.bench->pf[i] << '\n';
        }
        json b = json::object();
        for (const auto& [name, v] : {std::pair{"ekf", &result.bench->ekf}, std::pair{"ukf", &result.bench->ukf},
                                      std::pair{"pf", &result.bench->pf}}) {
            double mean = 0.0, sq = 0.0;
            for (double e : *v) mean += e;
            mean /= double(v->size());
            for (double e : *v) sq += (e - mean) * (e - mean);
            b[name] = {{"mean", mean}, {"std", v->size() > 1 ? std::sqrt(sq / double(v->size() - 1)) : 0.0}};
        }
        manifest["filters"] = b;
    }

    if (result.fit) {
        auto hist = open_out(dir / "fit_history.csv");
        hist << "restart,phase,generation,best_re,median_re,front_size\n";
        for (const auto& g : result.fit->history) {
            hist << g.restart << ',' << g.phase << ',' << g.generation << ',' << g.best_re << ',' << g.median_re << ','
                 << g.front_size << '\n';
        }
        auto front = open_out(dir / "fit_front.csv");
        front << "gamma,eta,mu,k_p,sigma_u,sigma_q,f_re,f_sot,f_te\n";
        for (const auto& ind : result.fit->front) {
            const ModelParams p = from_genes(ind.genes);
            front << p.gamma << ',' << p.eta << ',' << p.mu << ',' << p.k_p << ',' << p.sigma_u << ',' << p.sigma_q << ',';
            front << ind.objectives(0) << ',' << ind.objectives(1) << ',' << ind.objectives(2) << '\n';
        }
        write_json(dir / "fit_params.json", json(result.fit->selected));
        manifest["fit"] = {{"generation0_median_re", result.fit->generation0_median_re},
                           {"selected_objectives",
                            {result.fit->selected_individual.objectives(0), result.fit->selected_individual.objectives(1),
                             result.fit->selected_individual.objectives(2)}}};
    }

    if (!result.ucm_series.empty()) {
        auto out = open_out(dir / "ucm.csv");
        write_ucm_csv(out, result.ucm_series);
        auto ph = open_out(dir / "ucm_phases.csv");
        ph << "group,phase,mean_fraction,ci_half_width,n_runs\n";
        for (const auto& p : result.ucm_phases) {
            ph << p.group << ',' << p.phase << ',' << p.mean << ',' << p.ci_half_width << ',' << p.n_runs << '\n';
        }
    }
    write_json(dir / "manifest.json", manifest);
}

std::vector<RunManifest> read_runs_csv(const std::filesystem::path& file)
{
    std::ifstream in(file);
    if (!in) throw std::runtime_error("cannot open " + file.string());
    std::string line;
    std::getline(in, line);
    if (line + "\n" != kRowHeader) throw std::invalid_argument(file.string() + ": unexpected header");
    std::vector<RunManifest> out;
    while (std::getline(in, line)) {
        std::vector<std::string> f;
        std::stringstream ss(line);
        for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
        if (f.size() != 10) throw std::invalid_argument(file.string() + ": malformed row '" + line + "'");
        const std::size_t run = std::stoul(f[1]);
        if (out.empty() || out.back().arm != f[0] || out.back().run != run) {
            out.emplace_back();
            out.back().arm = f[0];
            out.back().run = run;
        }
        out.back().rows.push_back({std::stoi(f[2]), std::stoul(f[3]), std::stod(f[4]), std::stod(f[5]),
                                   std::stod(f[6]), std::stod(f[7]), f[8] == "1", std::stod(f[9])});
    }
    return out;
}

}  // namespace hml
