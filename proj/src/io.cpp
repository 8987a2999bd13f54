#include "hml/io.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace hml {
namespace {

void check_keys(const json& j, std::initializer_list<const char*> keys, const char* where)
{
    if (!j.is_object()) throw std::invalid_argument(std::string(where) + ": expected an object");
    for (const auto& [k, v] : j.items()) {
        bool known = false;
        for (const char* key : keys) known = known || k == key;
        if (!known) throw std::invalid_argument(std::string(where) + ": unknown key '" + k + "'");
    }
}

template <typename T>
void read(const json& j, const char* key, T& out)
{
    if (auto it = j.find(key); it != j.end()) {
        try {
            out = it->get<T>();
        } catch (const json::exception& e) {
            throw std::invalid_argument(std::string("key '") + key + "': " + e.what());
        }
    }
}

const char* kind_name(CurriculumKind k)
{
    switch (k) {
    case CurriculumKind::kRandom: return "random";
    case CurriculumKind::kHeuristic: return "heuristic";
    case CurriculumKind::kSnmpc: return "snmpc";
    }
    return "?";
}

CurriculumKind kind_from(const std::string& s)
{
    if (s == "random") return CurriculumKind::kRandom;
    if (s == "heuristic") return CurriculumKind::kHeuristic;
    if (s == "snmpc") return CurriculumKind::kSnmpc;
    throw std::invalid_argument("unknown curriculum '" + s + "'");
}

const char* scheme_name(StepScheme s) { return s == StepScheme::kRungeKutta ? "rk4" : "euler"; }

StepScheme scheme_from(const std::string& s)
{
    if (s == "rk4") return StepScheme::kRungeKutta;
    if (s == "euler") return StepScheme::kEuler;
    throw std::invalid_argument("unknown integration scheme '" + s + "'");
}

}  // namespace

void to_json(json& j, const ModelParams& p)
{
    j = json{{"gamma", p.gamma}, {"eta", p.eta},         {"mu", p.mu}, {"k_p", p.k_p},
             {"sigma_u", p.sigma_u}, {"sigma_q", p.sigma_q}, {"a", p.a}, {"increment_scale", p.increment_scale},
             {"scheme", scheme_name(p.scheme)}};
}

void from_json(const json& j, ModelParams& p)
{
    check_keys(j, {"gamma", "eta", "mu", "k_p", "sigma_u", "sigma_q", "a", "increment_scale", "scheme"}, "params");
    read(j, "gamma", p.gamma);
    read(j, "eta", p.eta);
    read(j, "mu", p.mu);
    read(j, "k_p", p.k_p);
    read(j, "sigma_u", p.sigma_u);
    read(j, "sigma_q", p.sigma_q);
    read(j, "a", p.a);
    read(j, "increment_scale", p.increment_scale);
    if (auto it = j.find("scheme"); it != j.end()) p.scheme = scheme_from(it->get<std::string>());
    p.validate();
}

void to_json(json& j, const GameConfig& g)
{
    json targets = json::array();
    for (const Vec2& t : g.targets) targets.push_back({t.x(), t.y()});
    j = json{{"targets", targets},
             {"target_half_width", g.target_half_width},
             {"capture_variance_threshold", g.capture_variance_threshold},
             {"capture_window", g.capture_window},
             {"sample_rate", g.sample_rate},
             {"trial_cutoff", g.trial_cutoff},
             {"trial_max_duration", g.trial_max_duration}};
}

void from_json(const json& j, GameConfig& g)
{
    check_keys(j,
               {"targets", "target_half_width", "capture_variance_threshold", "capture_window", "sample_rate",
                "trial_cutoff", "trial_max_duration"},
               "game");
    if (auto it = j.find("targets"); it != j.end()) {
        g.targets.clear();
        for (const auto& t : *it) {
            if (!t.is_array() || t.size() != 2) throw std::invalid_argument("game.targets: expected [x, y] pairs");
            g.targets.emplace_back(t[0].get<double>(), t[1].get<double>());
        }
    }
    read(j, "target_half_width", g.target_half_width);
    read(j, "capture_variance_threshold", g.capture_variance_threshold);
    read(j, "capture_window", g.capture_window);
    read(j, "sample_rate", g.sample_rate);
    read(j, "trial_cutoff", g.trial_cutoff);
    read(j, "trial_max_duration", g.trial_max_duration);
    g.validate();
}

void to_json(json& j, const CurriculumConfig& c)
{
    j = json{{"beta_w", c.beta_w},
             {"beta_re", c.beta_re},
             {"beta_sot", c.beta_sot},
             {"beta_p", c.beta_p},
             {"horizon", c.horizon},
             {"tau", c.tau},
             {"n_rollouts", c.n_rollouts},
             {"admissible_rule",
              c.admissible_rule == AdmissibleRule::kExcludeCurrent ? "exclude-current" : "all-targets"},
             {"heuristic_window", c.heuristic_window}};
}

void from_json(const json& j, CurriculumConfig& c)
{
    check_keys(j,
               {"beta_w", "beta_re", "beta_sot", "beta_p", "horizon", "tau", "n_rollouts", "admissible_rule",
                "heuristic_window"},
               "curriculum");
    read(j, "beta_w", c.beta_w);
    read(j, "beta_re", c.beta_re);
    read(j, "beta_sot", c.beta_sot);
    read(j, "beta_p", c.beta_p);
    read(j, "horizon", c.horizon);
    read(j, "tau", c.tau);
    read(j, "n_rollouts", c.n_rollouts);
    read(j, "heuristic_window", c.heuristic_window);
    if (auto it = j.find("admissible_rule"); it != j.end()) {
        const auto s = it->get<std::string>();
        if (s == "exclude-current") {
            c.admissible_rule = AdmissibleRule::kExcludeCurrent;
        } else if (s == "all-targets") {
            c.admissible_rule = AdmissibleRule::kAllTargets;
        } else {
            throw std::invalid_argument("curriculum.admissible_rule: unknown value '" + s + "'");
        }
    }
    c.validate();
}

void to_json(json& j, const FilterConfig& f)
{
    j = json{{"n_particles", f.n_particles},
             {"likelihood_std_x", f.likelihood_std_x},
             {"likelihood_std_q", f.likelihood_std_q},
             {"resample_ess_fraction", f.resample_ess_fraction}};
}

void from_json(const json& j, FilterConfig& f)
{
    check_keys(j, {"n_particles", "likelihood_std_x", "likelihood_std_q", "resample_ess_fraction"}, "filter");
    read(j, "n_particles", f.n_particles);
    read(j, "likelihood_std_x", f.likelihood_std_x);
    read(j, "likelihood_std_q", f.likelihood_std_q);
    read(j, "resample_ess_fraction", f.resample_ess_fraction);
    f.validate();
}

void to_json(json& j, const GaPhase& g)
{
    j = json{{"population", g.population}, {"generations", g.generations}, {"sbx_prob", g.sbx_prob},
             {"sbx_eta", g.sbx_eta},       {"pm_prob", g.pm_prob},         {"pm_eta", g.pm_eta}};
}

void from_json(const json& j, GaPhase& g)
{
    check_keys(j, {"population", "generations", "sbx_prob", "sbx_eta", "pm_prob", "pm_eta"}, "ga phase");
    read(j, "population", g.population);
    read(j, "generations", g.generations);
    read(j, "sbx_prob", g.sbx_prob);
    read(j, "sbx_eta", g.sbx_eta);
    read(j, "pm_prob", g.pm_prob);
    read(j, "pm_eta", g.pm_eta);
}

// Bounds are stored in parameter units; the gamma gene is log10 gamma.
static std::vector<double> bound_values(const Genes& g)
{
    std::vector<double> v(g.begin(), g.end());
    v[0] = std::pow(10.0, v[0]);
    return v;
}

void to_json(json& j, const GaConfig& g)
{
    j = json{{"phase1", g.phase1},
             {"phase2", g.phase2},
             {"resample_every", g.resample_every},
             {"resample_count", g.resample_count},
             {"restarts", g.restarts},
             {"lower", bound_values(g.bounds.lower)},
             {"upper", bound_values(g.bounds.upper)}};
}

void from_json(const json& j, GaConfig& g)
{
    check_keys(j, {"phase1", "phase2", "resample_every", "resample_count", "restarts", "lower", "upper"}, "ga");
    if (auto it = j.find("phase1"); it != j.end()) from_json(*it, g.phase1);
    if (auto it = j.find("phase2"); it != j.end()) from_json(*it, g.phase2);
    read(j, "resample_every", g.resample_every);
    read(j, "resample_count", g.resample_count);
    read(j, "restarts", g.restarts);
    for (const char* key : {"lower", "upper"}) {
        if (auto it = j.find(key); it != j.end()) {
            auto v = it->get<std::vector<double>>();
            if (v.size() != kFitDim) throw std::invalid_argument(std::string("ga.") + key + ": expected 6 values");
            if (!(v[0] > 0)) throw std::invalid_argument(std::string("ga.") + key + ": gamma bound must be positive");
            v[0] = std::log10(v[0]);
            (std::string(key) == "lower" ? g.bounds.lower : g.bounds.upper) = Genes(v.data());
        }
    }
    g.validate();
}

void to_json(json& j, const Arm& a)
{
    j = json{{"curriculum", kind_name(a.kind)}, {"horizon", a.horizon}, {"tau", a.tau}, {"mismatched", a.mismatched}};
}

void from_json(const json& j, Arm& a)
{
    check_keys(j, {"curriculum", "horizon", "tau", "mismatched"}, "arm");
    if (auto it = j.find("curriculum"); it != j.end()) a.kind = kind_from(it->get<std::string>());
    read(j, "horizon", a.horizon);
    read(j, "tau", a.tau);
    read(j, "mismatched", a.mismatched);
}

void to_json(json& j, const ModelBPreset& m)
{
    j = json{{"eta_factor", m.eta_factor}, {"k_p_factor", m.k_p_factor}, {"gamma_factor", m.gamma_factor}};
}

void from_json(const json& j, ModelBPreset& m)
{
    check_keys(j, {"eta_factor", "k_p_factor", "gamma_factor"}, "model_b");
    read(j, "eta_factor", m.eta_factor);
    read(j, "k_p_factor", m.k_p_factor);
    read(j, "gamma_factor", m.gamma_factor);
}

void to_json(json& j, const ExperimentSpec& s)
{
    j = json{{"scenario", s.scenario},
             {"arms", s.arms},
             {"params", s.params},
             {"model_b", s.model_b},
             {"n_mc", s.n_mc},
             {"n_blocks", s.n_blocks},
             {"trials_per_block", s.trials_per_block},
             {"seed", s.seed},
             {"curriculum", s.curriculum},
             {"filter", s.filter},
             {"filter_init_w_spread", s.filter_init_w_spread},
             {"game", s.game},
             {"w0_perturbation", s.w0_perturbation},
             {"model_scheme", scheme_name(s.model_scheme)},
             {"calibration_postures", s.calibration_postures},
             {"planner_state", s.planner_state == PlannerState::kEstimated ? "estimated-state" : "oracle-state"},
             {"ensemble_rollouts", s.ensemble_rollouts},
             {"fme_threshold", s.fme_threshold},
             {"workers", s.workers},
             {"bench_runs", s.bench_runs},
             {"bench_perturb", s.bench_perturb},
             {"fit_reference_trials", s.fit_reference_trials},
             {"ga", s.ga},
             {"ucm_phases", s.ucm_phases}};
}

void from_json(const json& j, ExperimentSpec& s)
{
    check_keys(j,
               {"scenario", "arms", "params", "model_b", "n_mc", "n_blocks", "trials_per_block", "seed",
                "curriculum", "filter", "filter_init_w_spread", "game", "w0_perturbation", "model_scheme", "calibration_postures",
                "planner_state", "ensemble_rollouts", "fme_threshold", "workers", "bench_runs", "bench_perturb",
                "fit_reference_trials", "ga", "ucm_phases"},
               "spec");
    read(j, "scenario", s.scenario);
    if (auto it = j.find("arms"); it != j.end()) {
        s.arms.clear();
        for (const auto& a : *it) {
            Arm arm;
            from_json(a, arm);
            s.arms.push_back(arm);
        }
    }
    if (auto it = j.find("params"); it != j.end()) from_json(*it, s.params);
    if (auto it = j.find("model_b"); it != j.end()) from_json(*it, s.model_b);
    read(j, "n_mc", s.n_mc);
    read(j, "n_blocks", s.n_blocks);
    read(j, "trials_per_block", s.trials_per_block);
    read(j, "seed", s.seed);
    if (auto it = j.find("curriculum"); it != j.end()) from_json(*it, s.curriculum);
    if (auto it = j.find("filter"); it != j.end()) from_json(*it, s.filter);
    read(j, "filter_init_w_spread", s.filter_init_w_spread);
    if (auto it = j.find("game"); it != j.end()) from_json(*it, s.game);
    read(j, "w0_perturbation", s.w0_perturbation);
    if (auto it = j.find("model_scheme"); it != j.end()) s.model_scheme = scheme_from(it->get<std::string>());
    read(j, "calibration_postures", s.calibration_postures);
    if (auto it = j.find("planner_state"); it != j.end()) {
        const auto v = it->get<std::string>();
        if (v == "estimated-state") {
            s.planner_state = PlannerState::kEstimated;
        } else if (v == "oracle-state") {
            s.planner_state = PlannerState::kOracle;
        } else {
            throw std::invalid_argument("planner_state: unknown value '" + v + "'");
        }
    }
    read(j, "ensemble_rollouts", s.ensemble_rollouts);
    read(j, "fme_threshold", s.fme_threshold);
    read(j, "workers", s.workers);
    read(j, "bench_runs", s.bench_runs);
    read(j, "bench_perturb", s.bench_perturb);
    read(j, "fit_reference_trials", s.fit_reference_trials);
    if (auto it = j.find("ga"); it != j.end()) from_json(*it, s.ga);
    read(j, "ucm_phases", s.ucm_phases);
}

void to_json(json& j, const SynergySystem& s)
{
    const auto rows = [](const auto& m) {
        json out = json::array();
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            std::vector<double> row(static_cast<std::size_t>(m.cols()));
            for (Eigen::Index c = 0; c < m.cols(); ++c) row[static_cast<std::size_t>(c)] = m(r, c);
            out.push_back(row);
        }
        return out;
    };
    j = json{{"phi", rows(s.phi)},
             {"w_true", rows(s.w_true)},
             {"c", rows(s.c)},
             {"grid_side", s.grid_side},
             {"unit_scale", s.unit_scale}};
}

void to_json(json& j, const RunManifest& m)
{
    json rows = json::array();
    for (const TrialRow& r : m.rows) {
        rows.push_back({{"trial", r.trial},
                        {"target", r.target},
                        {"re", r.re},
                        {"sot", r.sot},
                        {"fme_true", r.fme_true},
                        {"fme_est", r.fme_est},
                        {"captured", r.captured},
                        {"wall_time", r.wall_time}});
    }
    json decisions = json::array();
    for (const Decision& d : m.decisions) {
        json q = json::array();
        for (const QValue& v : d.q) q.push_back({{"target", v.target}, {"value", v.value}});
        decisions.push_back({{"trial", d.trial}, {"q", q}, {"chosen", d.chosen}, {"tau", d.tau}, {"seed", d.seed}});
    }
    j = json{{"spec_hash", m.spec_hash}, {"seed", m.seed},         {"run", m.run},
             {"arm", m.arm},             {"rows", rows},           {"decisions", decisions},
             {"environment", m.environment}, {"complete", m.complete}, {"error", m.error}};
}

void from_json(const json& j, RunManifest& m)
{
    m.spec_hash = j.at("spec_hash").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.run = j.at("run").get<std::size_t>();
    m.arm = j.at("arm").get<std::string>();
    m.environment = j.at("environment").get<std::string>();
    m.complete = j.at("complete").get<bool>();
    m.error = j.at("error").get<std::string>();
    m.rows.clear();
    for (const auto& r : j.at("rows")) {
        m.rows.push_back({r.at("trial").get<int>(), r.at("target").get<TargetId>(), r.at("re").get<double>(),
                          r.at("sot").get<double>(), r.at("fme_true").get<double>(), r.at("fme_est").get<double>(),
                          r.at("captured").get<bool>(), r.at("wall_time").get<double>()});
    }
    m.decisions.clear();
    for (const auto& d : j.at("decisions")) {
        Decision dec{d.at("trial").get<int>(), {}, d.at("chosen").get<TargetId>(), d.at("tau").get<double>(),
                     d.at("seed").get<std::uint64_t>()};
        for (const auto& q : d.at("q")) dec.q.push_back({q.at("target").get<TargetId>(), q.at("value").get<double>()});
        m.decisions.push_back(std::move(dec));
    }
}

ExperimentSpec parse_spec(const json& doc, ExperimentSpec base)
{
    try {
        from_json(doc, base);
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("spec: ") + e.what());
    }
    base.validate();
    return base;
}

ExperimentSpec load_spec(const std::filesystem::path& file, ExperimentSpec base)
{
    return parse_spec(read_json(file), std::move(base));
}

ModelParams load_params(const std::filesystem::path& file)
{
    ModelParams p;
    from_json(read_json(file), p);
    return p;
}

json read_json(const std::filesystem::path& file)
{
    std::ifstream in(file);
    if (!in) throw std::runtime_error("cannot open " + file.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(file.string() + ": " + e.what());
    }
}

void write_json(const std::filesystem::path& file, const json& doc)
{
    std::ofstream out(file);
    if (!out) throw std::runtime_error("cannot write " + file.string());
    out << doc.dump(2) << '\n';
    if (!out) throw std::runtime_error("write failed: " + file.string());
}

}  // namespace hml
