// hmlc: run the built-in simulation scenarios and write their outputs.
#include "hml/harness.hpp"
#include "hml/io.hpp"

#include "CLI11.hpp"

#include <cmath>
#include <iostream>
#include <thread>

namespace {

struct Common {
    std::string spec_file;
    std::string params_file;
    std::uint64_t seed = 1;
    bool seed_given = false;
    std::string out = "out";
    std::string preset = "desk";
    std::string scenario;
    std::size_t workers = 0;
};

void add_common(CLI::App* cmd, Common& c, bool needs_scenario_flag)
{
    cmd->add_option("--spec", c.spec_file, "JSON experiment spec (keys override the scenario preset)");
    cmd->add_option("--params", c.params_file, "model parameter document (e.g. data/default_params.json)");
    cmd->add_option("--seed", c.seed, "master seed")->each([&](const std::string&) { c.seed_given = true; });
    cmd->add_option("--out", c.out, "output directory");
    cmd->add_option("--preset", c.preset, "desk | paper")->check(CLI::IsMember({"desk", "paper"}));
    cmd->add_option("--workers", c.workers, "parallel Monte Carlo workers (0 = hardware threads)");
    if (needs_scenario_flag) {
        cmd->add_option("--scenario", c.scenario, "scenario id")->check(CLI::IsMember(hml::scenario_ids()));
    }
}

int run(const Common& c, const std::string& default_scenario)
{
    using namespace hml;
    const Preset preset = c.preset == "paper" ? Preset::kPaper : Preset::kDesk;
    std::string scenario = c.scenario.empty() ? default_scenario : c.scenario;
    json doc = json::object();
    if (!c.spec_file.empty()) {
        doc = read_json(c.spec_file);
        if (c.scenario.empty() && doc.contains("scenario")) scenario = doc["scenario"].get<std::string>();
    }
    ExperimentSpec spec = parse_spec(doc, scenario_spec(scenario, preset));
    spec.scenario = scenario;
    if (!c.params_file.empty()) spec.params = load_params(c.params_file);
    if (c.seed_given || c.spec_file.empty()) spec.seed = c.seed;
    spec.workers = c.workers ? c.workers : std::max(1u, std::thread::hardware_concurrency());
    spec.validate();

    std::cerr << "scenario " << spec.scenario << " spec " << spec_hash(spec) << " seed " << spec.seed << '\n';
    const ExperimentResult result = run_experiment(spec);
    emit_outputs(result, c.out);

    bool ok = result.complete();
    for (const auto& r : result.runs) {
        const bool planned = r.arm.rfind("snmpc", 0) == 0;
        ok = ok && static_cast<int>(r.rows.size()) == spec.n_trials() &&
             (!planned || r.decisions.size() == r.rows.size());
    }
    if (result.fit) ok = ok && std::isfinite(result.fit->selected_individual.objectives(0));
    std::cerr << (ok ? "done" : "finished with incomplete runs or failed self-checks") << ": " << c.out << '\n';
    return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Curriculum design simulations for a synergy-based motor learning model"};
    app.require_subcommand(1);

    Common simulate, compare, filters, ucm, fit;
    add_common(app.add_subcommand("simulate", "single-curriculum run with PF tracking (default fig2a)"), simulate, true);
    add_common(app.add_subcommand("compare", "curriculum comparison (fig2b, fig6a or fig6bc)"), compare, true);
    add_common(app.add_subcommand("filters", "EKF / UKF / PF consistency benchmark"), filters, false);
    add_common(app.add_subcommand("ucm", "uncontrolled-manifold phase analysis"), ucm, false);
    add_common(app.add_subcommand("fit", "NSGA-II self-fit"), fit, false);

    std::string emit_in, emit_out = "out";
    auto* emit = app.add_subcommand("emit", "re-emit CSV/SVG outputs from a manifest.json");
    emit->add_option("--spec", emit_in, "manifest.json written by a previous run")->required();
    emit->add_option("--out", emit_out, "output directory");
    std::uint64_t unused_seed = 0;
    std::string unused_preset;
    emit->add_option("--seed", unused_seed, "ignored");
    emit->add_option("--preset", unused_preset, "ignored");

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand("simulate")) return run(simulate, "fig2a");
        if (app.got_subcommand("compare")) return run(compare, "fig2b");
        if (app.got_subcommand("filters")) return run(filters, "filters");
        if (app.got_subcommand("ucm")) return run(ucm, "ucm");
        if (app.got_subcommand("fit")) return run(fit, "fit");
        if (app.got_subcommand("emit")) {
            const hml::json doc = hml::read_json(emit_in);
            hml::ExperimentResult result;
            result.spec = hml::parse_spec(doc.at("spec"), hml::ExperimentSpec{});
            result.spec_hash = doc.at("spec_hash").get<std::string>();
            result.runs = doc.at("runs").get<std::vector<hml::RunManifest>>();
            hml::emit_outputs(result, emit_out);
            return result.complete() ? 0 : 1;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
