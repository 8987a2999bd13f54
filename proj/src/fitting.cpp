#include "hml/fitting.hpp"

#include "hml/log.hpp"
#include "hml/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace hml {

Genes to_genes(const ModelParams& p)
{
    Genes g;
    g << std::log10(p.gamma), p.eta, p.mu, p.k_p, p.sigma_u, p.sigma_q;
    return g;
}

ModelParams from_genes(const Genes& g, const ModelParams& base)
{
    ModelParams p = base;
    p.gamma = std::pow(10.0, g(0));
    p.eta = g(1);
    p.mu = g(2);
    p.k_p = g(3);
    p.sigma_u = g(4);
    p.sigma_q = g(5);
    return p;
}

GaConfig GaConfig::desk()
{
    GaConfig cfg;
    cfg.phase1 = {32, 20, 0.9, 15.0, 0.17, 10.0};
    cfg.phase2 = {32, 20, 0.9, 20.0, 0.1, 15.0};
    cfg.restarts = 1;
    return cfg;
}

void GaConfig::validate() const
{
    for (const GaPhase* ph : {&phase1, &phase2}) {
        if (ph->population < 4 || ph->population % 2 != 0) {
            throw std::invalid_argument("GA population must be even and >= 4");
        }
        if (ph->generations < 0) throw std::invalid_argument("GA generations must be >= 0");
        for (double prob : {ph->sbx_prob, ph->pm_prob}) {
            if (!(prob >= 0 && prob <= 1)) throw std::invalid_argument("GA probabilities must lie in [0, 1]");
        }
        if (!(ph->sbx_eta >= 0) || !(ph->pm_eta >= 0)) throw std::invalid_argument("GA distribution index < 0");
    }
    if (resample_every < 1 || resample_count < 1 || restarts < 1) {
        throw std::invalid_argument("GA resampling schedule and restarts must be >= 1");
    }
    if (!(bounds.lower.array() <= bounds.upper.array()).all()) throw std::invalid_argument("GA bounds inverted");
}

ReferenceData make_reference(const ModelParams& params, const SynergySystem& sys, const GameConfig& game,
                             const LearnerState& initial, const std::vector<TargetId>& targets, Rng& rng)
{
    ReferenceData ref{initial, {}};
    LearnerState s = initial;
    std::optional<Vec2> from;
    double t = 0.0;
    for (TargetId id : targets) {
        TrialOutcome o = integrate_trial(s, game.targets.at(id), sys, params, game, rng, t, from);
        t = o.record.samples.back().t;
        from = game.targets[id];
        s = o.end;
        ref.trials.push_back(std::move(o.record));
    }
    return ref;
}

Objectives evaluate_objectives(const ModelParams& params, const ReferenceData& ref, const SynergySystem& sys,
                               const GameConfig& game, Rng& rng)
{
    if (ref.trials.empty()) throw std::invalid_argument("evaluate_objectives: empty reference");
    const auto n = static_cast<Eigen::Index>(ref.trials.size());
    Eigen::VectorXd d_re(n), d_sot(n), te(n);
    LearnerState s = ref.initial;
    try {
        for (Eigen::Index k = 0; k < n; ++k) {
            const TrialRecord& rec = ref.trials[static_cast<std::size_t>(k)];
            const std::vector<Vec2> data = rec.cursor_path();
            const auto steps = static_cast<int>(data.size());
            CursorTrial model = simulate_cursor_trial(s, rec.target_to, sys, params, game, rng, steps);
            const TrialMetrics md = trial_metrics(data, rec.target_to, game.dt(), game.trial_cutoff);
            const TrialMetrics mm = trial_metrics(model.path, rec.target_to, game.dt(), game.trial_cutoff);
            d_re(k) = mm.re - md.re;
            d_sot(k) = mm.sot - md.sot;
            te(k) = trajectory_error(model.path, data);
            s = model.end;
        }
    } catch (const DivergenceError&) {
        return Objectives::Constant(kFitPenalty);
    }
    Objectives f(d_re.norm(), d_sot.norm(), te.norm());
    if (!f.allFinite()) return Objectives::Constant(kFitPenalty);
    return f;
}

bool dominates(const Objectives& a, const Objectives& b)
{
    return (a.array() <= b.array()).all() && (a.array() < b.array()).any();
}

namespace {

void assign_crowding(std::vector<Individual>& pop, const std::vector<std::size_t>& front)
{
    const double inf = std::numeric_limits<double>::infinity();
    for (std::size_t i : front) pop[i].crowding = 0.0;
    if (front.size() <= 2) {
        for (std::size_t i : front) pop[i].crowding = inf;
        return;
    }
    std::vector<std::size_t> order = front;
    for (int m = 0; m < 3; ++m) {
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return pop[a].objectives(m) < pop[b].objectives(m); });
        const double lo = pop[order.front()].objectives(m);
        const double hi = pop[order.back()].objectives(m);
        pop[order.front()].crowding = inf;
        pop[order.back()].crowding = inf;
        if (!(hi > lo)) continue;
        for (std::size_t k = 1; k + 1 < order.size(); ++k) {
            pop[order[k]].crowding +=
                (pop[order[k + 1]].objectives(m) - pop[order[k - 1]].objectives(m)) / (hi - lo);
        }
    }
}

bool crowded_better(const Individual& a, const Individual& b)
{
    return a.rank < b.rank || (a.rank == b.rank && a.crowding > b.crowding);
}

}  // namespace

void pareto_rank(std::vector<Individual>& pop)
{
    const std::size_t n = pop.size();
    std::vector<std::vector<std::size_t>> dominated(n);
    std::vector<std::size_t> dom_count(n, 0);
    std::vector<std::size_t> front;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            if (dominates(pop[i].objectives, pop[j].objectives)) {
                dominated[i].push_back(j);
            } else if (dominates(pop[j].objectives, pop[i].objectives)) {
                ++dom_count[i];
            }
        }
        if (dom_count[i] == 0) front.push_back(i);
    }
    int rank = 1;
    while (!front.empty()) {
        for (std::size_t i : front) pop[i].rank = rank;
        assign_crowding(pop, front);
        std::vector<std::size_t> next;
        for (std::size_t i : front) {
            for (std::size_t j : dominated[i]) {
                if (--dom_count[j] == 0) next.push_back(j);
            }
        }
        std::sort(next.begin(), next.end());
        front = std::move(next);
        ++rank;
    }
}

std::size_t tournament_select(const std::vector<Individual>& pop, Rng& rng)
{
    const std::size_t a = rng.index(pop.size());
    const std::size_t b = rng.index(pop.size());
    return crowded_better(pop[b], pop[a]) ? b : a;
}

std::array<Genes, 2> sbx_crossover(const Genes& a, const Genes& b, double eta, Rng& rng)
{
    std::array<Genes, 2> c{a, b};
    for (int i = 0; i < kFitDim; ++i) {
        if (rng.uniform() >= 0.5) continue;
        const double u = rng.uniform();
        const double beta = u <= 0.5 ? std::pow(2.0 * u, 1.0 / (eta + 1.0))
                                     : std::pow(1.0 / (2.0 * (1.0 - u)), 1.0 / (eta + 1.0));
        c[0](i) = 0.5 * ((1.0 + beta) * a(i) + (1.0 - beta) * b(i));
        c[1](i) = 0.5 * ((1.0 - beta) * a(i) + (1.0 + beta) * b(i));
    }
    return c;
}

Genes polynomial_mutation(const Genes& g, double prob, double eta, const FitBounds& bounds, Rng& rng)
{
    Genes out = g;
    for (int i = 0; i < kFitDim; ++i) {
        if (rng.uniform() >= prob) continue;
        const double u = rng.uniform();
        const double delta = u < 0.5 ? std::pow(2.0 * u, 1.0 / (eta + 1.0)) - 1.0
                                     : 1.0 - std::pow(2.0 * (1.0 - u), 1.0 / (eta + 1.0));
        out(i) += delta * (bounds.upper(i) - bounds.lower(i));
    }
    return bounds.clip(out);
}

std::vector<Genes> variation(const std::vector<Genes>& parents, const GaPhase& phase, const FitBounds& bounds,
                             Rng& rng)
{
    std::vector<Genes> children;
    children.reserve(parents.size());
    for (std::size_t i = 0; i < parents.size(); i += 2) {
        const Genes& a = parents[i];
        const Genes& b = parents[(i + 1) % parents.size()];
        std::array<Genes, 2> c{a, b};
        if (rng.uniform() < phase.sbx_prob) c = sbx_crossover(a, b, phase.sbx_eta, rng);
        for (const Genes& child : c) {
            if (children.size() < parents.size()) {
                children.push_back(polynomial_mutation(bounds.clip(child), phase.pm_prob, phase.pm_eta, bounds, rng));
            }
        }
    }
    return children;
}

std::vector<Individual> seed_phase2(std::vector<Individual> pop, std::size_t n)
{
    if (pop.empty() || n == 0) throw std::invalid_argument("seed_phase2: empty population");
    std::stable_sort(pop.begin(), pop.end(), crowded_better);
    std::size_t front = 0;
    while (front < pop.size() && pop[front].rank == 1) ++front;
    if (front == 0) throw std::invalid_argument("seed_phase2: population is not ranked");
    std::vector<Individual> out;
    for (std::size_t i = 0; out.size() < n; ++i) out.push_back(pop[i % front]);
    pareto_rank(out);
    return out;
}

const Individual& select_fit(const std::vector<Individual>& candidates)
{
    if (candidates.empty()) throw std::invalid_argument("select_fit: no candidates");
    double avg_sot = 0.0;
    for (const auto& c : candidates) avg_sot += c.objectives(1);
    avg_sot /= double(candidates.size());
    const Individual* best = nullptr;
    for (const auto& c : candidates) {
        if (c.objectives(1) < avg_sot && (!best || c.objectives(0) < best->objectives(0))) best = &c;
    }
    if (best) return *best;
    log_warning("fit selection: no candidate below the average f_SoT, using minimum f_RE");
    return *std::min_element(candidates.begin(), candidates.end(), [](const Individual& a, const Individual& b) {
        return a.objectives(0) < b.objectives(0);
    });
}

namespace {

double median_re(const std::vector<Individual>& pop)
{
    std::vector<double> v;
    for (const auto& ind : pop) v.push_back(ind.objectives(0));
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

class Nsga2 {
public:
    Nsga2(const ReferenceData& ref, const SynergySystem& sys, const GameConfig& game, const GaConfig& cfg,
          const ModelParams& base, std::uint64_t seed, int restart)
        : ref_(ref), sys_(sys), game_(game), cfg_(cfg), base_(base), seed_(seed), restart_(restart)
    {
    }

    void evaluate(std::vector<Individual>& pop, int phase, int gen, std::size_t offset, int rep = 0) const
    {
        parallel_for(pop.size(), cfg_.workers, [&](std::size_t i) {
            Rng rng(derive_seed(seed_, {std::uint64_t(restart_), std::uint64_t(phase), std::uint64_t(gen),
                                        std::uint64_t(offset + i), std::uint64_t(rep)}));
            pop[i].objectives = evaluate_objectives(from_genes(pop[i].genes, base_), ref_, sys_, game_, rng);
        });
    }

    std::vector<Individual> initial_population()
    {
        Rng rng(derive_seed(seed_, {std::uint64_t(restart_), 0}));
        std::vector<Individual> pop(cfg_.phase1.population);
        for (auto& ind : pop) {
            for (int i = 0; i < kFitDim; ++i) {
                ind.genes(i) = cfg_.bounds.lower(i) + rng.uniform() * (cfg_.bounds.upper(i) - cfg_.bounds.lower(i));
            }
        }
        evaluate(pop, 1, 0, 0);
        pareto_rank(pop);
        return pop;
    }

    void generation(std::vector<Individual>& pop, const GaPhase& phase, int phase_id, int gen)
    {
        Rng rng(derive_seed(seed_, {std::uint64_t(restart_), std::uint64_t(phase_id), std::uint64_t(gen)}));
        std::vector<Genes> parents;
        for (std::size_t i = 0; i < pop.size(); ++i) parents.push_back(pop[tournament_select(pop, rng)].genes);
        std::vector<Individual> children(pop.size());
        const auto genes = variation(parents, phase, cfg_.bounds, rng);
        for (std::size_t i = 0; i < children.size(); ++i) children[i].genes = genes[i];
        evaluate(children, phase_id, gen, pop.size());

        std::vector<Individual> pool = pop;
        pool.insert(pool.end(), children.begin(), children.end());
        pareto_rank(pool);
        truncate(pool, pop.size());
        pop = std::move(pool);
        pareto_rank(pop);
    }

    /// Averages `resample_count` fresh evaluations of every rank-1 member.
    void resample_front(std::vector<Individual>& pop, int gen)
    {
        std::vector<Individual> front;
        std::vector<std::size_t> where;
        for (std::size_t i = 0; i < pop.size(); ++i) {
            if (pop[i].rank == 1) {
                front.push_back(pop[i]);
                where.push_back(i);
            }
        }
        std::vector<Objectives> sum(front.size(), Objectives::Zero());
        for (int rep = 1; rep <= cfg_.resample_count; ++rep) {
            evaluate(front, 2, gen, 0, rep);
            for (std::size_t k = 0; k < front.size(); ++k) sum[k] += front[k].objectives;
        }
        for (std::size_t k = 0; k < front.size(); ++k) pop[where[k]].objectives = sum[k] / cfg_.resample_count;
        pareto_rank(pop);
    }

    static void truncate(std::vector<Individual>& pool, std::size_t n)
    {
        std::stable_sort(pool.begin(), pool.end(), crowded_better);
        pool.resize(n);
    }

    GenerationStats stats(const std::vector<Individual>& pop, int phase, int gen) const
    {
        GenerationStats s{phase, restart_, gen, std::numeric_limits<double>::infinity(), median_re(pop), 0};
        for (const auto& ind : pop) {
            s.best_re = std::min(s.best_re, ind.objectives(0));
            s.front_size += ind.rank == 1;
        }
        return s;
    }

private:
    const ReferenceData& ref_;
    const SynergySystem& sys_;
    const GameConfig& game_;
    const GaConfig& cfg_;
    const ModelParams& base_;
    std::uint64_t seed_;
    int restart_;
};

}  // namespace

FitResult run_fit(const ReferenceData& ref, const SynergySystem& sys, const GameConfig& game, const GaConfig& cfg,
                  std::uint64_t seed, const ModelParams& base)
{
    cfg.validate();
    if (ref.trials.empty()) throw std::invalid_argument("run_fit: empty reference");
    FitResult result;
    for (int r = 0; r < cfg.restarts; ++r) {
        Nsga2 ga(ref, sys, game, cfg, base, seed, r);
        std::vector<Individual> pop = ga.initial_population();
        result.history.push_back(ga.stats(pop, 1, 0));
        if (r == 0) result.generation0_median_re = result.history.back().median_re;
        for (int g = 1; g <= cfg.phase1.generations; ++g) {
            ga.generation(pop, cfg.phase1, 1, g);
            result.history.push_back(ga.stats(pop, 1, g));
        }
        pop = seed_phase2(std::move(pop), cfg.phase2.population);
        for (int g = 1; g <= cfg.phase2.generations; ++g) {
            ga.generation(pop, cfg.phase2, 2, g);
            if (g % cfg.resample_every == 0) ga.resample_front(pop, g);
            result.history.push_back(ga.stats(pop, 2, g));
        }
        for (const auto& ind : pop) {
            if (ind.rank == 1) result.front.push_back(ind);
        }
    }
    result.selected_individual = select_fit(result.front);
    result.selected = from_genes(result.selected_individual.genes, base);
    return result;
}

}  // namespace hml
