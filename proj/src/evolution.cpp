#include "memegp/evolution.hpp"

#include <chrono>
#include <cmath>

#include "memegp/errors.hpp"

namespace memegp {

auto to_string(Mode mode) -> std::string_view
{
    switch (mode) {
    case Mode::Base:
        return "base";
    case Mode::LS:
        return "ls";
    case Mode::LSE:
        return "lse";
    }
    return "?";
}

auto parse_mode(std::string_view text) -> Mode
{
    if (text == "base") {
        return Mode::Base;
    }
    if (text == "ls") {
        return Mode::LS;
    }
    if (text == "lse") {
        return Mode::LSE;
    }
    throw ConfigError("unknown mode '" + std::string(text) + "' (expected base, ls or lse)");
}

auto EvolutionConfig::full_scale() -> EvolutionConfig
{
    EvolutionConfig cfg;
    cfg.population_size = 1024;
    cfg.generations = 50;
    return cfg;
}

void EvolutionConfig::validate() const
{
    if (population_size < 1) {
        throw ConfigError("population size must be positive");
    }
    if (generations < 0) {
        throw ConfigError("generations must be non-negative");
    }
    for (auto rate : { crossover_rate, mutation_rate, reproduction_rate }) {
        if (!(rate >= 0.0 && rate <= 1.0)) {
            throw ConfigError("breeding rates must lie in [0,1]");
        }
    }
    if (std::abs(crossover_rate + mutation_rate + reproduction_rate - 1.0) > 1e-9) {
        throw ConfigError("crossover, mutation and reproduction rates must sum to 1");
    }
    if (tournament_size < 1 || tournament_size > population_size) {
        throw ConfigError("tournament size must lie in [1, population size]");
    }
    if (depth.min < 2 || depth.max < depth.min) {
        throw ConfigError("depth bounds must satisfy 2 <= min <= max");
    }
    if (init_depth_max < depth.min || init_depth_max > depth.max) {
        throw ConfigError("initial depth limit must lie within the depth bounds");
    }
    if (mutation.min_subtree_depth < 1 || mutation.max_subtree_depth < mutation.min_subtree_depth || mutation.max_retries < 1) {
        throw ConfigError("invalid mutation settings");
    }
    if (mode != Mode::Base) {
        local_search.validate(population_size);
    }
}

auto choose_operator(Rng& rng, EvolutionConfig const& cfg) -> BreedOp
{
    auto const u = uniform_real(rng, 0.0, 1.0);
    if (u < cfg.crossover_rate) {
        return BreedOp::Crossover;
    }
    if (u < cfg.crossover_rate + cfg.mutation_rate) {
        return BreedOp::Mutation;
    }
    return BreedOp::Reproduction;
}

auto tournament_index(Population const& pop, std::size_t k, Rng& rng) -> std::size_t
{
    auto best = uniform_index(rng, pop.size());
    for (std::size_t draw = 1; draw < k; ++draw) {
        auto const challenger = uniform_index(rng, pop.size());
        if (fitter(pop.individuals[challenger], pop.individuals[best])) {
            best = challenger;
        }
    }
    return best;
}

auto tournament(Population const& pop, std::size_t k, Rng& rng) -> Individual const&
{
    return pop.individuals[tournament_index(pop, k, rng)];
}

auto crossover_at(ProgramTree const& a, std::size_t index_a, ProgramTree const& b, Rng& rng) -> std::optional<std::pair<ProgramTree, ProgramTree>>
{
    auto const type = a.output_type(index_a);
    std::vector<std::size_t> candidates;
    for (std::size_t j = 0; j < b.node_count(); ++j) {
        if (b.output_type(j) == type) {
            candidates.push_back(j);
        }
    }
    if (candidates.empty()) {
        return std::nullopt;
    }
    auto const index_b = candidates[uniform_index(rng, candidates.size())];
    return std::pair { a.replace_subtree(index_a, b.subtree(index_b)), b.replace_subtree(index_b, a.subtree(index_a)) };
}

auto crossover(ProgramTree const& a, ProgramTree const& b, Rng& rng, DepthBounds bounds) -> std::pair<ProgramTree, ProgramTree>
{
    constexpr int kRetries = 10;
    for (int attempt = 0; attempt < kRetries; ++attempt) {
        auto offspring = crossover_at(a, uniform_index(rng, a.node_count()), b, rng);
        if (offspring && is_valid(offspring->first, bounds) && is_valid(offspring->second, bounds)) {
            return std::move(*offspring);
        }
    }
    return { a, b };
}

namespace {

    auto fresh_subtree(ValueType type, Rng& rng, MutationConfig const& cfg, GenerateOptions const& gen) -> std::vector<Node>
    {
        if (type == ValueType::Filter || type == ValueType::Window) {
            return generate_subtree(rng, type, 1, false, gen);
        }
        auto const span = static_cast<std::size_t>(cfg.max_subtree_depth - cfg.min_subtree_depth + 1);
        auto const target = cfg.min_subtree_depth + static_cast<int>(uniform_index(rng, span));
        // Grow can stop short of the minimum; redraw a few times, then use full.
        for (int attempt = 0; attempt < 8; ++attempt) {
            auto nodes = generate_subtree(rng, type, target, false, gen);
            if (ProgramTree(nodes).depth() >= cfg.min_subtree_depth) {
                return nodes;
            }
        }
        return generate_subtree(rng, type, target, true, gen);
    }

} // namespace

auto mutate_at(ProgramTree const& a, std::size_t index, Rng& rng, DepthBounds bounds, MutationConfig const& cfg, GenerateOptions const& gen) -> ProgramTree
{
    for (int attempt = 0; attempt < cfg.max_retries; ++attempt) {
        auto const replacement = fresh_subtree(a.output_type(index), rng, cfg, gen);
        auto child = a.replace_subtree(index, replacement);
        if (is_valid(child, bounds)) {
            return child;
        }
    }
    return a;
}

auto mutate(ProgramTree const& a, Rng& rng, DepthBounds bounds, MutationConfig const& cfg, GenerateOptions const& gen) -> ProgramTree
{
    for (int attempt = 0; attempt < cfg.max_retries; ++attempt) {
        auto const index = uniform_index(rng, a.node_count());
        auto child = a.replace_subtree(index, fresh_subtree(a.output_type(index), rng, cfg, gen));
        if (is_valid(child, bounds)) {
            return child;
        }
    }
    return a;
}

auto initial_population(EvolutionConfig const& cfg, Rng& rng) -> Population
{
    Population pop;
    pop.individuals.reserve(cfg.population_size);
    for (std::size_t i = 0; i < cfg.population_size; ++i) {
        pop.individuals.push_back({ generate(rng, cfg.depth.min, cfg.init_depth_max, cfg.generate), std::nullopt });
    }
    return pop;
}

auto breed(Population const& pop, EvolutionConfig const& cfg, Rng& rng) -> Population
{
    Population next;
    next.generation_index = pop.generation_index + 1;
    next.individuals.reserve(cfg.population_size);
    if (cfg.elitism && !pop.individuals.empty()) {
        next.individuals.push_back(pop.individuals[rank(pop).front()]);
    }
    while (next.size() < cfg.population_size) {
        switch (choose_operator(rng, cfg)) {
        case BreedOp::Crossover: {
            auto const& mum = tournament(pop, cfg.tournament_size, rng);
            auto const& dad = tournament(pop, cfg.tournament_size, rng);
            auto [first, second] = crossover(mum.tree, dad.tree, rng, cfg.depth);
            next.individuals.push_back({ std::move(first), std::nullopt });
            if (next.size() < cfg.population_size) {
                next.individuals.push_back({ std::move(second), std::nullopt });
            }
            break;
        }
        case BreedOp::Mutation: {
            auto const& parent = tournament(pop, cfg.tournament_size, rng);
            next.individuals.push_back({ mutate(parent.tree, rng, cfg.depth, cfg.mutation, cfg.generate), std::nullopt });
            break;
        }
        case BreedOp::Reproduction:
            next.individuals.push_back(tournament(pop, cfg.tournament_size, rng));
            break;
        }
    }
    return next;
}

namespace {

    using Clock = std::chrono::steady_clock;

    auto ms_since(Clock::time_point start) -> double
    {
        return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
    }

    auto record_for(Population const& pop, Individual const& best, int generation, double elapsed_ms) -> GenerationRecord
    {
        GenerationRecord rec;
        rec.generation = generation;
        rec.best_fitness = best.fitness.value_or(0.0);
        double fit_sum = 0.0;
        double size_sum = 0.0;
        for (auto const& ind : pop.individuals) {
            fit_sum += ind.fitness.value_or(0.0);
            size_sum += static_cast<double>(ind.tree.node_count());
        }
        auto const n = static_cast<double>(pop.size());
        rec.mean_fitness = fit_sum / n;
        rec.mean_size = size_sum / n;
        rec.elapsed_ms = elapsed_ms;
        return rec;
    }

} // namespace

auto run(EvolutionConfig const& cfg, std::span<LabeledImage const> train, std::span<LabeledImage const> test, Rng& rng, GenerationCallback const& on_generation) -> RunResult
{
    cfg.validate();
    if (train.empty() || test.empty()) {
        throw ConfigError("training and test sets must be non-empty");
    }
    auto const start = Clock::now();
    RunResult result;
    auto& log = result.log;

    auto pop = initial_population(cfg, rng);
    std::optional<Individual> best_so_far;

    if (cfg.generations == 0) {
        evaluate_population(pop, train);
        best_so_far = pop.individuals[rank(pop).front()];
    }

    for (int gen = 0; gen < cfg.generations; ++gen) {
        pop.generation_index = gen;
        evaluate_population(pop, train);

        if (cfg.mode != Mode::Base && should_run_ls(gen, cfg.local_search)) {
            LocalSearchEvent event;
            event.generation = gen;
            event.kind = "elite";
            event.individuals = std::min(cfg.local_search.top_k, pop.size());
            event.epochs = cfg.local_search.epochs;
            event.best_fitness_before = pop.individuals[rank(pop).front()].fitness.value_or(0.0);
            pop = apply_ls_to_elite(std::move(pop), train, cfg.local_search, rng);
            event.best_fitness_after = pop.individuals[rank(pop).front()].fitness.value_or(0.0);
            log.local_search.push_back(std::move(event));
        }

        auto const& gen_best = pop.individuals[rank(pop).front()];
        if (!best_so_far || fitter(gen_best, *best_so_far)) {
            best_so_far = gen_best;
        }
        log.generations.push_back(record_for(pop, gen_best, gen, ms_since(start)));
        if (on_generation) {
            on_generation(log.generations.back());
        }

        if (gen_best.fitness.value_or(0.0) >= 1.0) {
            log.early_stopped = true;
            break;
        }
        if (gen + 1 < cfg.generations) {
            pop = breed(pop, cfg, rng);
        }
    }

    if (cfg.mode == Mode::LSE && cfg.generations > 0) {
        auto const& final_best = pop.individuals[rank(pop).front()];
        LocalSearchEvent event;
        event.generation = pop.generation_index;
        event.kind = "final-polish";
        event.individuals = 1;
        event.epochs = cfg.local_search.final_epochs;
        event.best_fitness_before = final_best.fitness.value_or(0.0);
        result.best = final_polish(final_best, train, cfg.local_search, rng);
        event.best_fitness_after = result.best.fitness.value_or(0.0);
        log.local_search.push_back(std::move(event));
    } else {
        result.best = *best_so_far;
    }
    log.train_accuracy = result.best.fitness.value_or(0.0);
    log.train_time_m = ms_since(start) / 60000.0;

    auto const test_start = Clock::now();
    log.test_accuracy = fitness(result.best.tree, test);
    log.test_time_ms = ms_since(test_start) / static_cast<double>(test.size());
    return result;
}

auto run(EvolutionConfig const& cfg, std::span<LabeledImage const> train, std::span<LabeledImage const> test, GenerationCallback const& on_generation) -> RunResult
{
    Rng rng(cfg.seed);
    return run(cfg, train, test, rng, on_generation);
}

} // namespace memegp
