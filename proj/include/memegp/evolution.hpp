#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "memegp/dataset.hpp"
#include "memegp/fitness.hpp"
#include "memegp/local_search.hpp"
#include "memegp/program.hpp"
#include "memegp/random.hpp"

namespace memegp {

/// Base: evolution only. LS: periodic SGD on the elite. LSE: LS plus a long
/// final polish of the best individual.
enum class Mode { Base, LS, LSE };

auto to_string(Mode mode) -> std::string_view;
auto parse_mode(std::string_view text) -> Mode;

struct MutationConfig {
    int min_subtree_depth { 1 };
    int max_subtree_depth { 4 };
    int max_retries { 10 };
};

struct EvolutionConfig {
    std::size_t population_size { 200 };
    int generations { 50 };
    double crossover_rate { 0.75 };
    double mutation_rate { 0.20 };
    double reproduction_rate { 0.05 };
    std::size_t tournament_size { 7 };
    DepthBounds depth { 2, 10 };
    int init_depth_max { 6 };
    Mode mode { Mode::Base };
    std::uint64_t seed { 1 };
    bool elitism { true };
    LocalSearchConfig local_search {};
    MutationConfig mutation {};
    GenerateOptions generate {};

    /// Population 1024 with everything else at its default.
    static auto full_scale() -> EvolutionConfig;

    /// Throws ConfigError on any invariant violation.
    void validate() const;
};

struct GenerationRecord {
    int generation { 0 };
    double best_fitness { 0.0 };
    double mean_fitness { 0.0 };
    double mean_size { 0.0 };
    double elapsed_ms { 0.0 };
};

struct LocalSearchEvent {
    int generation { 0 };
    std::string kind; // "elite" or "final-polish"
    std::size_t individuals { 0 };
    int epochs { 0 };
    double best_fitness_before { 0.0 };
    double best_fitness_after { 0.0 };
};

struct RunLog {
    std::vector<GenerationRecord> generations;
    std::vector<LocalSearchEvent> local_search;
    bool early_stopped { false };
    double train_accuracy { 0.0 };
    double test_accuracy { 0.0 };
    double train_time_m { 0.0 };
    double test_time_ms { 0.0 }; // mean per test image
};

struct RunResult {
    Individual best;
    RunLog log;
};

enum class BreedOp { Crossover, Mutation, Reproduction };

auto choose_operator(Rng& rng, EvolutionConfig const& cfg) -> BreedOp;

/// Index of the winner among k draws with replacement: highest fitness,
/// then fewer nodes, then the earliest draw.
auto tournament_index(Population const& pop, std::size_t k, Rng& rng) -> std::size_t;
auto tournament(Population const& pop, std::size_t k, Rng& rng) -> Individual const&;

/// Swaps the subtree at `index_a` of `a` with a uniformly chosen subtree of
/// `b` having the same output type. nullopt when `b` has no such subtree.
/// Offspring are not checked against depth bounds.
auto crossover_at(ProgramTree const& a, std::size_t index_a, ProgramTree const& b, Rng& rng) -> std::optional<std::pair<ProgramTree, ProgramTree>>;

/// Subtree crossover with up to 10 attempts at legal offspring; falls back
/// to the unchanged parents.
auto crossover(ProgramTree const& a, ProgramTree const& b, Rng& rng, DepthBounds bounds = {}) -> std::pair<ProgramTree, ProgramTree>;

/// Replaces the subtree at `index` with a fresh one of the same type,
/// retrying up to max_retries times before returning the parent.
auto mutate_at(ProgramTree const& a, std::size_t index, Rng& rng, DepthBounds bounds = {}, MutationConfig const& cfg = {}, GenerateOptions const& gen = {}) -> ProgramTree;

/// Subtree mutation at a uniformly chosen node; same retry rule.
auto mutate(ProgramTree const& a, Rng& rng, DepthBounds bounds = {}, MutationConfig const& cfg = {}, GenerateOptions const& gen = {}) -> ProgramTree;

auto initial_population(EvolutionConfig const& cfg, Rng& rng) -> Population;

/// Builds the next generation from an evaluated one.
auto breed(Population const& pop, EvolutionConfig const& cfg, Rng& rng) -> Population;

using GenerationCallback = std::function<void(GenerationRecord const&)>;

auto run(EvolutionConfig const& cfg, std::span<LabeledImage const> train, std::span<LabeledImage const> test, Rng& rng, GenerationCallback const& on_generation = {}) -> RunResult;

/// Seeds its own stream from cfg.seed.
auto run(EvolutionConfig const& cfg, std::span<LabeledImage const> train, std::span<LabeledImage const> test, GenerationCallback const& on_generation = {}) -> RunResult;

} // namespace memegp
