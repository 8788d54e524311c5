#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "memegp/dataset.hpp"
#include "memegp/fitness.hpp"
#include "memegp/grad_engine.hpp"
#include "memegp/program.hpp"
#include "memegp/random.hpp"

namespace memegp {

struct LocalSearchConfig {
    int epochs { 10 };
    double learning_rate { 0.5 };
    double batch_fraction { 0.10 };
    std::size_t top_k { 25 };
    int period { 10 };
    int final_epochs { 100 };
    AggGradient agg_gradient { AggGradient::Exact };

    /// Throws ConfigError. Pass the population size to check top_k.
    void validate(std::size_t population_size) const;
};

/// Shuffled partition of [0, n) into consecutive batches of `batch_size`;
/// the last batch may be short.
auto make_batches(std::size_t n, std::size_t batch_size, Rng& rng) -> std::vector<std::vector<std::size_t>>;

auto batch_size_for(std::size_t n, double batch_fraction) -> std::size_t;

/// Mean cross-entropy of the tree over `data`. Images the tree cannot
/// evaluate are skipped.
auto mean_loss(ProgramTree const& tree, std::span<LabeledImage const> data) -> double;

/// Mean filter gradient over a batch; failed evaluations contribute zero.
auto batch_gradient(ProgramTree const& tree, std::span<LabeledImage const> data, std::span<std::size_t const> batch, GradOptions const& opts) -> GradientSet;

/// Mini-batch SGD on the filter coefficients. Returns a new tree whose
/// structure is identical to `tree`; only Convolve filters move. Trees with
/// no Convolve node come back unchanged.
auto sgd(ProgramTree const& tree, std::span<LabeledImage const> train, LocalSearchConfig const& cfg, Rng& rng) -> ProgramTree;

/// True on generation 0 and every `period` generations after it.
auto should_run_ls(int generation, LocalSearchConfig const& cfg) -> bool;

/// Tunes the top_k fittest (by `rank`) and refreshes their fitness. All
/// elites are chosen before any tuning happens.
auto apply_ls_to_elite(Population pop, std::span<LabeledImage const> train, LocalSearchConfig const& cfg, Rng& rng) -> Population;

/// Long SGD run (final_epochs) on the best individual, with fitness refreshed.
auto final_polish(Individual const& best, std::span<LabeledImage const> train, LocalSearchConfig const& cfg, Rng& rng) -> Individual;

} // namespace memegp
