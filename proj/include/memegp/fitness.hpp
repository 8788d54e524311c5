#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "memegp/dataset.hpp"
#include "memegp/program.hpp"

namespace memegp {

/// Class 0 is the positive class.
struct Confusion {
    std::size_t tp { 0 };
    std::size_t tn { 0 };
    std::size_t fp { 0 };
    std::size_t fn { 0 };

    [[nodiscard]] auto total() const noexcept -> std::size_t { return tp + tn + fp + fn; }
};

auto confusion(std::span<int const> predicted, std::span<int const> actual) -> Confusion;

/// (TP + TN) / (TP + TN + FP + FN); 0 for an empty table.
auto accuracy(Confusion const& c) -> double;

/// Predicted labels for every item, or an empty vector when evaluation fails
/// on any image (too many stacked convolve/pool nodes for its size).
auto predict_all(ProgramTree const& tree, std::span<LabeledImage const> data) -> std::vector<int>;

/// Training accuracy; 0 when the tree cannot be evaluated on some image.
auto fitness(ProgramTree const& tree, std::span<LabeledImage const> data) -> double;

struct Population {
    std::vector<Individual> individuals;
    int generation_index { 0 };

    [[nodiscard]] auto size() const noexcept -> std::size_t { return individuals.size(); }
};

/// Higher fitness first, then fewer nodes. Unset fitness ranks last.
auto fitter(Individual const& a, Individual const& b) -> bool;

/// Indices ordered best-first by `fitter`; ties keep insertion order.
auto rank(Population const& pop) -> std::vector<std::size_t>;

/// Fills in every unset fitness.
void evaluate_population(Population& pop, std::span<LabeledImage const> data);

} // namespace memegp
