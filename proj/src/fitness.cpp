#include "memegp/fitness.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "memegp/errors.hpp"

namespace memegp {

auto confusion(std::span<int const> predicted, std::span<int const> actual) -> Confusion
{
    if (predicted.size() != actual.size()) {
        throw std::invalid_argument("prediction and label counts differ");
    }
    Confusion c;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        auto const positive_truth = actual[i] == 0;
        auto const positive_call = predicted[i] == 0;
        if (positive_truth && positive_call) {
            ++c.tp;
        } else if (!positive_truth && !positive_call) {
            ++c.tn;
        } else if (positive_call) {
            ++c.fp;
        } else {
            ++c.fn;
        }
    }
    return c;
}

auto accuracy(Confusion const& c) -> double
{
    auto const total = c.total();
    if (total == 0) {
        return 0.0;
    }
    return static_cast<double>(c.tp + c.tn) / static_cast<double>(total);
}

auto predict_all(ProgramTree const& tree, std::span<LabeledImage const> data) -> std::vector<int>
{
    std::vector<int> out;
    out.reserve(data.size());
    try {
        for (auto const& item : data) {
            out.push_back(classify(tree, item.image));
        }
    } catch (ImageTooSmall const&) {
        return {};
    } catch (EmptyWindow const&) {
        return {};
    }
    return out;
}

auto fitness(ProgramTree const& tree, std::span<LabeledImage const> data) -> double
{
    if (data.empty()) {
        throw std::invalid_argument("fitness needs a non-empty dataset");
    }
    auto const predicted = predict_all(tree, data);
    if (predicted.empty()) {
        return 0.0;
    }
    std::vector<int> actual;
    actual.reserve(data.size());
    for (auto const& item : data) {
        actual.push_back(item.label);
    }
    return accuracy(confusion(predicted, actual));
}

auto fitter(Individual const& a, Individual const& b) -> bool
{
    auto const fa = a.fitness.value_or(-1.0);
    auto const fb = b.fitness.value_or(-1.0);
    if (fa != fb) {
        return fa > fb;
    }
    return a.tree.node_count() < b.tree.node_count();
}

auto rank(Population const& pop) -> std::vector<std::size_t>
{
    std::vector<std::size_t> order(pop.size());
    std::iota(order.begin(), order.end(), std::size_t { 0 });
    std::stable_sort(order.begin(), order.end(), [&](auto i, auto j) { return fitter(pop.individuals[i], pop.individuals[j]); });
    return order;
}

void evaluate_population(Population& pop, std::span<LabeledImage const> data)
{
    for (auto& ind : pop.individuals) {
        if (!ind.fitness) {
            ind.fitness = fitness(ind.tree, data);
        }
    }
}

} // namespace memegp
