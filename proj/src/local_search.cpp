#include "memegp/local_search.hpp"

#include <cmath>

#include "memegp/errors.hpp"

namespace memegp {

void LocalSearchConfig::validate(std::size_t population_size) const
{
    if (epochs < 1 || final_epochs < 1) {
        throw ConfigError("epochs must be positive");
    }
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
        throw ConfigError("learning rate must be a non-negative finite number");
    }
    if (!(batch_fraction > 0.0 && batch_fraction <= 1.0)) {
        throw ConfigError("batch fraction must lie in (0,1]");
    }
    if (period < 1) {
        throw ConfigError("local search period must be positive");
    }
    if (top_k > population_size) {
        throw ConfigError("top-k exceeds the population size");
    }
}

auto batch_size_for(std::size_t n, double batch_fraction) -> std::size_t
{
    auto const raw = static_cast<std::size_t>(std::floor(batch_fraction * static_cast<double>(n) + 0.5));
    return std::max<std::size_t>(1, raw);
}

auto make_batches(std::size_t n, std::size_t batch_size, Rng& rng) -> std::vector<std::vector<std::size_t>>
{
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) {
        order[i] = i;
    }
    for (std::size_t i = n; i > 1; --i) {
        std::swap(order[i - 1], order[uniform_index(rng, i)]);
    }
    std::vector<std::vector<std::size_t>> batches;
    for (std::size_t start = 0; start < n; start += batch_size) {
        auto const stop = std::min(n, start + batch_size);
        batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start), order.begin() + static_cast<std::ptrdiff_t>(stop));
    }
    return batches;
}

auto mean_loss(ProgramTree const& tree, std::span<LabeledImage const> data) -> double
{
    double sum = 0.0;
    std::size_t n = 0;
    for (auto const& item : data) {
        try {
            sum += ce_loss(sigmoid(evaluate(tree, item.image)), target_for_label(item.label));
            ++n;
        } catch (ImageTooSmall const&) {
        } catch (EmptyWindow const&) {
        }
    }
    return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

auto batch_gradient(ProgramTree const& tree, std::span<LabeledImage const> data, std::span<std::size_t const> batch, GradOptions const& opts) -> GradientSet
{
    GradientSet total;
    for (auto conv : tree.convolve_nodes()) {
        total[conv] = Filter {};
    }
    for (auto idx : batch) {
        auto const& item = data[idx];
        GradientSet g;
        try {
            g = backward(forward(tree, item.image), target_for_label(item.label), opts);
        } catch (ImageTooSmall const&) {
            continue;
        } catch (EmptyWindow const&) {
            continue;
        }
        for (auto const& [node, dw] : g) {
            auto& acc = total[node];
            for (std::size_t k = 0; k < dw.coefficients.size(); ++k) {
                acc.coefficients[k] += dw.coefficients[k];
            }
        }
    }
    auto const scale = batch.empty() ? 0.0 : 1.0 / static_cast<double>(batch.size());
    for (auto& [node, acc] : total) {
        for (auto& v : acc.coefficients) {
            v *= scale;
        }
    }
    return total;
}

auto sgd(ProgramTree const& tree, std::span<LabeledImage const> train, LocalSearchConfig const& cfg, Rng& rng) -> ProgramTree
{
    auto const convs = tree.convolve_nodes();
    if (convs.empty() || train.empty()) {
        return tree;
    }
    GradOptions const opts { cfg.agg_gradient, false };
    auto const batch_size = batch_size_for(train.size(), cfg.batch_fraction);
    auto current = tree;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (auto const& batch : make_batches(train.size(), batch_size, rng)) {
            auto const grads = batch_gradient(current, train, batch, opts);
            bool finite = true;
            for (auto const& [node, g] : grads) {
                for (auto v : g.coefficients) {
                    finite = finite && std::isfinite(v);
                }
            }
            // A non-finite step would poison the genotype; skip the batch.
            if (!finite) {
                continue;
            }
            for (auto const& [node, g] : grads) {
                auto f = current.filter_of(node);
                for (std::size_t k = 0; k < f.coefficients.size(); ++k) {
                    f.coefficients[k] -= cfg.learning_rate * g.coefficients[k];
                }
                current = current.with_filter(node, f);
            }
        }
    }
    return current;
}

auto should_run_ls(int generation, LocalSearchConfig const& cfg) -> bool
{
    return generation >= 0 && generation % cfg.period == 0;
}

auto apply_ls_to_elite(Population pop, std::span<LabeledImage const> train, LocalSearchConfig const& cfg, Rng& rng) -> Population
{
    auto const order = rank(pop);
    auto const k = std::min(cfg.top_k, pop.size());
    std::vector<std::size_t> const elite(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
    for (auto idx : elite) {
        auto& ind = pop.individuals[idx];
        if (ind.tree.convolve_nodes().empty()) {
            continue;
        }
        ind.tree = sgd(ind.tree, train, cfg, rng);
        ind.fitness = fitness(ind.tree, train);
    }
    return pop;
}

auto final_polish(Individual const& best, std::span<LabeledImage const> train, LocalSearchConfig const& cfg, Rng& rng) -> Individual
{
    auto long_run = cfg;
    long_run.epochs = cfg.final_epochs;
    Individual out;
    out.tree = sgd(best.tree, train, long_run, rng);
    out.fitness = out.tree == best.tree && best.fitness ? best.fitness : std::optional<double>(fitness(out.tree, train));
    return out;
}

} // namespace memegp
