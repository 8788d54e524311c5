#include <doctest.h>

#include <cmath>

#include "memegp/errors.hpp"
#include "memegp/evolution.hpp"
#include "support.hpp"

using namespace memegp;
using namespace testsupport;

namespace {

auto population_with(std::vector<double> const& fitnesses) -> Population
{
    Population pop;
    for (auto f : fitnesses) {
        pop.individuals.push_back({ agg_tree(NodeKind::AggMean), f });
    }
    return pop;
}

auto synth(std::uint64_t seed, std::size_t n = 20) -> LabeledDataset
{
    Rng rng(seed);
    return synth_bright_quadrant(n, 16, 0.05, rng);
}

} // namespace

TEST_CASE("tournament: k = 1 is uniform")
{
    auto const pop = population_with({ 0.1, 0.2, 0.3, 0.4 });
    Rng rng(1);
    std::vector<int> hits(4);
    int const trials = 40000;
    for (int i = 0; i < trials; ++i) {
        ++hits[tournament_index(pop, 1, rng)];
    }
    for (auto h : hits) {
        CHECK(std::abs(h / static_cast<double>(trials) - 0.25) < 0.015);
    }
}

TEST_CASE("tournament: k = n finds the best at the coverage rate")
{
    std::size_t const n = 10;
    std::vector<double> f(n);
    for (std::size_t i = 0; i < n; ++i) {
        f[i] = static_cast<double>(i) / 10.0;
    }
    auto const pop = population_with(f);
    Rng rng(2);
    int best = 0;
    int const trials = 100000;
    for (int i = 0; i < trials; ++i) {
        best += tournament_index(pop, n, rng) == n - 1 ? 1 : 0;
    }
    auto const expected = 1.0 - std::pow((n - 1.0) / n, static_cast<double>(n));
    CHECK(std::abs(best / static_cast<double>(trials) - expected) < 0.01);
}

TEST_CASE("tournament: two individuals with k = 7")
{
    auto const pop = population_with({ 0.0, 1.0 });
    Rng rng(3);
    int fit = 0;
    int const trials = 100000;
    for (int i = 0; i < trials; ++i) {
        fit += tournament_index(pop, 7, rng) == 1 ? 1 : 0;
    }
    CHECK(std::abs(fit / static_cast<double>(trials) - (1.0 - std::pow(0.5, 7))) < 0.005);
}

TEST_CASE("tournament: ties prefer the smaller tree")
{
    Population pop;
    pop.individuals.push_back({ conv_tree(Filter {}), 0.5 });
    pop.individuals.push_back({ agg_tree(NodeKind::AggMax), 0.5 });
    Rng rng(4);
    int small = 0;
    for (int i = 0; i < 1000; ++i) {
        small += tournament_index(pop, 7, rng) == 1 ? 1 : 0;
    }
    // Loses only when all seven draws hit the larger tree.
    CHECK(small > 980);
    CHECK(fitter(pop.individuals[1], pop.individuals[0]));
    CHECK(rank(pop).front() == 1);
}

TEST_CASE("tournament: winners depend only on fitness order")
{
    auto a = population_with({ 0.1, 0.7, 0.3, 0.9, 0.5 });
    auto b = a;
    for (auto& ind : b.individuals) {
        *ind.fitness *= 3.7;
    }
    Rng ra(5);
    Rng rb(5);
    for (int i = 0; i < 1000; ++i) {
        CHECK(tournament_index(a, 3, ra) == tournament_index(b, 3, rb));
    }
}

TEST_CASE("breeding operator frequencies")
{
    EvolutionConfig const cfg;
    Rng rng(6);
    std::array<int, 3> counts {};
    int const n = 100000;
    for (int i = 0; i < n; ++i) {
        ++counts[static_cast<std::size_t>(choose_operator(rng, cfg))];
    }
    CHECK(std::abs(counts[0] / double(n) - 0.75) < 0.01);
    CHECK(std::abs(counts[1] / double(n) - 0.20) < 0.01);
    CHECK(std::abs(counts[2] / double(n) - 0.05) < 0.01);
}

TEST_CASE("crossover: 1000 random pairs stay legal")
{
    Rng rng(7);
    for (int i = 0; i < 1000; ++i) {
        auto const a = generate(rng, 2, 6);
        auto const b = generate(rng, 2, 6);
        auto const [c, d] = crossover(a, b, rng);
        CHECK(is_valid(c));
        CHECK(is_valid(d));
    }
}

TEST_CASE("crossover: root swap keeps double roots")
{
    Rng rng(8);
    auto const a = generate(rng, 3, 5);
    auto const b = generate(rng, 3, 5);
    for (int i = 0; i < 20; ++i) {
        auto const res = crossover_at(a, 0, b, rng);
        REQUIRE(res.has_value());
        CHECK(res->first.output_type(0) == ValueType::Double);
        CHECK(res->second.output_type(0) == ValueType::Double);
    }
}

TEST_CASE("crossover: no matching type returns nullopt, parents on fallback")
{
    Rng rng(9);
    auto const a = conv_tree(Filter {});
    auto const b = agg_tree(NodeKind::AggMin);
    // Filter-typed node in a; b has no filter node.
    CHECK_FALSE(crossover_at(a, 3, b, rng).has_value());
    auto const [c, d] = crossover(b, b, rng, { 2, 2 });
    CHECK(c == b);
    CHECK(d == b);
}

TEST_CASE("mutation: window leaf changes only the window")
{
    Rng rng(10);
    auto const t = conv_tree(random_filter(rng));
    auto const m = mutate_at(t, 4, rng);
    REQUIRE(m.node_count() == t.node_count());
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(m.node(i) == t.node(i));
    }
    CHECK(m.node(4).kind == NodeKind::WindowTerm);
    CHECK_FALSE(m.node(4) == t.node(4));
}

TEST_CASE("mutation: 1000 offspring are legal")
{
    Rng rng(11);
    for (int i = 0; i < 1000; ++i) {
        CHECK(is_valid(mutate(generate(rng, 2, 8), rng)));
    }
}

TEST_CASE("mutation: parent returned when every replacement would break the depth cap")
{
    // Eight nested adds over agg(input, window): depth exactly 10.
    std::vector<Node> nodes;
    for (int i = 0; i < 8; ++i) {
        nodes.push_back(op(NodeKind::Add));
    }
    nodes.push_back(op(NodeKind::AggMean));
    nodes.push_back(input());
    nodes.push_back(window_node(full_window()));
    for (int i = 0; i < 8; ++i) {
        nodes.push_back(const_node(0.5));
    }
    ProgramTree const deep(nodes);
    REQUIRE(deep.depth() == 10);
    REQUIRE(is_valid(deep));
    MutationConfig cfg;
    cfg.min_subtree_depth = 2;
    Rng rng(12);
    CHECK(mutate_at(deep, 9, rng, {}, cfg) == deep);
}

TEST_CASE("config validation")
{
    EvolutionConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.mutation_rate = 0.5;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = {};
    cfg.tournament_size = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    CHECK(EvolutionConfig::full_scale().population_size == 1024);
    CHECK(parse_mode("lse") == Mode::LSE);
    CHECK(to_string(Mode::LS) == "ls");
    CHECK_THROWS(parse_mode("fast"));
}

TEST_CASE("breed keeps population size and the elite")
{
    auto const data = synth(13);
    EvolutionConfig cfg;
    cfg.population_size = 40;
    Rng rng(13);
    auto pop = initial_population(cfg, rng);
    evaluate_population(pop, data.items);
    auto const next = breed(pop, cfg, rng);
    CHECK(next.size() == 40);
    CHECK(next.generation_index == 1);
    CHECK(next.individuals.front().tree == pop.individuals[rank(pop).front()].tree);
}

TEST_CASE("run: zero generations returns the best initial individual")
{
    auto const data = synth(14);
    EvolutionConfig cfg;
    cfg.population_size = 30;
    cfg.generations = 0;
    cfg.seed = 3;
    auto const res = run(cfg, data.items, data.items);
    CHECK(res.log.generations.empty());
    Rng rng(3);
    auto pop = initial_population(cfg, rng);
    evaluate_population(pop, data.items);
    CHECK(res.best.tree == pop.individuals[rank(pop).front()].tree);
}

TEST_CASE("run: same seed gives the same log, best fitness never drops")
{
    auto const data = synth(15);
    EvolutionConfig cfg;
    cfg.population_size = 30;
    cfg.generations = 8;
    cfg.seed = 9;
    // Harder task so the run does not stop at generation 0.
    Rng noisy(15);
    auto hard = synth_bright_quadrant(20, 16, 0.29, noisy);
    for (auto& item : hard.items) {
        item.label = static_cast<int>(uniform_index(noisy, 2));
    }
    auto const a = run(cfg, hard.items, data.items);
    auto const b = run(cfg, hard.items, data.items);
    REQUIRE(a.log.generations.size() == b.log.generations.size());
    for (std::size_t i = 0; i < a.log.generations.size(); ++i) {
        CHECK(a.log.generations[i].best_fitness == b.log.generations[i].best_fitness);
        CHECK(a.log.generations[i].mean_fitness == b.log.generations[i].mean_fitness);
        CHECK(a.log.generations[i].mean_size == b.log.generations[i].mean_size);
        if (i > 0) {
            CHECK(a.log.generations[i].best_fitness >= a.log.generations[i - 1].best_fitness);
        }
    }
    CHECK(a.best.tree == b.best.tree);
}

TEST_CASE("run: early stop at perfect fitness, LSE adds one final polish")
{
    auto const data = synth(16);
    EvolutionConfig cfg;
    cfg.population_size = 60;
    cfg.generations = 30;
    cfg.mode = Mode::LSE;
    cfg.local_search.top_k = 5;
    cfg.local_search.epochs = 2;
    cfg.local_search.final_epochs = 7;
    auto const res = run(cfg, data.items, data.items);
    CHECK(res.log.early_stopped);
    CHECK(res.log.generations.back().best_fitness == 1.0);
    int polish = 0;
    for (auto const& ev : res.log.local_search) {
        if (ev.kind == "final-polish") {
            ++polish;
            CHECK(ev.epochs == 7);
        } else {
            CHECK(ev.kind == "elite");
            CHECK(ev.generation % 10 == 0);
        }
    }
    CHECK(polish == 1);
}
