#include <doctest.h>

#include <cctype>
#include <set>

#include "memegp/errors.hpp"
#include "memegp/program.hpp"
#include "support.hpp"

using namespace memegp;
using namespace testsupport;

namespace {

auto figure_tree(Filter const& f1, Filter const& f2, WindowSpec const& w1, WindowSpec const& w2) -> ProgramTree
{
    return tree({ op(NodeKind::Sub),
        op(NodeKind::AggMin), op(NodeKind::Convolve), op(NodeKind::Pool), input(), filter_node(f1), window_node(w1),
        op(NodeKind::AggStd), op(NodeKind::Convolve), input(), filter_node(f2), window_node(w2) });
}

/// Minimal DOT checker: digraph ID { (node|edge|default-attr) statements }.
/// Returns the number of declared nodes and edges, or -1 on a syntax error.
struct DotShape {
    int nodes { -1 };
    int edges { -1 };
};

auto check_dot(std::string const& text) -> DotShape
{
    std::vector<std::string> toks;
    for (std::size_t i = 0; i < text.size();) {
        auto const c = text[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
        } else if (std::isalnum(static_cast<unsigned char>(c)) || c == '_') {
            auto j = i;
            while (j < text.size() && (std::isalnum(static_cast<unsigned char>(text[j])) || text[j] == '_')) {
                ++j;
            }
            toks.push_back(text.substr(i, j - i));
            i = j;
        } else if (c == '"') {
            auto j = i + 1;
            while (j < text.size() && text[j] != '"') {
                if (text[j] == '\\') {
                    ++j;
                }
                if (text[j] == '\n') {
                    return {};
                }
                ++j;
            }
            if (j >= text.size()) {
                return {};
            }
            toks.push_back("\"");
            i = j + 1;
        } else if (c == '-' && i + 1 < text.size() && text[i + 1] == '>') {
            toks.push_back("->");
            i += 2;
        } else if (std::string("{}[];,=").find(c) != std::string::npos) {
            toks.emplace_back(1, c);
            ++i;
        } else {
            return {};
        }
    }
    std::size_t p = 0;
    auto at = [&](std::string const& s) { return p < toks.size() && toks[p] == s; };
    auto is_id = [&] { return p < toks.size() && (std::isalnum(static_cast<unsigned char>(toks[p][0])) || toks[p][0] == '_'); };
    auto attrs = [&]() -> bool {
        if (!at("[")) {
            return true;
        }
        ++p;
        while (!at("]")) {
            if (!is_id()) {
                return false;
            }
            ++p;
            if (!at("=")) {
                return false;
            }
            ++p;
            if (!(is_id() || at("\""))) {
                return false;
            }
            ++p;
            if (at(",")) {
                ++p;
            }
        }
        ++p;
        return true;
    };
    if (!at("digraph")) {
        return {};
    }
    ++p;
    if (is_id()) {
        ++p;
    }
    if (!at("{")) {
        return {};
    }
    ++p;
    std::set<std::string> declared;
    DotShape shape { 0, 0 };
    while (!at("}")) {
        if (p >= toks.size()) {
            return {};
        }
        if (at("node") || at("edge") || at("graph")) {
            ++p;
            if (!attrs()) {
                return {};
            }
        } else if (is_id()) {
            auto const from = toks[p++];
            if (at("->")) {
                ++p;
                if (!is_id() || !declared.count(from) || !declared.count(toks[p])) {
                    return {};
                }
                ++p;
                ++shape.edges;
            } else {
                declared.insert(from);
                ++shape.nodes;
            }
            if (!attrs()) {
                return {};
            }
        } else {
            return {};
        }
        if (at(";")) {
            ++p;
        }
    }
    ++p;
    return p == toks.size() ? shape : DotShape {};
}

} // namespace

TEST_CASE("generate: depth 2 yields agg(input, window)")
{
    Rng rng(1);
    for (int i = 0; i < 100; ++i) {
        auto const t = generate(rng, 2, 2);
        REQUIRE(t.node_count() == 3);
        CHECK(is_aggregation(t.node(0).kind));
        CHECK(t.node(1).kind == NodeKind::Input);
        CHECK(t.node(2).kind == NodeKind::WindowTerm);
    }
}

TEST_CASE("generate: 1000 trees pass the validator")
{
    Rng rng(2);
    for (int i = 0; i < 1000; ++i) {
        auto const t = generate(rng, 2, 6);
        auto const err = validate(t, { 2, 6 });
        CHECK_MESSAGE(!err, *err);
    }
}

TEST_CASE("generate: fixed seed is reproducible")
{
    Rng a(42);
    Rng b(42);
    CHECK(to_sexpr(generate(a, 2, 6)) == to_sexpr(generate(b, 2, 6)));
}

TEST_CASE("validate: rejects bad roots, missing aggregation and depth")
{
    CHECK_FALSE(is_valid(tree({ const_node(1.0) })));
    CHECK_FALSE(is_valid(tree({ op(NodeKind::Add), const_node(1.0), const_node(2.0) })));
    CHECK_FALSE(is_valid(tree({ op(NodeKind::Pool), input() })));
    CHECK(is_valid(agg_tree(NodeKind::AggMean)));
    CHECK_FALSE(is_valid(agg_tree(NodeKind::AggMean), { 4, 10 }));
    // Children of the wrong type.
    CHECK_FALSE(is_valid(tree({ op(NodeKind::AggMean), input(), const_node(1.0) })));
}

TEST_CASE("ProgramTree: prefix structure queries")
{
    Rng rng(3);
    auto const t = figure_tree(random_filter(rng), random_filter(rng), full_window(), full_window());
    CHECK(t.node_count() == 12);
    CHECK(t.depth() == 5);
    CHECK(t.children(0) == std::vector<std::size_t> { 1, 7 });
    CHECK(t.subtree_end(1) == 7);
    CHECK(t.convolve_nodes() == std::vector<std::size_t> { 2, 8 });
    CHECK(t.level(4) == 5);
    CHECK(t.subtree_depth(7) == 3);
    CHECK(t.output_type(3) == ValueType::Image);
    CHECK_THROWS_AS(ProgramTree(std::vector<Node> { op(NodeKind::Add), const_node(1.0) }), std::invalid_argument);
}

TEST_CASE("evaluate: mean of a constant image")
{
    CHECK(evaluate(agg_tree(NodeKind::AggMean), filled(6, 6, 0.5)) == doctest::Approx(0.5));
}

TEST_CASE("evaluate: protected division by zero is zero")
{
    auto const t = tree({ op(NodeKind::Add), op(NodeKind::Div), const_node(1.0), const_node(0.0), op(NodeKind::AggMax), input(), window_node(full_window()) });
    CHECK(evaluate(t, filled(4, 4, 0.0)) == 0.0);
    auto const d = tree({ op(NodeKind::Div), const_node(1.0), op(NodeKind::AggMax), input(), window_node(full_window()) });
    CHECK(evaluate(d, filled(4, 4, 0.0)) == 0.0);
    CHECK(evaluate(d, filled(4, 4, 0.25)) == doctest::Approx(4.0));
}

TEST_CASE("evaluate: composite tree equals hand composition of the operators")
{
    Rng rng(4);
    for (int i = 0; i < 20; ++i) {
        auto const f1 = random_filter(rng);
        auto const f2 = random_filter(rng);
        auto const w1 = random_window(rng);
        auto const w2 = random_window(rng);
        auto const img = random_image(rng, 16, 16);

        auto const left = oracle_correlate(oracle_pool(img), f1, true);
        auto const right = oracle_correlate(img, f2, true);
        auto collect = [](Image const& x, WindowSpec const& w) {
            std::vector<double> v;
            for (auto const& p : realize_window(w, x.height(), x.width())) {
                v.push_back(x(p.row, p.col));
            }
            return oracle_stats(v);
        };
        auto const want = collect(left, w1)[0] - collect(right, w2)[3];
        CHECK(std::abs(evaluate(figure_tree(f1, f2, w1, w2), img) - want) <= 1e-12);
    }
}

TEST_CASE("evaluate: image too small propagates")
{
    auto const t = tree({ op(NodeKind::AggMean), op(NodeKind::Convolve), op(NodeKind::Pool), input(), filter_node({}), window_node(full_window()) });
    CHECK_THROWS_AS(evaluate(t, filled(5, 5, 1.0)), ImageTooSmall);
}

TEST_CASE("evaluate: deterministic")
{
    Rng rng(5);
    for (int i = 0; i < 50; ++i) {
        auto const t = generate(rng, 2, 6);
        auto const img = random_image(rng, 24, 24);
        try {
            CHECK(evaluate(t, img) == evaluate(t, img));
        } catch (ImageTooSmall const&) {
        }
    }
}

TEST_CASE("sigmoid and classification boundary")
{
    CHECK(sigmoid(0.0) == 0.5);
    CHECK(sigmoid(500.0) <= 1.0);
    CHECK(std::isfinite(sigmoid(-500.0)));
    CHECK(sigmoid(-500.0) >= 0.0);
    CHECK(label_from_output(0.0) == 1);
    CHECK(label_from_output(10.0) == 0);
    CHECK(label_from_output(-10.0) == 1);
    CHECK(target_for_label(0) == 1);
    CHECK(target_for_label(1) == 0);
}

TEST_CASE("classify: labels are 0 or 1")
{
    Rng rng(6);
    for (int i = 0; i < 100; ++i) {
        auto const t = generate(rng, 2, 5);
        try {
            auto const c = classify(t, random_image(rng, 20, 20));
            CHECK((c == 0 || c == 1));
        } catch (ImageTooSmall const&) {
        }
    }
}

TEST_CASE("sexpr: round trip of the smallest tree")
{
    auto const t = agg_tree(NodeKind::AggStd, { WindowShape::Ellipse, 0.1, 0.2, 0.3, 0.4 });
    auto const text = to_sexpr(t);
    CHECK(text == "(agg-std (input) (window ellipse 0.1 0.2 0.3 0.4))");
    CHECK(parse_program(text) == t);
}

TEST_CASE("sexpr: coefficients survive at full precision")
{
    Filter f;
    for (std::size_t k = 0; k < 9; ++k) {
        f.coefficients[k] = 0.123456789 + 1e-10 * static_cast<double>(k) - 1.0 / 3.0;
    }
    auto const t = conv_tree(f);
    auto const back = parse_program(to_sexpr(t));
    CHECK(back.filter_of(1).coefficients == f.coefficients);
}

TEST_CASE("sexpr: random trees round trip")
{
    Rng rng(7);
    for (int i = 0; i < 300; ++i) {
        auto const t = generate(rng, 2, 8);
        CHECK(parse_program(to_sexpr(t)) == t);
    }
}

TEST_CASE("sexpr: malformed text raises ParseError with a position")
{
    auto const text = to_sexpr(conv_tree(Filter {}));
    CHECK_THROWS_AS(parse_program(text.substr(0, text.size() - 3)), ParseError);
    CHECK_THROWS_AS(parse_program(""), ParseError);
    CHECK_THROWS_AS(parse_program("(agg-mean (input))"), ParseError);
    CHECK_THROWS_AS(parse_program("(pool (input))"), ParseError);
    CHECK_THROWS_AS(parse_program("(agg-mean (input) (window blob 0 0 1 1))"), ParseError);
    CHECK_THROWS_AS(parse_program("(agg-mean (input) (window rect 0 0 1 1)) trailing"), ParseError);
    try {
        parse_program("(agg-mean (input) (bogus))");
        FAIL("expected ParseError");
    } catch (ParseError const& e) {
        CHECK(e.position() == 19);
    }
}

TEST_CASE("to_dot: node and edge counts, grammar check")
{
    auto const small = check_dot(to_dot(agg_tree(NodeKind::AggMin)));
    CHECK(small.nodes == 3);
    CHECK(small.edges == 2);

    Rng rng(8);
    auto const fig = figure_tree(random_filter(rng), random_filter(rng), random_window(rng), random_window(rng));
    CHECK(check_dot(to_dot(fig)).nodes == static_cast<int>(fig.node_count()));

    for (int i = 0; i < 200; ++i) {
        auto const t = generate(rng, 2, 8);
        auto const shape = check_dot(to_dot(t));
        CHECK(shape.nodes == static_cast<int>(t.node_count()));
        CHECK(shape.edges == static_cast<int>(t.node_count()) - 1);
    }
    CHECK(check_dot("digraph { a -> b; }").nodes == -1);
}
