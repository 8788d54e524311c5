#include "memegp/program.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

#include "memegp/errors.hpp"

namespace memegp {

namespace {

constexpr std::array<ValueType, 2> kDoubleDouble { ValueType::Double, ValueType::Double };
constexpr std::array<ValueType, 2> kImageWindow { ValueType::Image, ValueType::Window };
constexpr std::array<ValueType, 2> kImageFilter { ValueType::Image, ValueType::Filter };
constexpr std::array<ValueType, 1> kImage { ValueType::Image };

constexpr std::array kArithmetic { NodeKind::Add, NodeKind::Sub, NodeKind::Mul, NodeKind::Div };
constexpr std::array kAggregations { NodeKind::AggMin, NodeKind::AggMax, NodeKind::AggMean, NodeKind::AggStd };

} // namespace

auto signature(NodeKind kind) -> Signature
{
    switch (kind) {
    case NodeKind::Add:
    case NodeKind::Sub:
    case NodeKind::Mul:
    case NodeKind::Div:
        return { ValueType::Double, kDoubleDouble };
    case NodeKind::AggMin:
    case NodeKind::AggMax:
    case NodeKind::AggMean:
    case NodeKind::AggStd:
        return { ValueType::Double, kImageWindow };
    case NodeKind::Convolve:
        return { ValueType::Image, kImageFilter };
    case NodeKind::Pool:
        return { ValueType::Image, kImage };
    case NodeKind::Input:
        return { ValueType::Image, {} };
    case NodeKind::FilterTerm:
        return { ValueType::Filter, {} };
    case NodeKind::WindowTerm:
        return { ValueType::Window, {} };
    case NodeKind::Const:
        return { ValueType::Double, {} };
    }
    throw std::logic_error("unknown node kind");
}

auto arity(NodeKind kind) -> std::size_t { return signature(kind).inputs.size(); }

auto is_aggregation(NodeKind kind) -> bool
{
    return std::find(kAggregations.begin(), kAggregations.end(), kind) != kAggregations.end();
}

auto is_arithmetic(NodeKind kind) -> bool
{
    return std::find(kArithmetic.begin(), kArithmetic.end(), kind) != kArithmetic.end();
}

auto agg_stat(NodeKind kind) -> AggStat
{
    switch (kind) {
    case NodeKind::AggMin:
        return AggStat::Min;
    case NodeKind::AggMax:
        return AggStat::Max;
    case NodeKind::AggMean:
        return AggStat::Mean;
    case NodeKind::AggStd:
        return AggStat::Std;
    default:
        throw std::logic_error("not an aggregation node");
    }
}

auto token(NodeKind kind) -> std::string_view
{
    switch (kind) {
    case NodeKind::Add:
        return "add";
    case NodeKind::Sub:
        return "sub";
    case NodeKind::Mul:
        return "mul";
    case NodeKind::Div:
        return "div";
    case NodeKind::AggMin:
        return "agg-min";
    case NodeKind::AggMax:
        return "agg-max";
    case NodeKind::AggMean:
        return "agg-mean";
    case NodeKind::AggStd:
        return "agg-std";
    case NodeKind::Convolve:
        return "convolve";
    case NodeKind::Pool:
        return "pool";
    case NodeKind::Input:
        return "input";
    case NodeKind::FilterTerm:
        return "filter";
    case NodeKind::WindowTerm:
        return "window";
    case NodeKind::Const:
        return "const";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// ProgramTree

ProgramTree::ProgramTree(std::vector<Node> nodes)
    : nodes_(std::move(nodes))
{
    if (nodes_.empty()) {
        throw std::invalid_argument("program tree must have at least one node");
    }
    auto const n = nodes_.size();
    ends_.assign(n, 0);
    levels_.assign(n, 0);

    // Walk the prefix sequence with an explicit stack of open slots.
    struct Open {
        std::size_t index;
        std::size_t remaining;
    };
    std::vector<Open> stack;
    for (std::size_t i = 0; i < n; ++i) {
        if (i > 0 && stack.empty()) {
            throw std::invalid_argument("trailing nodes after a complete program");
        }
        levels_[i] = static_cast<int>(stack.size()) + 1;
        depth_ = std::max(depth_, levels_[i]);
        if (!stack.empty()) {
            --stack.back().remaining;
        }
        stack.push_back({ i, arity(nodes_[i].kind) });
        while (!stack.empty() && stack.back().remaining == 0) {
            ends_[stack.back().index] = i + 1;
            stack.pop_back();
        }
    }
    if (!stack.empty()) {
        throw std::invalid_argument("incomplete program: missing child nodes");
    }
}

auto ProgramTree::children(std::size_t i) const -> std::vector<std::size_t>
{
    std::vector<std::size_t> out;
    auto const k = arity(nodes_[i].kind);
    out.reserve(k);
    auto child = i + 1;
    for (std::size_t j = 0; j < k; ++j) {
        out.push_back(child);
        child = ends_[child];
    }
    return out;
}

auto ProgramTree::subtree_depth(std::size_t i) const -> int
{
    int deepest = levels_[i];
    for (auto j = i; j < ends_[i]; ++j) {
        deepest = std::max(deepest, levels_[j]);
    }
    return deepest - levels_[i] + 1;
}

auto ProgramTree::output_type(std::size_t i) const -> ValueType { return signature(nodes_[i].kind).output; }

auto ProgramTree::convolve_nodes() const -> std::vector<std::size_t>
{
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (nodes_[i].kind == NodeKind::Convolve) {
            out.push_back(i);
        }
    }
    return out;
}

auto ProgramTree::filter_of(std::size_t conv_index) const -> Filter const&
{
    // The filter is the second child: it follows the image subtree.
    return nodes_[ends_[conv_index + 1]].filter();
}

auto ProgramTree::with_filter(std::size_t conv_index, Filter const& filter) const -> ProgramTree
{
    auto copy = *this;
    copy.nodes_[ends_[conv_index + 1]].payload = filter;
    return copy;
}

auto ProgramTree::subtree(std::size_t i) const -> std::span<Node const>
{
    return std::span<Node const>(nodes_).subspan(i, ends_[i] - i);
}

auto ProgramTree::replace_subtree(std::size_t i, std::span<Node const> replacement) const -> ProgramTree
{
    std::vector<Node> out;
    out.reserve(nodes_.size() - (ends_[i] - i) + replacement.size());
    out.insert(out.end(), nodes_.begin(), nodes_.begin() + static_cast<std::ptrdiff_t>(i));
    out.insert(out.end(), replacement.begin(), replacement.end());
    out.insert(out.end(), nodes_.begin() + static_cast<std::ptrdiff_t>(ends_[i]), nodes_.end());
    return ProgramTree(std::move(out));
}

// ---------------------------------------------------------------------------
// Validation

auto validate(ProgramTree const& tree, DepthBounds bounds) -> std::optional<std::string>
{
    if (tree.empty()) {
        return "empty tree";
    }
    if (tree.output_type(0) != ValueType::Double) {
        return "root must produce a double";
    }
    bool has_aggregation = false;
    for (std::size_t i = 0; i < tree.node_count(); ++i) {
        auto const& node = tree.node(i);
        auto const sig = signature(node.kind);
        auto const kids = tree.children(i);
        for (std::size_t k = 0; k < kids.size(); ++k) {
            if (tree.output_type(kids[k]) != sig.inputs[k]) {
                return "type mismatch in child " + std::to_string(k) + " of node " + std::to_string(i) + " (" + std::string(token(node.kind)) + ")";
            }
        }
        bool payload_ok = true;
        switch (node.kind) {
        case NodeKind::FilterTerm:
            payload_ok = std::holds_alternative<Filter>(node.payload);
            break;
        case NodeKind::WindowTerm:
            payload_ok = std::holds_alternative<WindowSpec>(node.payload) && node.window().is_valid();
            break;
        case NodeKind::Const:
            payload_ok = std::holds_alternative<double>(node.payload);
            break;
        default:
            payload_ok = std::holds_alternative<std::monostate>(node.payload);
        }
        if (!payload_ok) {
            return "bad payload on node " + std::to_string(i) + " (" + std::string(token(node.kind)) + ")";
        }
        has_aggregation = has_aggregation || is_aggregation(node.kind);
    }
    if (!has_aggregation) {
        return "tree never reads the input image (no aggregation node)";
    }
    if (tree.depth() < bounds.min || tree.depth() > bounds.max) {
        return "depth " + std::to_string(tree.depth()) + " outside [" + std::to_string(bounds.min) + ", " + std::to_string(bounds.max) + "]";
    }
    return std::nullopt;
}

auto is_valid(ProgramTree const& tree, DepthBounds bounds) -> bool { return !validate(tree, bounds).has_value(); }

// ---------------------------------------------------------------------------
// Generation

auto random_filter(Rng& rng) -> Filter
{
    Filter f;
    for (auto& w : f.coefficients) {
        w = uniform_real(rng, -1.0, 1.0);
    }
    return f;
}

auto random_window(Rng& rng) -> WindowSpec
{
    WindowSpec w;
    w.shape = static_cast<WindowShape>(uniform_index(rng, 4));
    w.pos_x = uniform_real(rng, 0.0, 1.0);
    w.pos_y = uniform_real(rng, 0.0, 1.0);
    // (0,1]: flip the half-open [0,1) draw.
    w.size_w = 1.0 - uniform_real(rng, 0.0, 1.0);
    w.size_h = 1.0 - uniform_real(rng, 0.0, 1.0);
    return w;
}

auto random_constant(Rng& rng) -> double { return uniform_real(rng, -1.0, 1.0); }

namespace {

    void grow_into(std::vector<Node>& out, Rng& rng, ValueType type, int max_depth, bool full, GenerateOptions const& opts)
    {
        switch (type) {
        case ValueType::Filter:
            out.push_back({ NodeKind::FilterTerm, random_filter(rng) });
            return;
        case ValueType::Window:
            out.push_back({ NodeKind::WindowTerm, random_window(rng) });
            return;
        case ValueType::Image: {
            if (max_depth <= 1) {
                out.push_back({ NodeKind::Input, {} });
                return;
            }
            double const w_input = full ? 0.0 : opts.input_weight;
            auto const pick = uniform_real(rng, 0.0, w_input + 2.0);
            if (pick < w_input) {
                out.push_back({ NodeKind::Input, {} });
            } else if (pick < w_input + 1.0) {
                out.push_back({ NodeKind::Convolve, {} });
                grow_into(out, rng, ValueType::Image, max_depth - 1, full, opts);
                grow_into(out, rng, ValueType::Filter, max_depth - 1, full, opts);
            } else {
                out.push_back({ NodeKind::Pool, {} });
                grow_into(out, rng, ValueType::Image, max_depth - 1, full, opts);
            }
            return;
        }
        case ValueType::Double: {
            double const w_const = (max_depth <= 1 || !full) ? opts.const_weight : 0.0;
            double const w_agg = max_depth >= 2 ? 1.0 : 0.0;
            double const w_arith = max_depth >= 3 ? 1.0 : 0.0;
            auto const total = w_const + w_agg + w_arith;
            auto const pick = total > 0.0 ? uniform_real(rng, 0.0, total) : 0.0;
            if (max_depth <= 1 || pick < w_const) {
                out.push_back({ NodeKind::Const, random_constant(rng) });
            } else if (pick < w_const + w_agg) {
                out.push_back({ kAggregations[uniform_index(rng, kAggregations.size())], {} });
                grow_into(out, rng, ValueType::Image, max_depth - 1, full, opts);
                grow_into(out, rng, ValueType::Window, max_depth - 1, full, opts);
            } else {
                out.push_back({ kArithmetic[uniform_index(rng, kArithmetic.size())], {} });
                grow_into(out, rng, ValueType::Double, max_depth - 1, full, opts);
                grow_into(out, rng, ValueType::Double, max_depth - 1, full, opts);
            }
            return;
        }
        }
    }

} // namespace

auto generate_subtree(Rng& rng, ValueType type, int max_depth, bool full, GenerateOptions const& opts) -> std::vector<Node>
{
    std::vector<Node> out;
    grow_into(out, rng, type, std::max(1, max_depth), full, opts);
    return out;
}

auto generate(Rng& rng, int depth_min, int depth_max, GenerateOptions const& opts) -> ProgramTree
{
    if (depth_min < 2 || depth_max < depth_min) {
        throw std::invalid_argument("generate needs 2 <= depth_min <= depth_max");
    }
    DepthBounds const bounds { depth_min, depth_max };
    for (int attempt = 0; attempt < 10000; ++attempt) {
        auto const target = depth_min + static_cast<int>(uniform_index(rng, static_cast<std::size_t>(depth_max - depth_min + 1)));
        auto const full = bernoulli(rng, 0.5);
        ProgramTree tree(generate_subtree(rng, ValueType::Double, target, full, opts));
        if (is_valid(tree, bounds)) {
            return tree;
        }
    }
    throw std::runtime_error("could not generate a legal tree");
}

// ---------------------------------------------------------------------------
// Evaluation

namespace {

    class Evaluator {
    public:
        Evaluator(ProgramTree const& tree, Image const& img)
            : tree_(tree)
            , img_(img)
        {
        }

        auto scalar(std::size_t i) -> double
        {
            auto const& node = tree_.node(i);
            switch (node.kind) {
            case NodeKind::Const:
                return node.constant();
            case NodeKind::Add:
            case NodeKind::Sub:
            case NodeKind::Mul:
            case NodeKind::Div: {
                auto const lhs_index = i + 1;
                auto const a = scalar(lhs_index);
                auto const b = scalar(tree_.subtree_end(lhs_index));
                switch (node.kind) {
                case NodeKind::Add:
                    return a + b;
                case NodeKind::Sub:
                    return a - b;
                case NodeKind::Mul:
                    return a * b;
                default:
                    return b == 0.0 ? 0.0 : a / b;
                }
            }
            case NodeKind::AggMin:
            case NodeKind::AggMax:
            case NodeKind::AggMean:
            case NodeKind::AggStd: {
                auto const img = image(i + 1);
                auto const& window = tree_.node(tree_.subtree_end(i + 1)).window();
                return aggregate(img, window, agg_stat(node.kind));
            }
            default:
                throw std::logic_error("node is not double-typed");
            }
        }

        auto image(std::size_t i) -> Image
        {
            auto const& node = tree_.node(i);
            switch (node.kind) {
            case NodeKind::Input:
                return img_;
            case NodeKind::Convolve:
                return convolve(image(i + 1), tree_.filter_of(i));
            case NodeKind::Pool:
                return pool(image(i + 1));
            default:
                throw std::logic_error("node is not image-typed");
            }
        }

    private:
        ProgramTree const& tree_;
        Image const& img_;
    };

} // namespace

auto evaluate(ProgramTree const& tree, Image const& img) -> double { return Evaluator(tree, img).scalar(0); }

auto sigmoid(double x) -> double
{
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    auto const e = std::exp(x);
    return e / (1.0 + e);
}

auto label_from_output(double output) -> int { return sigmoid(output) > 0.5 ? 0 : 1; }

auto classify(ProgramTree const& tree, Image const& img) -> int { return label_from_output(evaluate(tree, img)); }

} // namespace memegp
