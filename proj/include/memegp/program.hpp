#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "memegp/image_ops.hpp"
#include "memegp/random.hpp"

namespace memegp {

enum class ValueType { Double, Image, Filter, Window };

enum class NodeKind {
    Add,
    Sub,
    Mul,
    Div, // protected: 0 when the denominator is 0
    AggMin,
    AggMax,
    AggMean,
    AggStd,
    Convolve,
    Pool,
    Input,
    FilterTerm,
    WindowTerm,
    Const,
};

struct Signature {
    ValueType output;
    std::span<ValueType const> inputs;
};

auto signature(NodeKind kind) -> Signature;
auto arity(NodeKind kind) -> std::size_t;
auto is_aggregation(NodeKind kind) -> bool;
auto is_arithmetic(NodeKind kind) -> bool;
auto agg_stat(NodeKind kind) -> AggStat;
auto token(NodeKind kind) -> std::string_view;

/// One node of a prefix-ordered tree. Terminals carry their value in payload.
struct Node {
    NodeKind kind { NodeKind::Input };
    std::variant<std::monostate, Filter, WindowSpec, double> payload;

    [[nodiscard]] auto filter() const -> Filter const& { return std::get<Filter>(payload); }
    [[nodiscard]] auto window() const -> WindowSpec const& { return std::get<WindowSpec>(payload); }
    [[nodiscard]] auto constant() const -> double { return std::get<double>(payload); }

    friend auto operator==(Node const&, Node const&) -> bool = default;
};

struct DepthBounds {
    int min { 2 };
    int max { 10 };
};

/// Immutable expression tree stored in prefix order, so every subtree is a
/// contiguous slice. Depth counts nodes on the longest root-to-leaf path
/// (a lone root has depth 1).
class ProgramTree {
public:
    ProgramTree() = default;
    /// Throws std::invalid_argument unless `nodes` is exactly one complete
    /// prefix expression.
    explicit ProgramTree(std::vector<Node> nodes);

    [[nodiscard]] auto nodes() const noexcept -> std::span<Node const> { return nodes_; }
    [[nodiscard]] auto node(std::size_t i) const -> Node const& { return nodes_[i]; }
    [[nodiscard]] auto node_count() const noexcept -> std::size_t { return nodes_.size(); }
    [[nodiscard]] auto depth() const noexcept -> int { return depth_; }
    [[nodiscard]] auto empty() const noexcept -> bool { return nodes_.empty(); }

    /// One past the last node of the subtree rooted at i.
    [[nodiscard]] auto subtree_end(std::size_t i) const -> std::size_t { return ends_[i]; }
    [[nodiscard]] auto children(std::size_t i) const -> std::vector<std::size_t>;
    /// Depth of node i counted from the root (root = 1).
    [[nodiscard]] auto level(std::size_t i) const -> int { return levels_[i]; }
    /// Depth of the subtree rooted at i.
    [[nodiscard]] auto subtree_depth(std::size_t i) const -> int;
    [[nodiscard]] auto output_type(std::size_t i) const -> ValueType;

    [[nodiscard]] auto convolve_nodes() const -> std::vector<std::size_t>;
    [[nodiscard]] auto with_filter(std::size_t conv_index, Filter const& filter) const -> ProgramTree;
    /// Filter terminal feeding the Convolve node at conv_index.
    [[nodiscard]] auto filter_of(std::size_t conv_index) const -> Filter const&;

    /// Returns a copy with the subtree at i replaced by `replacement`.
    [[nodiscard]] auto replace_subtree(std::size_t i, std::span<Node const> replacement) const -> ProgramTree;
    [[nodiscard]] auto subtree(std::size_t i) const -> std::span<Node const>;

    friend auto operator==(ProgramTree const& a, ProgramTree const& b) -> bool { return a.nodes_ == b.nodes_; }

private:
    std::vector<Node> nodes_;
    std::vector<std::size_t> ends_;
    std::vector<int> levels_;
    int depth_ { 0 };
};

struct Individual {
    ProgramTree tree;
    std::optional<double> fitness;
};

/// Describes the first typing or depth violation, or nullopt for a legal tree.
///
/// A legal tree has a double-typed root, child slots matching each node's
/// signature, at least one aggregation node, and depth within bounds. The
/// type system then guarantees every path to the input image crosses exactly
/// one aggregation node.
auto validate(ProgramTree const& tree, DepthBounds bounds = {}) -> std::optional<std::string>;
auto is_valid(ProgramTree const& tree, DepthBounds bounds = {}) -> bool;

struct GenerateOptions {
    /// Relative weight of a constant leaf among the double-typed choices
    /// (constant, aggregation, arithmetic) when growing tier 3.
    double const_weight { 1.0 };
    /// Probability of a plain input leaf when growing an image-typed slot
    /// that could still hold a convolve or pool.
    double input_weight { 1.0 };
};

auto random_filter(Rng& rng) -> Filter;
auto random_window(Rng& rng) -> WindowSpec;
auto random_constant(Rng& rng) -> double;

/// Random subtree of the given output type whose depth does not exceed
/// max_depth. `full` prefers function nodes until the depth budget runs out.
auto generate_subtree(Rng& rng, ValueType type, int max_depth, bool full, GenerateOptions const& opts = {}) -> std::vector<Node>;

/// Ramped half-and-half: target depth uniform in [depth_min, depth_max],
/// full or grow with equal probability, resampled until legal.
auto generate(Rng& rng, int depth_min, int depth_max, GenerateOptions const& opts = {}) -> ProgramTree;

/// Raw (pre-sigmoid) output. Throws ImageTooSmall when stacked tier-1 ops
/// shrink the image below an operator's footprint.
auto evaluate(ProgramTree const& tree, Image const& img) -> double;

auto sigmoid(double x) -> double;

/// Class 0 when sigmoid(output) > 0.5, class 1 otherwise (including 0.5).
auto label_from_output(double output) -> int;
auto classify(ProgramTree const& tree, Image const& img) -> int;

/// Sigmoid target encoding a class label: class 0 sits above 0.5, so its
/// cross-entropy target is 1 and class 1's is 0.
constexpr auto target_for_label(int label) -> int { return label == 0 ? 1 : 0; }

/// S-expression text, e.g.
/// (agg-min (convolve (input) (filter 0.1 ...)) (window rect 0.1 0.1 0.5 0.5))
/// Doubles are written in shortest round-trip form.
auto to_sexpr(ProgramTree const& tree) -> std::string;
/// Throws ParseError (with byte offset) on malformed text. The result is
/// structurally complete and type-checked, but depth is not bounded here.
auto parse_program(std::string_view text) -> ProgramTree;

auto to_dot(ProgramTree const& tree) -> std::string;

} // namespace memegp
