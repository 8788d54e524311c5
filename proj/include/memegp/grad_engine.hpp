#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <variant>
#include <vector>

#include "memegp/image_ops.hpp"
#include "memegp/program.hpp"

namespace memegp {

/// How the scalar gradient crosses an aggregation node on its way to the
/// image below.
enum class AggGradient {
    /// Broadcast the upstream scalar to every pixel of the child image.
    PassThrough,
    /// True Jacobian of the statistic: window-masked, mean-scaled,
    /// argmin/argmax-routed, or (x - mean) / (n * std) for Std.
    Exact,
};

struct GradOptions {
    AggGradient agg { AggGradient::PassThrough };
    /// Test hook: scales every filter gradient so the checker must fail.
    bool inject_fault { false };
};

using TapeValue = std::variant<std::monostate, double, Image>;

/// Every intermediate of one forward pass, indexed like the tree's nodes.
/// Terminal filter/window nodes hold monostate.
struct ForwardTape {
    ProgramTree tree;
    std::vector<TapeValue> values;
    double output { 0.0 };     // pre-activation tree output
    double prediction { 0.5 }; // sigmoid(output)
};

/// Loss gradient for each Convolve node's filter, keyed by node index.
using GradientSet = std::map<std::size_t, Filter>;

auto forward(ProgramTree const& tree, Image const& img) -> ForwardTape;

/// Binary cross-entropy with y clamped to [1e-12, 1 - 1e-12].
auto ce_loss(double y, int target) -> double;
auto mean_ce_loss(std::span<double const> predictions, std::span<int const> targets) -> double;
/// Cross-entropy of sigmoid(x) written in terms of x; finite for any x and
/// free of the clamp, so it is the loss finite differences should probe.
auto ce_loss_from_logit(double x, int target) -> double;

/// dL/dx for sigmoid + cross-entropy collapses to y - t.
auto output_seed(double y, int target) -> double;

auto backward(ForwardTape const& tape, int target, GradOptions const& opts = {}) -> GradientSet;

// Building blocks of the backward pass, exposed for direct verification.

/// dL/dw[a][b] = sum_{r,c} g[r][c] * x[r+a][c+b]; g must be (h-2)x(w-2).
auto conv_weight_grad(Image const& input, Image const& upstream) -> Filter;
/// dL/dx: zero-pad upstream by 2 and correlate with the 180-degree rotated filter.
auto conv_input_grad(Image const& upstream, Filter const& filter) -> Image;
/// Zeroes upstream where the ReLU output is not positive.
auto relu_gate(Image const& upstream, Image const& relu_output) -> Image;
/// Routes each upstream pixel to the first maximum of its 2x2 block.
auto pool_backward(Image const& input, Image const& upstream) -> Image;
auto aggregate_backward(Image const& input, WindowSpec const& window, AggStat stat, double upstream, AggGradient mode) -> Image;

/// Discrete state of every non-smooth decision in a forward pass (ReLU
/// masks, pooling and min/max winners, zero-std and zero-denominator
/// branches). Equal signatures on both sides of a perturbation mean the loss
/// is smooth across it.
auto branch_signature(ProgramTree const& tree, Image const& img) -> std::vector<std::int64_t>;

struct GradCheckResult {
    double max_rel_error { 0.0 };
    std::size_t parameters { 0 };
    /// A perturbation crossed a non-smooth branch; the comparison is not
    /// meaningful and the sample should be redrawn.
    bool crossed_kink { false };
};

/// Relative error used by the checker; absolute when both magnitudes are below 1e-8.
auto relative_error(double analytic, double numeric) -> double;

/// Compares backward's filter gradients with central differences of
/// ce_loss_from_logit, perturbing each coefficient by +-h.
auto grad_check(ProgramTree const& tree, Image const& img, int target, double h, GradOptions const& opts = { AggGradient::Exact, false }) -> GradCheckResult;

} // namespace memegp
