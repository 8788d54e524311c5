#include "memegp/grad_engine.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "memegp/errors.hpp"

namespace memegp {

namespace {

    constexpr double kProbabilityClamp = 1e-12;

    class TapeRecorder {
    public:
        TapeRecorder(ProgramTree const& tree, Image const& img, std::vector<TapeValue>& values)
            : tree_(tree)
            , img_(img)
            , values_(values)
        {
        }

        auto scalar(std::size_t i) -> double
        {
            auto const& node = tree_.node(i);
            double v = 0.0;
            switch (node.kind) {
            case NodeKind::Const:
                v = node.constant();
                break;
            case NodeKind::Add:
            case NodeKind::Sub:
            case NodeKind::Mul:
            case NodeKind::Div: {
                auto const a = scalar(i + 1);
                auto const b = scalar(tree_.subtree_end(i + 1));
                if (node.kind == NodeKind::Add) {
                    v = a + b;
                } else if (node.kind == NodeKind::Sub) {
                    v = a - b;
                } else if (node.kind == NodeKind::Mul) {
                    v = a * b;
                } else {
                    v = b == 0.0 ? 0.0 : a / b;
                }
                break;
            }
            case NodeKind::AggMin:
            case NodeKind::AggMax:
            case NodeKind::AggMean:
            case NodeKind::AggStd: {
                auto const& img = image(i + 1);
                v = aggregate(img, tree_.node(tree_.subtree_end(i + 1)).window(), agg_stat(node.kind));
                break;
            }
            default:
                throw std::logic_error("node is not double-typed");
            }
            values_[i] = v;
            return v;
        }

        auto image(std::size_t i) -> Image const&
        {
            auto const& node = tree_.node(i);
            switch (node.kind) {
            case NodeKind::Input:
                values_[i] = img_;
                break;
            case NodeKind::Convolve:
                values_[i] = convolve(image(i + 1), tree_.filter_of(i));
                break;
            case NodeKind::Pool:
                values_[i] = pool(image(i + 1));
                break;
            default:
                throw std::logic_error("node is not image-typed");
            }
            return std::get<Image>(values_[i]);
        }

    private:
        ProgramTree const& tree_;
        Image const& img_;
        std::vector<TapeValue>& values_;
    };

    class Backprop {
    public:
        Backprop(ForwardTape const& tape, GradOptions const& opts)
            : tape_(tape)
            , tree_(tape.tree)
            , opts_(opts)
        {
        }

        auto run(double seed) -> GradientSet
        {
            scalar(0, seed);
            return std::move(grads_);
        }

    private:
        [[nodiscard]] auto scalar_at(std::size_t i) const -> double { return std::get<double>(tape_.values[i]); }
        [[nodiscard]] auto image_at(std::size_t i) const -> Image const& { return std::get<Image>(tape_.values[i]); }

        [[nodiscard]] auto has_convolve_below(std::size_t i) const -> bool
        {
            for (auto j = i; j < tree_.subtree_end(i); ++j) {
                if (tree_.node(j).kind == NodeKind::Convolve) {
                    return true;
                }
            }
            return false;
        }

        void scalar(std::size_t i, double g)
        {
            auto const& node = tree_.node(i);
            switch (node.kind) {
            case NodeKind::Const:
                return;
            case NodeKind::Add:
            case NodeKind::Sub:
            case NodeKind::Mul:
            case NodeKind::Div: {
                auto const lhs = i + 1;
                auto const rhs = tree_.subtree_end(lhs);
                auto const a = scalar_at(lhs);
                auto const b = scalar_at(rhs);
                double da = 0.0;
                double db = 0.0;
                switch (node.kind) {
                case NodeKind::Add:
                    da = g;
                    db = g;
                    break;
                case NodeKind::Sub:
                    da = g;
                    db = -g;
                    break;
                case NodeKind::Mul:
                    da = g * b;
                    db = g * a;
                    break;
                default:
                    // Protected division is identically 0 at b == 0.
                    if (b != 0.0) {
                        da = g / b;
                        db = -g * a / (b * b);
                    }
                }
                scalar(lhs, da);
                scalar(rhs, db);
                return;
            }
            case NodeKind::AggMin:
            case NodeKind::AggMax:
            case NodeKind::AggMean:
            case NodeKind::AggStd: {
                auto const child = i + 1;
                if (!has_convolve_below(child)) {
                    return;
                }
                auto const& window = tree_.node(tree_.subtree_end(child)).window();
                image(child, aggregate_backward(image_at(child), window, agg_stat(node.kind), g, opts_.agg));
                return;
            }
            default:
                throw std::logic_error("node is not double-typed");
            }
        }

        void image(std::size_t i, Image const& g)
        {
            auto const& node = tree_.node(i);
            switch (node.kind) {
            case NodeKind::Input:
                return;
            case NodeKind::Pool: {
                if (has_convolve_below(i + 1)) {
                    image(i + 1, pool_backward(image_at(i + 1), g));
                }
                return;
            }
            case NodeKind::Convolve: {
                auto const gated = relu_gate(g, image_at(i));
                auto const& input = image_at(i + 1);
                auto dw = conv_weight_grad(input, gated);
                if (opts_.inject_fault) {
                    for (auto& v : dw.coefficients) {
                        v *= 2.0;
                    }
                }
                grads_[i] = dw;
                if (has_convolve_below(i + 1)) {
                    image(i + 1, conv_input_grad(gated, tree_.filter_of(i)));
                }
                return;
            }
            default:
                throw std::logic_error("node is not image-typed");
            }
        }

        ForwardTape const& tape_;
        ProgramTree const& tree_;
        GradOptions const& opts_;
        GradientSet grads_;
    };

} // namespace

auto forward(ProgramTree const& tree, Image const& img) -> ForwardTape
{
    ForwardTape tape;
    tape.tree = tree;
    tape.values.assign(tree.node_count(), std::monostate {});
    TapeRecorder recorder(tape.tree, img, tape.values);
    tape.output = recorder.scalar(0);
    tape.prediction = sigmoid(tape.output);
    return tape;
}

auto ce_loss(double y, int target) -> double
{
    y = std::clamp(y, kProbabilityClamp, 1.0 - kProbabilityClamp);
    auto const t = static_cast<double>(target);
    return -(t * std::log(y) + (1.0 - t) * std::log(1.0 - y));
}

auto mean_ce_loss(std::span<double const> predictions, std::span<int const> targets) -> double
{
    if (predictions.size() != targets.size()) {
        throw std::invalid_argument("prediction and target counts differ");
    }
    if (predictions.empty()) {
        return 0.0;
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        sum += ce_loss(predictions[i], targets[i]);
    }
    return sum / static_cast<double>(predictions.size());
}

auto ce_loss_from_logit(double x, int target) -> double
{
    // log(1 + e^x) - t*x, with the softplus evaluated without overflow.
    auto const softplus = std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
    return softplus - static_cast<double>(target) * x;
}

auto output_seed(double y, int target) -> double { return y - static_cast<double>(target); }

auto backward(ForwardTape const& tape, int target, GradOptions const& opts) -> GradientSet
{
    return Backprop(tape, opts).run(output_seed(tape.prediction, target));
}

auto conv_weight_grad(Image const& input, Image const& upstream) -> Filter
{
    if (upstream.height() + 2 != input.height() || upstream.width() + 2 != input.width()) {
        throw std::invalid_argument("conv_weight_grad: upstream must be (h-2)x(w-2)");
    }
    Filter dw;
    for (std::size_t a = 0; a < Filter::side; ++a) {
        for (std::size_t b = 0; b < Filter::side; ++b) {
            double acc = 0.0;
            for (std::size_t r = 0; r < upstream.height(); ++r) {
                for (std::size_t c = 0; c < upstream.width(); ++c) {
                    acc += upstream(r, c) * input(r + a, c + b);
                }
            }
            dw(a, b) = acc;
        }
    }
    return dw;
}

auto conv_input_grad(Image const& upstream, Filter const& filter) -> Image
{
    constexpr std::size_t pad = Filter::side - 1;
    Image padded(upstream.height() + 2 * pad, upstream.width() + 2 * pad);
    for (std::size_t r = 0; r < upstream.height(); ++r) {
        for (std::size_t c = 0; c < upstream.width(); ++c) {
            padded(r + pad, c + pad) = upstream(r, c);
        }
    }
    Filter flipped;
    for (std::size_t a = 0; a < Filter::side; ++a) {
        for (std::size_t b = 0; b < Filter::side; ++b) {
            flipped(a, b) = filter(Filter::side - 1 - a, Filter::side - 1 - b);
        }
    }
    return convolve_linear(padded, flipped);
}

auto relu_gate(Image const& upstream, Image const& relu_output) -> Image
{
    auto out = upstream;
    auto const out_px = out.pixels();
    auto const act = relu_output.pixels();
    for (std::size_t k = 0; k < out_px.size(); ++k) {
        if (!(act[k] > 0.0)) {
            out_px[k] = 0.0;
        }
    }
    return out;
}

auto pool_backward(Image const& input, Image const& upstream) -> Image
{
    if (upstream.height() != input.height() / 2 || upstream.width() != input.width() / 2) {
        throw std::invalid_argument("pool_backward: upstream must be floor(h/2)xfloor(w/2)");
    }
    Image out(input.height(), input.width());
    for (std::size_t r = 0; r < upstream.height(); ++r) {
        for (std::size_t c = 0; c < upstream.width(); ++c) {
            auto best_r = 2 * r;
            auto best_c = 2 * c;
            for (std::size_t dr = 0; dr < 2; ++dr) {
                for (std::size_t dc = 0; dc < 2; ++dc) {
                    if (input(2 * r + dr, 2 * c + dc) > input(best_r, best_c)) {
                        best_r = 2 * r + dr;
                        best_c = 2 * c + dc;
                    }
                }
            }
            out(best_r, best_c) += upstream(r, c);
        }
    }
    return out;
}

auto aggregate_backward(Image const& input, WindowSpec const& window, AggStat stat, double upstream, AggGradient mode) -> Image
{
    if (mode == AggGradient::PassThrough) {
        return Image(input.height(), input.width(), upstream);
    }
    Image out(input.height(), input.width());
    auto const pixels = realize_window(window, input.height(), input.width());
    if (pixels.empty()) {
        throw EmptyWindow("aggregation window contains no pixels");
    }
    auto const n = static_cast<double>(pixels.size());
    switch (stat) {
    case AggStat::Min:
    case AggStat::Max: {
        auto best = pixels.front();
        for (auto p : pixels) {
            auto const v = input(p.row, p.col);
            auto const cur = input(best.row, best.col);
            if ((stat == AggStat::Min && v < cur) || (stat == AggStat::Max && v > cur)) {
                best = p;
            }
        }
        out(best.row, best.col) = upstream;
        break;
    }
    case AggStat::Mean:
        for (auto p : pixels) {
            out(p.row, p.col) = upstream / n;
        }
        break;
    case AggStat::Std: {
        auto const mean = aggregate(input, pixels, AggStat::Mean);
        auto const sd = aggregate(input, pixels, AggStat::Std);
        if (sd > 0.0) {
            for (auto p : pixels) {
                out(p.row, p.col) = upstream * (input(p.row, p.col) - mean) / (n * sd);
            }
        }
        break;
    }
    }
    return out;
}

auto branch_signature(ProgramTree const& tree, Image const& img) -> std::vector<std::int64_t>
{
    auto const tape = forward(tree, img);
    std::vector<std::int64_t> sig;
    for (std::size_t i = 0; i < tree.node_count(); ++i) {
        auto const& node = tree.node(i);
        switch (node.kind) {
        case NodeKind::Convolve:
            for (auto v : std::get<Image>(tape.values[i]).pixels()) {
                sig.push_back(v > 0.0 ? 1 : 0);
            }
            break;
        case NodeKind::Pool: {
            auto const& in = std::get<Image>(tape.values[i + 1]);
            for (std::size_t r = 0; r + 1 < in.height(); r += 2) {
                for (std::size_t c = 0; c + 1 < in.width(); c += 2) {
                    std::int64_t best = 0;
                    double best_v = in(r, c);
                    for (std::int64_t k = 1; k < 4; ++k) {
                        auto const v = in(r + static_cast<std::size_t>(k / 2), c + static_cast<std::size_t>(k % 2));
                        if (v > best_v) {
                            best_v = v;
                            best = k;
                        }
                    }
                    sig.push_back(best);
                }
            }
            break;
        }
        case NodeKind::AggMin:
        case NodeKind::AggMax:
        case NodeKind::AggStd: {
            auto const& in = std::get<Image>(tape.values[i + 1]);
            auto const pixels = realize_window(tree.node(tree.subtree_end(i + 1)).window(), in.height(), in.width());
            if (node.kind == NodeKind::AggStd) {
                sig.push_back(std::get<double>(tape.values[i]) > 0.0 ? 1 : 0);
                break;
            }
            std::int64_t best = 0;
            for (std::size_t k = 1; k < pixels.size(); ++k) {
                auto const v = in(pixels[k].row, pixels[k].col);
                auto const cur = in(pixels[static_cast<std::size_t>(best)].row, pixels[static_cast<std::size_t>(best)].col);
                if ((node.kind == NodeKind::AggMin && v < cur) || (node.kind == NodeKind::AggMax && v > cur)) {
                    best = static_cast<std::int64_t>(k);
                }
            }
            sig.push_back(best);
            break;
        }
        case NodeKind::Div:
            sig.push_back(std::get<double>(tape.values[tree.subtree_end(i + 1)]) == 0.0 ? 1 : 0);
            break;
        default:
            break;
        }
    }
    return sig;
}

auto relative_error(double analytic, double numeric) -> double
{
    auto const diff = std::abs(analytic - numeric);
    auto const scale = std::max(std::abs(analytic), std::abs(numeric));
    if (scale < 1e-8) {
        return diff;
    }
    return diff / scale;
}

auto grad_check(ProgramTree const& tree, Image const& img, int target, double h, GradOptions const& opts) -> GradCheckResult
{
    if (!(h > 0.0)) {
        throw std::invalid_argument("grad_check step must be positive");
    }
    GradCheckResult result;
    auto const tape = forward(tree, img);
    auto const grads = backward(tape, target, opts);
    auto const base_signature = branch_signature(tree, img);

    for (auto conv : tree.convolve_nodes()) {
        auto const& filter = tree.filter_of(conv);
        auto const& analytic = grads.at(conv);
        for (std::size_t k = 0; k < filter.coefficients.size(); ++k) {
            auto plus = filter;
            auto minus = filter;
            plus.coefficients[k] += h;
            minus.coefficients[k] -= h;
            auto const tree_plus = tree.with_filter(conv, plus);
            auto const tree_minus = tree.with_filter(conv, minus);
            if (branch_signature(tree_plus, img) != base_signature || branch_signature(tree_minus, img) != base_signature) {
                result.crossed_kink = true;
            }
            auto const loss_plus = ce_loss_from_logit(evaluate(tree_plus, img), target);
            auto const loss_minus = ce_loss_from_logit(evaluate(tree_minus, img), target);
            auto const numeric = (loss_plus - loss_minus) / (2.0 * h);
            result.max_rel_error = std::max(result.max_rel_error, relative_error(analytic.coefficients[k], numeric));
            ++result.parameters;
        }
    }
    return result;
}

} // namespace memegp
