#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <initializer_list>
#include <string>
#include <vector>

#include "memegp/image_ops.hpp"
#include "memegp/program.hpp"
#include "memegp/random.hpp"

namespace testsupport {

using namespace memegp;

inline auto op(NodeKind kind) -> Node { return { kind, std::monostate {} }; }
inline auto input() -> Node { return op(NodeKind::Input); }
inline auto filter_node(Filter const& f) -> Node { return { NodeKind::FilterTerm, f }; }
inline auto window_node(WindowSpec const& w) -> Node { return { NodeKind::WindowTerm, w }; }
inline auto const_node(double v) -> Node { return { NodeKind::Const, v }; }

inline auto full_window() -> WindowSpec { return { WindowShape::Rectangle, 0.0, 0.0, 1.0, 1.0 }; }

inline auto tree(std::initializer_list<Node> nodes) -> ProgramTree { return ProgramTree(std::vector<Node>(nodes)); }

/// agg(input, window)
inline auto agg_tree(NodeKind agg, WindowSpec const& w = full_window()) -> ProgramTree
{
    return tree({ op(agg), input(), window_node(w) });
}

/// agg(convolve(input, filter), window)
inline auto conv_tree(Filter const& f, NodeKind agg = NodeKind::AggMean, WindowSpec const& w = full_window()) -> ProgramTree
{
    return tree({ op(agg), op(NodeKind::Convolve), input(), filter_node(f), window_node(w) });
}

inline auto random_image(Rng& rng, std::size_t h, std::size_t w, double lo = 0.0, double hi = 1.0) -> Image
{
    Image img(h, w);
    for (auto& p : img.pixels()) {
        p = uniform_real(rng, lo, hi);
    }
    return img;
}

inline auto filled(std::size_t h, std::size_t w, double v) -> Image { return Image(h, w, v); }

// Independent oracles: plain loops written directly from the definitions.

inline auto oracle_correlate(Image const& x, Filter const& f, bool relu) -> Image
{
    Image out(x.height() - 2, x.width() - 2);
    for (std::size_t r = 0; r + 2 < x.height(); ++r) {
        for (std::size_t c = 0; c + 2 < x.width(); ++c) {
            double s = 0.0;
            for (std::size_t a = 0; a < 3; ++a) {
                for (std::size_t b = 0; b < 3; ++b) {
                    s += x(r + a, c + b) * f(a, b);
                }
            }
            out(r, c) = relu ? std::max(0.0, s) : s;
        }
    }
    return out;
}

inline auto oracle_pool(Image const& x) -> Image
{
    Image out(x.height() / 2, x.width() / 2);
    for (std::size_t r = 0; r < out.height(); ++r) {
        for (std::size_t c = 0; c < out.width(); ++c) {
            out(r, c) = std::max({ x(2 * r, 2 * c), x(2 * r, 2 * c + 1), x(2 * r + 1, 2 * c), x(2 * r + 1, 2 * c + 1) });
        }
    }
    return out;
}

inline auto oracle_stats(std::vector<double> const& v) -> std::vector<double>
{
    double mn = v.front();
    double mx = v.front();
    double sum = 0.0;
    for (auto x : v) {
        mn = std::min(mn, x);
        mx = std::max(mx, x);
        sum += x;
    }
    auto const mean = sum / static_cast<double>(v.size());
    double ss = 0.0;
    for (auto x : v) {
        ss += (x - mean) * (x - mean);
    }
    return { mn, mx, mean, std::sqrt(ss / static_cast<double>(v.size())) };
}

inline auto temp_dir(std::string const& name) -> std::filesystem::path
{
    auto p = std::filesystem::temp_directory_path() / ("memegp_test_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

} // namespace testsupport
