#include "memegp/image_ops.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "memegp/errors.hpp"

namespace memegp {

Image::Image(std::size_t height, std::size_t width, double fill)
    : height_(height)
    , width_(width)
    , pixels_(height * width, fill)
{
}

Image::Image(std::size_t height, std::size_t width, std::vector<double> pixels)
    : height_(height)
    , width_(width)
    , pixels_(std::move(pixels))
{
    if (pixels_.size() != height_ * width_) {
        throw std::invalid_argument("image pixel count does not match " + std::to_string(height_) + "x" + std::to_string(width_));
    }
}

auto to_string(WindowShape shape) -> std::string_view
{
    switch (shape) {
    case WindowShape::Rectangle:
        return "rect";
    case WindowShape::Row:
        return "row";
    case WindowShape::Column:
        return "column";
    case WindowShape::Ellipse:
        return "ellipse";
    }
    return "?";
}

auto WindowSpec::is_valid() const noexcept -> bool
{
    auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
    return in_unit(pos_x) && in_unit(pos_y) && size_w > 0.0 && size_w <= 1.0 && size_h > 0.0 && size_h <= 1.0;
}

auto convolve_linear(Image const& img, Filter const& filter) -> Image
{
    if (img.height() < Filter::side || img.width() < Filter::side) {
        throw ImageTooSmall("convolve needs at least 3x3, got " + std::to_string(img.height()) + "x" + std::to_string(img.width()));
    }
    Image out(img.height() - 2, img.width() - 2);
    for (std::size_t r = 0; r < out.height(); ++r) {
        for (std::size_t c = 0; c < out.width(); ++c) {
            double acc = 0.0;
            for (std::size_t a = 0; a < Filter::side; ++a) {
                for (std::size_t b = 0; b < Filter::side; ++b) {
                    acc += img(r + a, c + b) * filter(a, b);
                }
            }
            out(r, c) = acc;
        }
    }
    return out;
}

auto convolve(Image const& img, Filter const& filter) -> Image
{
    auto out = convolve_linear(img, filter);
    for (auto& v : out.pixels()) {
        v = std::max(0.0, v);
    }
    return out;
}

auto pool(Image const& img) -> Image
{
    if (img.height() < 2 || img.width() < 2) {
        throw ImageTooSmall("pool needs at least 2x2, got " + std::to_string(img.height()) + "x" + std::to_string(img.width()));
    }
    Image out(img.height() / 2, img.width() / 2);
    for (std::size_t r = 0; r < out.height(); ++r) {
        for (std::size_t c = 0; c < out.width(); ++c) {
            out(r, c) = std::max({ img(2 * r, 2 * c), img(2 * r, 2 * c + 1), img(2 * r + 1, 2 * c), img(2 * r + 1, 2 * c + 1) });
        }
    }
    return out;
}

auto realize_window(WindowSpec const& window, std::size_t height, std::size_t width) -> std::vector<Pixel>
{
    if (height == 0 || width == 0) {
        return {};
    }
    auto const h = static_cast<double>(height);
    auto const w = static_cast<double>(width);

    auto top = std::min(static_cast<std::size_t>(std::floor(window.pos_y * h)), height - 1);
    auto left = std::min(static_cast<std::size_t>(std::floor(window.pos_x * w)), width - 1);
    auto extent_h = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(window.size_h * h + 0.5)));
    auto extent_w = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(window.size_w * w + 0.5)));
    if (window.shape == WindowShape::Row) {
        extent_h = 1;
    } else if (window.shape == WindowShape::Column) {
        extent_w = 1;
    }
    auto const bottom = std::min(height, top + extent_h);
    auto const right = std::min(width, left + extent_w);

    std::vector<Pixel> pixels;
    pixels.reserve((bottom - top) * (right - left));
    if (window.shape != WindowShape::Ellipse) {
        for (auto r = top; r < bottom; ++r) {
            for (auto c = left; c < right; ++c) {
                pixels.push_back({ r, c });
            }
        }
        return pixels;
    }

    auto const cy = 0.5 * static_cast<double>(top + bottom);
    auto const cx = 0.5 * static_cast<double>(left + right);
    auto const ry = 0.5 * static_cast<double>(bottom - top);
    auto const rx = 0.5 * static_cast<double>(right - left);
    for (auto r = top; r < bottom; ++r) {
        for (auto c = left; c < right; ++c) {
            auto const dy = (static_cast<double>(r) + 0.5 - cy) / ry;
            auto const dx = (static_cast<double>(c) + 0.5 - cx) / rx;
            if (dy * dy + dx * dx <= 1.0) {
                pixels.push_back({ r, c });
            }
        }
    }
    return pixels;
}

auto aggregate(Image const& img, std::span<Pixel const> pixels, AggStat stat) -> double
{
    if (pixels.empty()) {
        throw EmptyWindow("aggregation window contains no pixels");
    }
    switch (stat) {
    case AggStat::Min: {
        auto v = img(pixels[0].row, pixels[0].col);
        for (auto p : pixels) {
            v = std::min(v, img(p.row, p.col));
        }
        return v;
    }
    case AggStat::Max: {
        auto v = img(pixels[0].row, pixels[0].col);
        for (auto p : pixels) {
            v = std::max(v, img(p.row, p.col));
        }
        return v;
    }
    case AggStat::Mean:
    case AggStat::Std: {
        double sum = 0.0;
        for (auto p : pixels) {
            sum += img(p.row, p.col);
        }
        auto const n = static_cast<double>(pixels.size());
        auto const mean = sum / n;
        if (stat == AggStat::Mean) {
            return mean;
        }
        double ss = 0.0;
        for (auto p : pixels) {
            auto const d = img(p.row, p.col) - mean;
            ss += d * d;
        }
        return std::sqrt(ss / n);
    }
    }
    return 0.0;
}

auto aggregate(Image const& img, WindowSpec const& window, AggStat stat) -> double
{
    auto const pixels = realize_window(window, img.height(), img.width());
    return aggregate(img, pixels, stat);
}

} // namespace memegp
