#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace memegp {

/// Row-major grayscale image. Raw inputs hold values in [0,1]; images
/// produced by convolve are non-negative but unbounded above.
class Image {
public:
    Image() = default;
    Image(std::size_t height, std::size_t width, double fill = 0.0);
    Image(std::size_t height, std::size_t width, std::vector<double> pixels);

    [[nodiscard]] auto height() const noexcept -> std::size_t { return height_; }
    [[nodiscard]] auto width() const noexcept -> std::size_t { return width_; }
    [[nodiscard]] auto size() const noexcept -> std::size_t { return pixels_.size(); }
    [[nodiscard]] auto empty() const noexcept -> bool { return pixels_.empty(); }

    [[nodiscard]] auto operator()(std::size_t row, std::size_t col) const -> double { return pixels_[row * width_ + col]; }
    auto operator()(std::size_t row, std::size_t col) -> double& { return pixels_[row * width_ + col]; }

    [[nodiscard]] auto pixels() const noexcept -> std::span<double const> { return pixels_; }
    [[nodiscard]] auto pixels() noexcept -> std::span<double> { return pixels_; }

    friend auto operator==(Image const&, Image const&) -> bool = default;

private:
    std::size_t height_ { 0 };
    std::size_t width_ { 0 };
    std::vector<double> pixels_;
};

/// 3x3 convolution kernel, row-major. These are the only trainable parameters.
struct Filter {
    static constexpr std::size_t side = 3;
    std::array<double, side * side> coefficients {};

    [[nodiscard]] auto operator()(std::size_t a, std::size_t b) const -> double { return coefficients[a * side + b]; }
    auto operator()(std::size_t a, std::size_t b) -> double& { return coefficients[a * side + b]; }

    friend auto operator==(Filter const&, Filter const&) -> bool = default;
};

enum class WindowShape { Rectangle, Row, Column, Ellipse };

auto to_string(WindowShape shape) -> std::string_view;

/// Aggregation window in image-relative coordinates. Positions are fractions
/// of the image in [0,1]; sizes are fractions in (0,1].
struct WindowSpec {
    WindowShape shape { WindowShape::Rectangle };
    double pos_x { 0.0 };
    double pos_y { 0.0 };
    double size_w { 1.0 };
    double size_h { 1.0 };

    [[nodiscard]] auto is_valid() const noexcept -> bool;

    friend auto operator==(WindowSpec const&, WindowSpec const&) -> bool = default;
};

struct Pixel {
    std::size_t row;
    std::size_t col;

    friend auto operator==(Pixel const&, Pixel const&) -> bool = default;
    friend auto operator<=>(Pixel const&, Pixel const&) = default;
};

enum class AggStat { Min, Max, Mean, Std };

/// Valid 3x3 cross-correlation followed by ReLU. Throws ImageTooSmall when
/// either side is below 3.
auto convolve(Image const& img, Filter const& filter) -> Image;

/// Same as convolve but without the ReLU; the backward pass gates on this.
auto convolve_linear(Image const& img, Filter const& filter) -> Image;

/// Disjoint 2x2 max pooling. Odd trailing rows/columns are dropped.
auto pool(Image const& img) -> Image;

/// Maps a fractional window to concrete pixels, in row-major order.
///
/// Top-left corner is floor(pos * extent); the window extent is
/// round-half-up(size * extent) with a minimum of one pixel, clamped to the
/// image. Row windows are one pixel tall and Column windows one pixel wide.
/// Ellipse keeps the pixels whose centres fall inside the ellipse inscribed
/// in the clamped rectangle.
auto realize_window(WindowSpec const& window, std::size_t height, std::size_t width) -> std::vector<Pixel>;

/// Statistic over the realized window. Std is the population deviation.
auto aggregate(Image const& img, WindowSpec const& window, AggStat stat) -> double;

/// Same statistic over an explicit pixel set.
auto aggregate(Image const& img, std::span<Pixel const> pixels, AggStat stat) -> double;

} // namespace memegp
