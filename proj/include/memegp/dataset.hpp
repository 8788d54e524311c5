#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "memegp/image_ops.hpp"
#include "memegp/random.hpp"

namespace memegp {

struct LabeledImage {
    Image image;
    int label { 0 };
};

struct LabeledDataset {
    std::string name;
    std::array<std::string, 2> class_names;
    std::vector<LabeledImage> items;

    [[nodiscard]] auto size() const noexcept -> std::size_t { return items.size(); }
    [[nodiscard]] auto empty() const noexcept -> bool { return items.empty(); }
    [[nodiscard]] auto count(int label) const -> std::size_t;
};

struct SplitSpec {
    std::uint64_t shuffle_seed { 0 };
    double train_fraction { 0.5 };
    bool stratified { true };
};

/// Decodes a portable graymap (P2 ASCII or P5 binary, 8- or 16-bit) and
/// scales pixels to [0,1] by the declared maxval. `source` names the input
/// in error messages.
auto parse_pgm(std::string_view bytes, std::string const& source = "<memory>") -> Image;
auto read_pgm(std::filesystem::path const& path) -> Image;
/// Writes binary P5 with maxval 255; pixels are clamped to [0,1] and rounded.
void write_pgm(std::filesystem::path const& path, Image const& img);

/// Loads `<root>/<class0>/*.pgm` and `<root>/<class1>/*.pgm`. The two class
/// directories and the files inside them are taken in lexicographic order;
/// the first directory is label 0.
auto load_dir(std::filesystem::path const& root) -> LabeledDataset;
void write_dir(LabeledDataset const& ds, std::filesystem::path const& root);

/// Indices of the train and test items. Seeded shuffle, then (when
/// stratified) round(train_fraction * class size) of each class goes to train.
auto split_indices(LabeledDataset const& ds, SplitSpec const& spec) -> std::pair<std::vector<std::size_t>, std::vector<std::size_t>>;
auto split(LabeledDataset const& ds, SplitSpec const& spec) -> std::pair<LabeledDataset, LabeledDataset>;

/// Class 0: a bright (0.9) top-left quadrant over a dark (0.2) background.
/// Class 1: dark everywhere. Uniform noise in [-noise, noise] is added to
/// each pixel and the result clamped to [0,1].
auto synth_bright_quadrant(std::size_t n_per_class, std::size_t side, double noise, Rng& rng) -> LabeledDataset;

} // namespace memegp
