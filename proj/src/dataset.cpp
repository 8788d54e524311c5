#include "memegp/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>

#include "memegp/errors.hpp"

namespace memegp {

namespace fs = std::filesystem;

auto LabeledDataset::count(int label) const -> std::size_t
{
    return static_cast<std::size_t>(std::count_if(items.begin(), items.end(), [label](auto const& it) { return it.label == label; }));
}

namespace {

    class HeaderReader {
    public:
        HeaderReader(std::string_view bytes, std::string const& source)
            : bytes_(bytes)
            , source_(source)
        {
        }

        auto integer(char const* what) -> long
        {
            skip_space_and_comments();
            auto const start = pos_;
            while (pos_ < bytes_.size() && std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) {
                ++pos_;
            }
            if (start == pos_) {
                throw FormatError(source_ + ": expected " + what);
            }
            auto const digits = bytes_.substr(start, pos_ - start);
            if (digits.size() > 9) {
                throw FormatError(source_ + ": " + what + " out of range");
            }
            return std::stol(std::string(digits));
        }

        [[nodiscard]] auto position() const -> std::size_t { return pos_; }
        void advance() { ++pos_; }
        [[nodiscard]] auto at_space() const -> bool { return pos_ < bytes_.size() && std::isspace(static_cast<unsigned char>(bytes_[pos_])); }

    private:
        void skip_space_and_comments()
        {
            while (pos_ < bytes_.size()) {
                auto const ch = static_cast<unsigned char>(bytes_[pos_]);
                if (std::isspace(ch)) {
                    ++pos_;
                } else if (ch == '#') {
                    while (pos_ < bytes_.size() && bytes_[pos_] != '\n') {
                        ++pos_;
                    }
                } else {
                    break;
                }
            }
        }

        std::string_view bytes_;
        std::string const& source_;
        std::size_t pos_ { 2 };
    };

} // namespace

auto parse_pgm(std::string_view bytes, std::string const& source) -> Image
{
    if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '2' && bytes[1] != '5')) {
        throw FormatError(source + ": not a portable graymap (bad magic)");
    }
    bool const binary = bytes[1] == '5';
    HeaderReader header(bytes, source);
    auto const width = header.integer("width");
    auto const height = header.integer("height");
    auto const maxval = header.integer("maxval");
    if (width < 1 || height < 1) {
        throw FormatError(source + ": image dimensions must be positive");
    }
    if (maxval < 1 || maxval > 65535) {
        throw FormatError(source + ": maxval must be in [1, 65535]");
    }
    auto const n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    std::vector<double> pixels(n);
    auto const scale = 1.0 / static_cast<double>(maxval);

    if (binary) {
        if (!header.at_space()) {
            throw FormatError(source + ": missing whitespace after maxval");
        }
        header.advance();
        auto const bytes_per_sample = maxval < 256 ? 1U : 2U;
        auto const offset = header.position();
        if (bytes.size() < offset + n * bytes_per_sample) {
            throw FormatError(source + ": truncated pixel data");
        }
        for (std::size_t k = 0; k < n; ++k) {
            unsigned value = 0;
            if (bytes_per_sample == 1) {
                value = static_cast<unsigned char>(bytes[offset + k]);
            } else {
                value = (static_cast<unsigned>(static_cast<unsigned char>(bytes[offset + 2 * k])) << 8U) | static_cast<unsigned char>(bytes[offset + 2 * k + 1]);
            }
            if (value > static_cast<unsigned>(maxval)) {
                throw FormatError(source + ": pixel exceeds maxval");
            }
            pixels[k] = static_cast<double>(value) * scale;
        }
    } else {
        for (std::size_t k = 0; k < n; ++k) {
            auto const value = header.integer("pixel value");
            if (value > maxval) {
                throw FormatError(source + ": pixel exceeds maxval");
            }
            pixels[k] = static_cast<double>(value) * scale;
        }
    }
    return Image(static_cast<std::size_t>(height), static_cast<std::size_t>(width), std::move(pixels));
}

auto read_pgm(fs::path const& path) -> Image
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_pgm(bytes, path.string());
}

void write_pgm(fs::path const& path, Image const& img)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    out << "P5\n" << img.width() << ' ' << img.height() << "\n255\n";
    for (auto v : img.pixels()) {
        auto const q = static_cast<int>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
        out.put(static_cast<char>(static_cast<unsigned char>(q)));
    }
    if (!out) {
        throw IoError("failed writing " + path.string());
    }
}

auto load_dir(fs::path const& root) -> LabeledDataset
{
    std::error_code ec;
    if (!fs::is_directory(root, ec)) {
        throw IoError("dataset root is not a directory: " + root.string());
    }
    std::vector<fs::path> class_dirs;
    for (auto const& entry : fs::directory_iterator(root)) {
        if (entry.is_directory()) {
            class_dirs.push_back(entry.path());
        }
    }
    std::sort(class_dirs.begin(), class_dirs.end());
    if (class_dirs.size() != 2) {
        throw FormatError(root.string() + ": expected exactly two class directories, found " + std::to_string(class_dirs.size()));
    }

    LabeledDataset ds;
    ds.name = root.filename().string();
    for (int label = 0; label < 2; ++label) {
        auto const& dir = class_dirs[static_cast<std::size_t>(label)];
        ds.class_names[static_cast<std::size_t>(label)] = dir.filename().string();
        std::vector<fs::path> files;
        for (auto const& entry : fs::directory_iterator(dir)) {
            if (entry.is_regular_file() && entry.path().extension() == ".pgm") {
                files.push_back(entry.path());
            }
        }
        std::sort(files.begin(), files.end());
        if (files.empty()) {
            throw EmptyClass("class directory has no .pgm files: " + dir.string());
        }
        for (auto const& f : files) {
            ds.items.push_back({ read_pgm(f), label });
        }
    }
    return ds;
}

void write_dir(LabeledDataset const& ds, fs::path const& root)
{
    std::array<std::size_t, 2> counters {};
    for (int label = 0; label < 2; ++label) {
        fs::create_directories(root / ds.class_names[static_cast<std::size_t>(label)]);
    }
    for (auto const& item : ds.items) {
        auto const l = static_cast<std::size_t>(item.label);
        std::ostringstream name;
        name << "img_";
        name.width(5);
        name.fill('0');
        name << counters[l]++ << ".pgm";
        write_pgm(root / ds.class_names[l] / name.str(), item.image);
    }
}

auto split_indices(LabeledDataset const& ds, SplitSpec const& spec) -> std::pair<std::vector<std::size_t>, std::vector<std::size_t>>
{
    if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
        throw ConfigError("train fraction must lie in (0,1)");
    }
    std::vector<std::size_t> order(ds.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = i;
    }
    Rng rng(spec.shuffle_seed);
    for (std::size_t i = order.size(); i > 1; --i) {
        std::swap(order[i - 1], order[uniform_index(rng, i)]);
    }

    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
    if (spec.stratified) {
        std::array<std::size_t, 2> quota {};
        for (int label = 0; label < 2; ++label) {
            auto const n = ds.count(label);
            quota[static_cast<std::size_t>(label)] = static_cast<std::size_t>(std::floor(spec.train_fraction * static_cast<double>(n) + 0.5));
        }
        std::array<std::size_t, 2> taken {};
        for (auto i : order) {
            auto const l = static_cast<std::size_t>(ds.items[i].label);
            if (taken[l] < quota[l]) {
                ++taken[l];
                train.push_back(i);
            } else {
                test.push_back(i);
            }
        }
    } else {
        auto const n_train = static_cast<std::size_t>(std::floor(spec.train_fraction * static_cast<double>(order.size()) + 0.5));
        train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(std::min(n_train, order.size())));
        test.assign(order.begin() + static_cast<std::ptrdiff_t>(train.size()), order.end());
    }

    for (int label = 0; label < 2; ++label) {
        auto has = [&](std::vector<std::size_t> const& side) {
            return std::any_of(side.begin(), side.end(), [&](auto i) { return ds.items[i].label == label; });
        };
        if (!has(train) || !has(test)) {
            throw TooFewItems("class " + std::to_string(label) + " would be empty on one side of the split");
        }
    }
    return { std::move(train), std::move(test) };
}

auto split(LabeledDataset const& ds, SplitSpec const& spec) -> std::pair<LabeledDataset, LabeledDataset>
{
    auto const [train_idx, test_idx] = split_indices(ds, spec);
    auto take = [&](std::vector<std::size_t> const& idx, char const* suffix) {
        LabeledDataset out;
        out.name = ds.name + suffix;
        out.class_names = ds.class_names;
        out.items.reserve(idx.size());
        for (auto i : idx) {
            out.items.push_back(ds.items[i]);
        }
        return out;
    };
    return { take(train_idx, "/train"), take(test_idx, "/test") };
}

auto synth_bright_quadrant(std::size_t n_per_class, std::size_t side, double noise, Rng& rng) -> LabeledDataset
{
    if (side < 8) {
        throw ConfigError("synthetic images need side >= 8");
    }
    if (!(noise >= 0.0 && noise < 0.3)) {
        throw ConfigError("synthetic noise must lie in [0, 0.3)");
    }
    constexpr double bright = 0.9;
    constexpr double dark = 0.2;
    LabeledDataset ds;
    ds.name = "bright-quadrant";
    ds.class_names = { "bright", "dark" };
    ds.items.reserve(2 * n_per_class);
    auto const half = side / 2;
    for (int label = 0; label < 2; ++label) {
        for (std::size_t k = 0; k < n_per_class; ++k) {
            Image img(side, side);
            for (std::size_t r = 0; r < side; ++r) {
                for (std::size_t c = 0; c < side; ++c) {
                    auto const base = (label == 0 && r < half && c < half) ? bright : dark;
                    auto const jitter = noise > 0.0 ? uniform_real(rng, -noise, noise) : 0.0;
                    img(r, c) = std::clamp(base + jitter, 0.0, 1.0);
                }
            }
            ds.items.push_back({ std::move(img), label });
        }
    }
    return ds;
}

} // namespace memegp
