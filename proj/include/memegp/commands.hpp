#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "memegp/dataset.hpp"
#include "memegp/evolution.hpp"

namespace memegp {

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

struct SynthSpec {
    std::size_t n_per_class { 50 };
    std::size_t side { 16 };
    double noise { 0.05 };
    std::uint64_t seed { 0 };
};

/// Everything `train` needs; also the template for each matrix cell.
struct TrainOptions {
    std::optional<std::filesystem::path> dataset;
    bool synth { false };
    SynthSpec synth_spec {};
    SplitSpec split {};
    EvolutionConfig evolution {};
    std::filesystem::path out { "run" };
};

/// Loads (or synthesizes) the data and splits it.
auto prepare_data(TrainOptions const& opts) -> std::pair<LabeledDataset, LabeledDataset>;

/// Writes run.csv, ls.csv, summary.csv, best_model.sexp and best_model.dot.
void write_run_outputs(std::filesystem::path const& dir, TrainOptions const& opts, RunResult const& result);

auto format_fixed(double v, int decimals) -> std::string;

auto cmd_train(TrainOptions const& opts, std::ostream& out, std::ostream& err) -> int;

auto cmd_predict(std::filesystem::path const& model, std::filesystem::path const& image, std::ostream& out, std::ostream& err) -> int;

struct GradcheckOptions {
    std::uint64_t seed { 7 };
    int trials { 50 };
    double step { 1e-4 };
    double threshold { 1e-4 };
    int max_depth { 6 };
    bool break_grad { false };
};

auto cmd_gradcheck(GradcheckOptions const& opts, std::ostream& out, std::ostream& err) -> int;

struct SynthCommandOptions {
    SynthSpec spec {};
    std::filesystem::path out { "synth" };
};

auto cmd_synth(SynthCommandOptions const& opts, std::ostream& out, std::ostream& err) -> int;

struct MatrixOptions {
    TrainOptions base {};
    std::vector<std::uint64_t> shuffle_seeds { 0, 1, 2 };
    std::vector<std::uint64_t> evo_seeds { 1 };
    std::vector<Mode> modes { Mode::Base, Mode::LS, Mode::LSE };
    std::size_t jobs { 1 };
    bool resume { false };
    std::filesystem::path out { "matrix" };
};

/// Directory name of one matrix cell, relative to the matrix output root.
auto cell_name(Mode mode, std::uint64_t shuffle_seed, std::uint64_t evo_seed) -> std::string;

auto cmd_matrix(MatrixOptions const& opts, std::ostream& out, std::ostream& err) -> int;

} // namespace memegp
