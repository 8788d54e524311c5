#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "memegp/commands.hpp"
#include "memegp/errors.hpp"

using namespace memegp;

namespace {

struct TrainFlags {
    std::string dataset;
    bool synth { false };
    std::string mode { "base" };
    std::size_t pop { 200 };
    int gens { 50 };
    std::uint64_t seed { 1 };
    std::uint64_t shuffle_seed { 0 };
    double train_frac { 0.5 };
    bool full_scale { false };
    int epochs { 10 };
    double lr { 0.5 };
    double batch_frac { 0.10 };
    std::size_t top_k { 25 };
    int ls_period { 10 };
    int final_epochs { 100 };
    bool exact_agg_grad { false };
    bool pass_through_agg_grad { false };
    bool no_elitism { false };
    std::size_t synth_n { 50 };
    std::size_t synth_side { 16 };
    double synth_noise { 0.05 };
    std::uint64_t synth_seed { 0 };
    std::string out { "run" };

    CLI::Option* pop_opt { nullptr };
    CLI::Option* gens_opt { nullptr };
};

void add_train_flags(CLI::App* cmd, TrainFlags& f, bool with_mode)
{
    cmd->add_option("--dataset", f.dataset, "Dataset root holding two class directories of .pgm files");
    cmd->add_flag("--synth", f.synth, "Use the synthetic bright-quadrant dataset");
    if (with_mode) {
        cmd->add_option("--mode", f.mode, "Run mode")->check(CLI::IsMember({ "base", "ls", "lse" }));
        cmd->add_option("--seed", f.seed, "Evolution seed");
        cmd->add_option("--shuffle-seed", f.shuffle_seed, "Seed for the train/test shuffle");
    }
    f.pop_opt = cmd->add_option("--pop", f.pop, "Population size");
    f.gens_opt = cmd->add_option("--gens", f.gens, "Generations");
    cmd->add_option("--train-frac", f.train_frac, "Fraction of each class used for training");
    cmd->add_flag("--paper-params", f.full_scale, "Use the full-scale population of 1024 (explicit --pop/--gens still win)");
    cmd->add_option("--epochs", f.epochs, "SGD epochs per local search");
    cmd->add_option("--lr", f.lr, "SGD learning rate");
    cmd->add_option("--batch-frac", f.batch_frac, "Mini-batch size as a fraction of the training set");
    cmd->add_option("--top-k", f.top_k, "Number of fittest individuals tuned by local search");
    cmd->add_option("--ls-period", f.ls_period, "Generations between local search rounds");
    cmd->add_option("--final-epochs", f.final_epochs, "SGD epochs of the final polish (lse)");
    auto* exact = cmd->add_flag("--exact-agg-grad", f.exact_agg_grad, "Use the exact aggregation Jacobian (the default)");
    cmd->add_flag("--pass-through-agg-grad", f.pass_through_agg_grad, "Broadcast the aggregation gradient to every pixel instead of the exact Jacobian")->excludes(exact);
    cmd->add_flag("--no-elitism", f.no_elitism, "Do not copy the best individual into the next generation");
    cmd->add_option("--synth-n", f.synth_n, "Synthetic images per class");
    cmd->add_option("--synth-side", f.synth_side, "Synthetic image side length");
    cmd->add_option("--synth-noise", f.synth_noise, "Synthetic uniform noise amplitude");
    cmd->add_option("--synth-seed", f.synth_seed, "Synthetic dataset seed");
    cmd->add_option("--out", f.out, "Output directory");
}

auto to_train_options(TrainFlags const& f) -> TrainOptions
{
    TrainOptions o;
    if (!f.dataset.empty()) {
        o.dataset = f.dataset;
    }
    o.synth = f.synth;
    o.synth_spec = { f.synth_n, f.synth_side, f.synth_noise, f.synth_seed };
    o.split.shuffle_seed = f.shuffle_seed;
    o.split.train_fraction = f.train_frac;

    auto& evo = o.evolution;
    if (f.full_scale) {
        evo = EvolutionConfig::full_scale();
    }
    if (!f.full_scale || f.pop_opt->count() > 0) {
        evo.population_size = f.pop;
    }
    if (!f.full_scale || f.gens_opt->count() > 0) {
        evo.generations = f.gens;
    }
    evo.mode = parse_mode(f.mode);
    evo.seed = f.seed;
    evo.elitism = !f.no_elitism;
    auto& ls = evo.local_search;
    ls.epochs = f.epochs;
    ls.learning_rate = f.lr;
    ls.batch_fraction = f.batch_frac;
    ls.top_k = f.top_k;
    ls.period = f.ls_period;
    ls.final_epochs = f.final_epochs;
    ls.agg_gradient = f.pass_through_agg_grad ? AggGradient::PassThrough : AggGradient::Exact;
    o.out = f.out;
    return o;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app { "Memetic genetic programming for binary image classification" };
    app.require_subcommand(1);

    TrainFlags train_flags;
    auto* train = app.add_subcommand("train", "Evolve a classifier and write run logs and the best model");
    add_train_flags(train, train_flags, true);

    std::string model_path;
    std::string image_path;
    auto* predict = app.add_subcommand("predict", "Classify one image with a saved model");
    predict->add_option("--model", model_path, "Model file (s-expression)")->required();
    predict->add_option("--image", image_path, "Portable graymap image")->required();

    GradcheckOptions gc;
    auto* gradcheck = app.add_subcommand("gradcheck", "Compare analytic filter gradients with central finite differences");
    gradcheck->add_option("--trials", gc.trials, "Number of random trees to check");
    gradcheck->add_option("--seed", gc.seed, "Random seed");
    gradcheck->add_option("--step", gc.step, "Finite-difference step");
    gradcheck->add_option("--threshold", gc.threshold, "Maximum allowed relative error");
    gradcheck->add_option("--max-depth", gc.max_depth, "Maximum tree depth");
    gradcheck->add_flag("--break-grad", gc.break_grad, "Corrupt the analytic gradient (harness self-test)")->group("");

    SynthCommandOptions synth_opts;
    auto* synth = app.add_subcommand("synth", "Write the synthetic bright-quadrant dataset as .pgm files");
    synth->add_option("--n", synth_opts.spec.n_per_class, "Images per class");
    synth->add_option("--side", synth_opts.spec.side, "Image side length");
    synth->add_option("--noise", synth_opts.spec.noise, "Uniform noise amplitude");
    synth->add_option("--seed", synth_opts.spec.seed, "Random seed");
    std::string synth_out = "synth";
    synth->add_option("--out", synth_out, "Output directory");

    TrainFlags matrix_flags;
    matrix_flags.out = "matrix";
    MatrixOptions matrix_opts;
    std::vector<std::string> matrix_modes { "base", "ls", "lse" };
    auto* matrix = app.add_subcommand("matrix", "Run every (shuffle seed, evolution seed, mode) cell and aggregate");
    add_train_flags(matrix, matrix_flags, false);
    matrix->add_option("--shuffle-seeds", matrix_opts.shuffle_seeds, "Shuffle seeds")->delimiter(',');
    matrix->add_option("--evo-seeds", matrix_opts.evo_seeds, "Evolution seeds")->delimiter(',');
    matrix->add_option("--modes", matrix_modes, "Modes to run")->delimiter(',')->check(CLI::IsMember({ "base", "ls", "lse" }));
    matrix->add_option("--jobs", matrix_opts.jobs, "Cells to run concurrently");
    matrix->add_flag("--resume", matrix_opts.resume, "Skip cells that already have a summary.csv");

    try {
        app.parse(argc, argv);
    } catch (CLI::ParseError const& e) {
        auto const code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (train->parsed()) {
            return cmd_train(to_train_options(train_flags), std::cout, std::cerr);
        }
        if (predict->parsed()) {
            return cmd_predict(model_path, image_path, std::cout, std::cerr);
        }
        if (gradcheck->parsed()) {
            return cmd_gradcheck(gc, std::cout, std::cerr);
        }
        if (synth->parsed()) {
            synth_opts.out = synth_out;
            return cmd_synth(synth_opts, std::cout, std::cerr);
        }
        if (matrix->parsed()) {
            matrix_opts.base = to_train_options(matrix_flags);
            matrix_opts.out = matrix_flags.out;
            matrix_opts.modes.clear();
            for (auto const& m : matrix_modes) {
                matrix_opts.modes.push_back(parse_mode(m));
            }
            return cmd_matrix(matrix_opts, std::cout, std::cerr);
        }
    } catch (ConfigError const& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
