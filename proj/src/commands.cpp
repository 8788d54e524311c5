#include "memegp/commands.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "memegp/errors.hpp"
#include "memegp/grad_engine.hpp"
#include "memegp/log.hpp"

namespace memegp {

namespace fs = std::filesystem;

auto format_fixed(double v, int decimals) -> std::string
{
    std::array<char, 64> buf {};
    auto const [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::fixed, decimals);
    if (ec != std::errc {}) {
        return "nan";
    }
    return { buf.data(), ptr };
}

namespace {

    void write_text(fs::path const& path, std::string const& text)
    {
        std::ofstream out(path, std::ios::binary);
        if (!out) {
            throw IoError("cannot write " + path.string());
        }
        out << text;
        if (!out) {
            throw IoError("failed writing " + path.string());
        }
    }

    auto read_text(fs::path const& path) -> std::string
    {
        std::ifstream in(path, std::ios::binary);
        if (!in) {
            throw IoError("cannot open " + path.string());
        }
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }

    auto split_csv_line(std::string const& line) -> std::vector<std::string>
    {
        std::vector<std::string> fields;
        std::string field;
        for (auto ch : line) {
            if (ch == ',') {
                fields.push_back(field);
                field.clear();
            } else if (ch != '\r') {
                field += ch;
            }
        }
        fields.push_back(field);
        return fields;
    }

    auto parse_double(std::string const& text) -> double
    {
        double v = 0.0;
        auto const [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
        if (ec != std::errc {} || ptr != text.data() + text.size()) {
            throw FormatError("not a number: '" + text + "'");
        }
        return v;
    }

    struct Summary {
        double train_acc { 0.0 };
        double test_acc { 0.0 };
        double train_time_m { 0.0 };
        double test_time_ms { 0.0 };
    };

    auto read_summary(fs::path const& path) -> Summary
    {
        std::istringstream in(read_text(path));
        std::string header_line;
        std::string value_line;
        if (!std::getline(in, header_line) || !std::getline(in, value_line)) {
            throw FormatError(path.string() + ": expected a header and one data row");
        }
        auto const header = split_csv_line(header_line);
        auto const values = split_csv_line(value_line);
        auto field = [&](std::string const& name) {
            auto const it = std::find(header.begin(), header.end(), name);
            if (it == header.end() || static_cast<std::size_t>(it - header.begin()) >= values.size()) {
                throw FormatError(path.string() + ": missing column " + name);
            }
            return parse_double(values[static_cast<std::size_t>(it - header.begin())]);
        };
        return { field("train_acc"), field("test_acc"), field("train_time_m"), field("test_time_ms") };
    }

    auto run_one(TrainOptions const& opts) -> RunResult
    {
        auto const [train, test] = prepare_data(opts);
        auto const tag = std::string(to_string(opts.evolution.mode)) + " seed " + std::to_string(opts.evolution.seed);
        auto result = run(opts.evolution, train.items, test.items, [&](GenerationRecord const& rec) {
            if (log_enabled(LogLevel::Debug)) {
                log_line(LogLevel::Debug, "[" + tag + "] gen " + std::to_string(rec.generation) + " best " + format_fixed(rec.best_fitness, 4) + " mean " + format_fixed(rec.mean_fitness, 4) + " size " + format_fixed(rec.mean_size, 2));
            }
        });
        fs::create_directories(opts.out);
        write_run_outputs(opts.out, opts, result);
        return result;
    }

} // namespace

auto prepare_data(TrainOptions const& opts) -> std::pair<LabeledDataset, LabeledDataset>
{
    LabeledDataset ds;
    if (opts.synth) {
        Rng rng(opts.synth_spec.seed);
        ds = synth_bright_quadrant(opts.synth_spec.n_per_class, opts.synth_spec.side, opts.synth_spec.noise, rng);
    } else if (opts.dataset) {
        ds = load_dir(*opts.dataset);
    } else {
        throw ConfigError("either --dataset or --synth is required");
    }
    return split(ds, opts.split);
}

void write_run_outputs(fs::path const& dir, TrainOptions const& opts, RunResult const& result)
{
    auto const& log = result.log;

    std::string run_csv = "generation,best_fitness,mean_fitness,mean_size,elapsed_ms\n";
    for (auto const& rec : log.generations) {
        run_csv += std::to_string(rec.generation) + "," + format_fixed(rec.best_fitness, 6) + "," + format_fixed(rec.mean_fitness, 6) + "," + format_fixed(rec.mean_size, 4) + "," + format_fixed(rec.elapsed_ms, 3) + "\n";
    }
    write_text(dir / "run.csv", run_csv);

    std::string ls_csv = "generation,kind,individuals,epochs,best_fitness_before,best_fitness_after\n";
    for (auto const& ev : log.local_search) {
        ls_csv += std::to_string(ev.generation) + "," + ev.kind + "," + std::to_string(ev.individuals) + "," + std::to_string(ev.epochs) + "," + format_fixed(ev.best_fitness_before, 6) + "," + format_fixed(ev.best_fitness_after, 6) + "\n";
    }
    write_text(dir / "ls.csv", ls_csv);

    std::string summary = "train_acc,test_acc,train_time_m,test_time_ms,mode,seed,shuffle_seed,generations_run,early_stopped,best_nodes\n";
    summary += format_fixed(log.train_accuracy, 6) + "," + format_fixed(log.test_accuracy, 6) + "," + format_fixed(log.train_time_m, 6) + "," + format_fixed(log.test_time_ms, 6) + ",";
    summary += std::string(to_string(opts.evolution.mode)) + "," + std::to_string(opts.evolution.seed) + "," + std::to_string(opts.split.shuffle_seed) + ",";
    summary += std::to_string(log.generations.size()) + "," + (log.early_stopped ? "1" : "0") + "," + std::to_string(result.best.tree.node_count()) + "\n";
    write_text(dir / "summary.csv", summary);

    write_text(dir / "best_model.sexp", to_sexpr(result.best.tree) + "\n");
    write_text(dir / "best_model.dot", to_dot(result.best.tree));
}

auto cmd_train(TrainOptions const& opts, std::ostream& out, std::ostream& err) -> int
{
    try {
        auto const result = run_one(opts);
        auto const& log = result.log;
        for (auto const& ev : log.local_search) {
            out << "local search (" << ev.kind << ") at generation " << ev.generation << ": " << ev.individuals << " individual(s), " << ev.epochs << " epochs\n";
        }
        out << "generations run: " << log.generations.size() << (log.early_stopped ? " (early stop at fitness 1.0)" : "") << "\n";
        out << "train accuracy: " << format_fixed(log.train_accuracy, 4) << "\n";
        out << "test accuracy:  " << format_fixed(log.test_accuracy, 4) << "\n";
        out << "best model:     " << to_sexpr(result.best.tree) << "\n";
        out << "outputs in " << opts.out.string() << "\n";
        return kExitOk;
    } catch (ConfigError const& e) {
        err << "config error: " << e.what() << "\n";
        return kExitUsage;
    } catch (std::exception const& e) {
        err << "error: " << e.what() << "\n";
        return kExitFailure;
    }
}

auto cmd_predict(fs::path const& model, fs::path const& image, std::ostream& out, std::ostream& err) -> int
{
    try {
        auto const tree = parse_program(read_text(model));
        auto const img = read_pgm(image);
        auto const raw = evaluate(tree, img);
        auto const score = sigmoid(raw);
        out << "class " << label_from_output(raw) << "\n";
        out << "score " << format_fixed(score, 8) << "\n";
        return kExitOk;
    } catch (ParseError const& e) {
        err << "ParseError: " << model.string() << ": " << e.what() << "\n";
        return kExitFailure;
    } catch (std::exception const& e) {
        err << "error: " << e.what() << "\n";
        return kExitFailure;
    }
}

auto cmd_gradcheck(GradcheckOptions const& opts, std::ostream& out, std::ostream& err) -> int
{
    if (opts.trials < 1 || !(opts.step > 0.0) || opts.max_depth < 3) {
        err << "gradcheck needs trials >= 1, step > 0 and max depth >= 3\n";
        return kExitUsage;
    }
    constexpr int kMaxDraws = 100000;
    Rng rng(opts.seed);
    GradOptions const grad_opts { AggGradient::Exact, opts.break_grad };
    double overall = 0.0;
    int draws = 0;
    for (int trial = 1; trial <= opts.trials; ++trial) {
        while (true) {
            if (++draws > kMaxDraws) {
                err << "gradcheck: gave up after " << kMaxDraws << " draws\n";
                return kExitFailure;
            }
            auto const tree = generate(rng, 2, opts.max_depth);
            auto const side_h = 12 + uniform_index(rng, 13);
            auto const side_w = 12 + uniform_index(rng, 13);
            Image img(side_h, side_w);
            for (auto& v : img.pixels()) {
                v = uniform_real(rng, 0.0, 1.0);
            }
            auto const target = static_cast<int>(uniform_index(rng, 2));
            if (tree.convolve_nodes().empty()) {
                out << "trial " << trial << ": resampled (no convolve node)\n";
                continue;
            }
            GradCheckResult res;
            try {
                res = grad_check(tree, img, target, opts.step, grad_opts);
            } catch (ImageTooSmall const&) {
                out << "trial " << trial << ": resampled (image too small for tree)\n";
                continue;
            } catch (EmptyWindow const&) {
                out << "trial " << trial << ": resampled (empty window)\n";
                continue;
            }
            if (res.crossed_kink) {
                out << "trial " << trial << ": resampled (perturbation crossed a non-smooth point)\n";
                continue;
            }
            overall = std::max(overall, res.max_rel_error);
            out << "trial " << trial << ": parameters " << res.parameters << " max relative error " << res.max_rel_error << "\n";
            break;
        }
    }
    bool const pass = overall < opts.threshold;
    out << "overall max relative error " << overall << (pass ? " PASS" : " FAIL") << " (threshold " << opts.threshold << ")\n";
    return pass ? kExitOk : kExitFailure;
}

auto cmd_synth(SynthCommandOptions const& opts, std::ostream& out, std::ostream& err) -> int
{
    try {
        Rng rng(opts.spec.seed);
        auto const ds = synth_bright_quadrant(opts.spec.n_per_class, opts.spec.side, opts.spec.noise, rng);
        write_dir(ds, opts.out);
        out << "wrote " << ds.size() << " images to " << opts.out.string() << "\n";
        return kExitOk;
    } catch (ConfigError const& e) {
        err << "config error: " << e.what() << "\n";
        return kExitUsage;
    } catch (std::exception const& e) {
        err << "error: " << e.what() << "\n";
        return kExitFailure;
    }
}

auto cell_name(Mode mode, std::uint64_t shuffle_seed, std::uint64_t evo_seed) -> std::string
{
    return std::string(to_string(mode)) + "_shuffle" + std::to_string(shuffle_seed) + "_seed" + std::to_string(evo_seed);
}

auto cmd_matrix(MatrixOptions const& opts, std::ostream& out, std::ostream& err) -> int
{
    if (opts.shuffle_seeds.empty() || opts.evo_seeds.empty() || opts.modes.empty()) {
        err << "matrix needs at least one shuffle seed, evolution seed and mode\n";
        return kExitUsage;
    }
    try {
        auto probe = opts.base.evolution;
        probe.validate();
    } catch (ConfigError const& e) {
        err << "config error: " << e.what() << "\n";
        return kExitUsage;
    }

    struct Cell {
        Mode mode;
        std::uint64_t shuffle_seed;
        std::uint64_t evo_seed;
        std::string status;
        Summary summary;
        bool resumed { false };
    };
    std::vector<Cell> cells;
    for (auto mode : opts.modes) {
        for (auto s : opts.shuffle_seeds) {
            for (auto e : opts.evo_seeds) {
                cells.push_back({ mode, s, e, "pending", {}, false });
            }
        }
    }

    fs::create_directories(opts.out);
    std::atomic<std::size_t> next { 0 };
    auto worker = [&] {
        for (auto i = next++; i < cells.size(); i = next++) {
            auto& cell = cells[i];
            auto const dir = opts.out / cell_name(cell.mode, cell.shuffle_seed, cell.evo_seed);
            try {
                if (opts.resume && fs::exists(dir / "summary.csv")) {
                    cell.summary = read_summary(dir / "summary.csv");
                    cell.resumed = true;
                } else {
                    auto cell_opts = opts.base;
                    cell_opts.split.shuffle_seed = cell.shuffle_seed;
                    cell_opts.evolution.seed = cell.evo_seed;
                    cell_opts.evolution.mode = cell.mode;
                    cell_opts.out = dir;
                    auto const result = run_one(cell_opts);
                    cell.summary = { result.log.train_accuracy, result.log.test_accuracy, result.log.train_time_m, result.log.test_time_ms };
                }
                cell.status = "ok";
            } catch (std::exception const& e) {
                cell.status = std::string("failed: ") + e.what();
                std::replace(cell.status.begin(), cell.status.end(), ',', ';');
                std::replace(cell.status.begin(), cell.status.end(), '\n', ' ');
            }
            log_line(LogLevel::Info, "cell " + cell_name(cell.mode, cell.shuffle_seed, cell.evo_seed) + ": " + (cell.resumed ? "skipped (resume)" : cell.status));
        }
    };
    auto const jobs = std::max<std::size_t>(1, std::min(opts.jobs, cells.size()));
    std::vector<std::thread> pool;
    for (std::size_t j = 1; j < jobs; ++j) {
        pool.emplace_back(worker);
    }
    worker();
    for (auto& t : pool) {
        t.join();
    }

    std::string csv = "row,mode,shuffle_seed,evo_seed,status,train_acc,test_acc,train_time_m,test_time_ms\n";
    bool any_failed = false;
    for (auto const& c : cells) {
        csv += "run," + std::string(to_string(c.mode)) + "," + std::to_string(c.shuffle_seed) + "," + std::to_string(c.evo_seed) + "," + c.status;
        if (c.status == "ok") {
            csv += "," + format_fixed(c.summary.train_acc, 6) + "," + format_fixed(c.summary.test_acc, 6) + "," + format_fixed(c.summary.train_time_m, 6) + "," + format_fixed(c.summary.test_time_ms, 6) + "\n";
        } else {
            any_failed = true;
            csv += ",,,,\n";
        }
    }

    auto mean_std = [](std::vector<double> const& xs) {
        double mean = 0.0;
        for (auto x : xs) {
            mean += x;
        }
        mean /= static_cast<double>(xs.size());
        double ss = 0.0;
        for (auto x : xs) {
            ss += (x - mean) * (x - mean);
        }
        auto const sd = xs.size() > 1 ? std::sqrt(ss / static_cast<double>(xs.size() - 1)) : 0.0;
        return format_fixed(mean, 6) + "±" + format_fixed(sd, 6);
    };

    out << "mode  runs  train_acc              test_acc               train_time_m           test_time_ms\n";
    for (auto mode : opts.modes) {
        std::array<std::vector<double>, 4> cols;
        for (auto const& c : cells) {
            if (c.mode == mode && c.status == "ok") {
                cols[0].push_back(c.summary.train_acc);
                cols[1].push_back(c.summary.test_acc);
                cols[2].push_back(c.summary.train_time_m);
                cols[3].push_back(c.summary.test_time_ms);
            }
        }
        auto const n = cols[0].size();
        csv += "aggregate," + std::string(to_string(mode)) + ",,,n=" + std::to_string(n);
        std::string line = std::string(to_string(mode)) + "  " + std::to_string(n);
        for (auto const& col : cols) {
            auto const cell = n == 0 ? std::string() : mean_std(col);
            csv += "," + cell;
            line += "  " + cell;
        }
        csv += "\n";
        out << line << "\n";
    }
    try {
        write_text(opts.out / "matrix.csv", csv);
    } catch (std::exception const& e) {
        err << "error: " << e.what() << "\n";
        return kExitFailure;
    }
    return any_failed ? kExitFailure : kExitOk;
}

} // namespace memegp
