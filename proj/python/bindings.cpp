#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "memegp/commands.hpp"
#include "memegp/errors.hpp"
#include "memegp/evolution.hpp"
#include "memegp/grad_engine.hpp"
#include "memegp/program.hpp"

namespace py = pybind11;
using namespace memegp;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

auto to_image(Array const& a) -> Image
{
    if (a.ndim() != 2) {
        throw py::value_error("expected a 2-D array");
    }
    auto const h = static_cast<std::size_t>(a.shape(0));
    auto const w = static_cast<std::size_t>(a.shape(1));
    return Image(h, w, std::vector<double>(a.data(), a.data() + h * w));
}

auto to_array(Image const& img) -> Array
{
    Array out({ img.height(), img.width() });
    std::copy(img.pixels().begin(), img.pixels().end(), out.mutable_data());
    return out;
}

auto to_filter(std::vector<double> const& v) -> Filter
{
    if (v.size() != 9) {
        throw py::value_error("a filter has 9 coefficients");
    }
    Filter f;
    std::copy(v.begin(), v.end(), f.coefficients.begin());
    return f;
}

auto dataset_to_py(LabeledDataset const& ds) -> py::tuple
{
    py::list images;
    std::vector<int> labels;
    for (auto const& item : ds.items) {
        images.append(to_array(item.image));
        labels.push_back(item.label);
    }
    return py::make_tuple(images, labels);
}

auto dataset_from_py(py::list const& images, std::vector<int> const& labels) -> std::vector<LabeledImage>
{
    if (images.size() != labels.size()) {
        throw py::value_error("images and labels differ in length");
    }
    std::vector<LabeledImage> out;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        out.push_back({ to_image(images[i].cast<Array>()), labels[i] });
    }
    return out;
}

} // namespace

PYBIND11_MODULE(_core, m)
{
    m.doc() = "Memetic genetic programming for binary image classification";

    py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
    py::register_exception<ImageTooSmall>(m, "ImageTooSmall", PyExc_ValueError);
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

    py::class_<ProgramTree>(m, "Program")
        .def_static("parse", &parse_program, py::arg("text"))
        .def_static(
            "generate", [](std::uint64_t seed, int depth_min, int depth_max) {
                Rng rng(seed);
                return generate(rng, depth_min, depth_max);
            },
            py::arg("seed"), py::arg("depth_min") = 2, py::arg("depth_max") = 6)
        .def_property_readonly("node_count", &ProgramTree::node_count)
        .def_property_readonly("depth", &ProgramTree::depth)
        .def_property_readonly("convolve_nodes", &ProgramTree::convolve_nodes)
        .def("is_valid", [](ProgramTree const& t) { return is_valid(t); })
        .def("evaluate", [](ProgramTree const& t, Array const& img) { return evaluate(t, to_image(img)); }, py::arg("image"))
        .def("classify", [](ProgramTree const& t, Array const& img) { return classify(t, to_image(img)); }, py::arg("image"))
        .def("filter", [](ProgramTree const& t, std::size_t conv) {
            auto const& c = t.filter_of(conv).coefficients;
            return std::vector<double>(c.begin(), c.end());
        })
        .def("to_sexpr", &to_sexpr)
        .def("to_dot", &to_dot)
        .def("__str__", &to_sexpr)
        .def("__eq__", [](ProgramTree const& a, ProgramTree const& b) { return a == b; });

    m.def("convolve", [](Array const& img, std::vector<double> const& f) { return to_array(convolve(to_image(img), to_filter(f))); }, py::arg("image"), py::arg("filter"));
    m.def("pool", [](Array const& img) { return to_array(pool(to_image(img))); }, py::arg("image"));
    m.def("sigmoid", &sigmoid);

    m.def(
        "synth_bright_quadrant", [](std::size_t n, std::size_t side, double noise, std::uint64_t seed) {
            Rng rng(seed);
            return dataset_to_py(synth_bright_quadrant(n, side, noise, rng));
        },
        py::arg("n_per_class") = 50, py::arg("side") = 16, py::arg("noise") = 0.05, py::arg("seed") = 0);

    m.def(
        "grad_check", [](ProgramTree const& t, Array const& img, int target, double h) {
            auto const r = grad_check(t, to_image(img), target, h);
            return py::dict(py::arg("max_rel_error") = r.max_rel_error, py::arg("parameters") = r.parameters, py::arg("crossed_kink") = r.crossed_kink);
        },
        py::arg("program"), py::arg("image"), py::arg("target"), py::arg("h") = 1e-4);

    m.def(
        "train", [](py::list const& train_images, std::vector<int> const& train_labels, py::list const& test_images, std::vector<int> const& test_labels, std::string const& mode, std::uint64_t seed, std::size_t pop, int gens) {
            auto const train = dataset_from_py(train_images, train_labels);
            auto const test = dataset_from_py(test_images, test_labels);
            EvolutionConfig cfg;
            cfg.mode = parse_mode(mode);
            cfg.seed = seed;
            cfg.population_size = pop;
            cfg.generations = gens;
            RunResult result;
            {
                py::gil_scoped_release release;
                result = run(cfg, train, test);
            }
            py::list history;
            for (auto const& g : result.log.generations) {
                history.append(py::dict(py::arg("generation") = g.generation, py::arg("best_fitness") = g.best_fitness, py::arg("mean_fitness") = g.mean_fitness, py::arg("mean_size") = g.mean_size));
            }
            return py::dict(py::arg("best") = result.best.tree, py::arg("train_accuracy") = result.log.train_accuracy, py::arg("test_accuracy") = result.log.test_accuracy, py::arg("early_stopped") = result.log.early_stopped, py::arg("history") = history);
        },
        py::arg("train_images"), py::arg("train_labels"), py::arg("test_images"), py::arg("test_labels"), py::arg("mode") = "base", py::arg("seed") = 1, py::arg("pop") = 200, py::arg("gens") = 50);
}
