#include <pybind11/numpy.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "tslab/attack.hpp"
#include "tslab/denoiser.hpp"
#include "tslab/errors.hpp"
#include "tslab/harness.hpp"
#include "tslab/metrics.hpp"
#include "tslab/pgm.hpp"
#include "tslab/ts_sampler.hpp"
#include "tslab/typical_set.hpp"

namespace py = pybind11;
using namespace tslab;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

PixelGrid to_grid(const Array& a) {
  if (a.ndim() != 2) throw ArgumentError("expected a 2-D array");
  const auto h = static_cast<int>(a.shape(0));
  const auto w = static_cast<int>(a.shape(1));
  return PixelGrid(h, w, std::vector<double>(a.data(), a.data() + a.size()));
}

Array from_grid(const PixelGrid& g) {
  Array out({g.height(), g.width()});
  std::copy(g.values().begin(), g.values().end(), out.mutable_data());
  return out;
}

std::vector<double> to_vector(const Array& a) { return {a.data(), a.data() + a.size()}; }

Array from_span(std::span<const double> v) {
  Array out(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

NormKind norm_from_string(const std::string& name) {
  if (name == "l1") return NormKind::L1;
  if (name == "l2") return NormKind::L2;
  if (name == "linf") return NormKind::Linf;
  throw ArgumentError("unknown norm '" + name + "' (expected l1, l2 or linf)");
}

TypicalSetSpec make_spec(std::size_t dim, double sigma, double epsilon) { return {dim, sigma, epsilon, 0.05}; }

py::tuple as_tuple(const Interval& iv) { return py::make_tuple(iv.lo, iv.hi); }

}  // namespace

PYBIND11_MODULE(_tslab, m) {
  m.doc() = "Typical-set noise analysis, toy denoiser training and denoising attacks.";

  py::register_exception<ArgumentError>(m, "ArgumentError", PyExc_ValueError);
  py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
  py::register_exception<DegeneracyError>(m, "DegeneracyError", PyExc_ArithmeticError);
  py::register_exception<FileError>(m, "FileError", PyExc_OSError);

  m.def("gaussian_noise", [](std::size_t dim, double sigma, std::uint64_t seed, std::uint64_t stream) {
        SeededRng rng(seed, stream);
        return from_span(gaussian_noise(dim, sigma, rng).values());
      },
      py::arg("dim"), py::arg("sigma"), py::arg("seed") = 0, py::arg("stream") = 0);

  m.def("log_pdf", [](const Array& x, double sigma) { return log_pdf(to_vector(x), sigma); },
        py::arg("x"), py::arg("sigma"), "Gaussian log density in nats.");
  m.def("differential_entropy_bits", &differential_entropy_bits, py::arg("sigma"));
  m.def("typicality_radius", [](const Array& x, double sigma) { return typicality_radius(to_vector(x), sigma); },
        py::arg("x"), py::arg("sigma"));
  m.def("l2_concentration_bounds",
        [](std::size_t dim, double sigma, double epsilon) {
          return as_tuple(l2_concentration_bounds(make_spec(dim, sigma, epsilon)));
        },
        py::arg("dim"), py::arg("sigma"), py::arg("epsilon"));
  m.def("b2_bound",
        [](std::size_t dim, double sigma, double epsilon, double eta) {
          return b2_bound(make_spec(dim, sigma, epsilon), eta).value;
        },
        py::arg("dim"), py::arg("sigma"), py::arg("epsilon"), py::arg("eta"));
  m.def("binf_bound",
        [](std::size_t dim, double sigma, double epsilon, double eta) {
          return binf_bound(make_spec(dim, sigma, epsilon), eta).value;
        },
        py::arg("dim"), py::arg("sigma"), py::arg("epsilon"), py::arg("eta"));
  m.def("logpdf_shift_bounds",
        [](std::size_t dim, double sigma, double epsilon, double eta, const std::string& norm, double l1_tol) {
          return as_tuple(logpdf_shift_bounds(make_spec(dim, sigma, epsilon), eta, norm_from_string(norm), l1_tol));
        },
        py::arg("dim"), py::arg("sigma"), py::arg("epsilon"), py::arg("eta"), py::arg("norm") = "l2",
        py::arg("l1_tol") = 0.0);
  m.def("worst_case_linf_shift", [](const Array& x, double eta) {
        return from_span(worst_case_linf_shift(to_vector(x), eta));
      },
      py::arg("x"), py::arg("eta"));
  m.def("typical_set_miss_probability",
        [](std::size_t dim, double sigma, double epsilon) {
          return typical_set_miss_probability(make_spec(dim, sigma, epsilon));
        },
        py::arg("dim"), py::arg("sigma"), py::arg("epsilon"));

  m.def("ts_sample",
        [](const Array& s, double sigma, int iterations, std::uint64_t seed) {
          SeededRng rng(seed);
          const NoiseField out = ts_sample(NoiseField(sigma, to_vector(s)), TsConfig{iterations, sigma}, rng);
          return from_span(out.values());
        },
        py::arg("s"), py::arg("sigma"), py::arg("iterations") = 10, py::arg("seed") = 0,
        "Pushes a noise draw toward lower density; never raises log_pdf.");

  py::class_<DenoiserModel>(m, "Model")
      .def_static("load", &load_model, py::arg("path"))
      .def("save", [](const DenoiserModel& model, const std::filesystem::path& path) { save_model(model, path); },
           py::arg("path"))
      .def("denoise", [](const DenoiserModel& model, const Array& noisy) {
             return from_grid(forward(model, to_grid(noisy)));
           },
           py::arg("noisy"))
      .def_property_readonly("parameter_count", &DenoiserModel::parameter_count)
      .def_property_readonly("layers", [](const DenoiserModel& model) { return model.layers.size(); })
      .def_readonly("sigma_trained", &DenoiserModel::sigma_trained)
      .def_readonly("seed", &DenoiserModel::seed)
      .def("to_bytes", [](const DenoiserModel& model) {
             const auto bytes = serialize_model(model);
             return py::bytes(reinterpret_cast<const char*>(bytes.data()), bytes.size());
           })
      .def_static("from_bytes", [](const py::bytes& data) {
             const std::string raw = data;
             return deserialize_model(std::span(reinterpret_cast<const unsigned char*>(raw.data()), raw.size()));
           },
           py::arg("data"))
      .def(py::self == py::self);

  m.def("init_model", [](int layers, int channels, std::uint64_t seed) {
        return init_model(ModelArch{layers, channels}, seed);
      },
      py::arg("layers") = 5, py::arg("channels") = 16, py::arg("seed") = 1);

  m.def("synthetic_corpus",
        [](std::size_t count, int height, int width, std::uint64_t seed) {
          py::list out;
          for (const auto& g : synthetic_corpus(count, height, width, seed)) out.append(from_grid(g));
          return out;
        },
        py::arg("count"), py::arg("height"), py::arg("width"), py::arg("seed"));

  m.def("train",
        [](const std::vector<Array>& corpus, const std::string& strategy, double sigma, int iterations,
           int layers, int channels, int patch_size, int epochs, int steps_per_epoch, int batch_size,
           double learning_rate, std::uint64_t seed) {
          std::vector<PixelGrid> images;
          for (const auto& a : corpus) images.push_back(to_grid(a));
          TrainConfig cfg;
          const TsConfig ts{iterations, sigma};
          switch (strategy_from_string(strategy)) {
            case StrategyKind::Normal: cfg.strategy = NoiseStrategy::normal(sigma); break;
            case StrategyKind::TsPres: cfg.strategy = NoiseStrategy::ts_pres(ts); break;
            case StrategyKind::TsDef: cfg.strategy = NoiseStrategy::ts_def(ts); break;
            case StrategyKind::Mixed: throw ArgumentError("train: use the CLI for the mixed strategy");
          }
          cfg.arch = {layers, channels};
          cfg.patch_size = patch_size;
          cfg.patch_stride = std::max(1, patch_size / 2);
          cfg.epochs = epochs;
          cfg.steps_per_epoch = steps_per_epoch;
          cfg.batch_size = batch_size;
          cfg.learning_rate = learning_rate;
          cfg.seed = seed;
          TrainResult result;
          {
            py::gil_scoped_release release;
            result = train(cfg, images);
          }
          py::dict history;
          history["loss"] = result.history.loss;
          history["val_psnr"] = result.history.val_psnr;
          history["val_noisy_psnr"] = result.history.val_noisy_psnr;
          return py::make_tuple(result.model, history);
        },
        py::arg("corpus"), py::arg("strategy") = "normal", py::arg("sigma") = 25.0 / 255.0,
        py::arg("iterations") = 10, py::arg("layers") = 5, py::arg("channels") = 16, py::arg("patch_size") = 40,
        py::arg("epochs") = 10, py::arg("steps_per_epoch") = 0, py::arg("batch_size") = 8,
        py::arg("learning_rate") = 1e-3, py::arg("seed") = 1,
        "Returns (model, history).");

  m.def("attack",
        [](const DenoiserModel& model, const Array& clean, const Array& noisy, const std::string& norm,
           double epsilon, double alpha, int steps, bool random_init, std::uint64_t seed) {
          AttackConfig cfg;
          cfg.budget_norm = norm_from_string(norm);
          cfg.epsilon = epsilon;
          cfg.alpha = alpha;
          cfg.steps = steps;
          cfg.random_init = random_init;
          cfg.seed = seed;
          SeededRng rng = attack_rng(cfg, 0);
          return from_grid(run_attack(model, to_grid(clean), to_grid(noisy), cfg, rng));
        },
        py::arg("model"), py::arg("clean"), py::arg("noisy"), py::arg("norm") = "linf",
        py::arg("epsilon") = 3.0 / 255.0, py::arg("alpha") = 2.0 / 255.0, py::arg("steps") = 5,
        py::arg("random_init") = true, py::arg("seed") = 0);

  m.def("psnr", [](const Array& x, const Array& y) { return psnr(to_grid(x), to_grid(y)); }, py::arg("x"),
        py::arg("y"));
  m.def("ssim", [](const Array& x, const Array& y) { return ssim(to_grid(x), to_grid(y)); }, py::arg("x"),
        py::arg("y"));
  m.def("mae", [](const Array& x, const Array& y) { return mae(to_grid(x), to_grid(y)); }, py::arg("x"),
        py::arg("y"));

  m.def("read_pgm", [](const std::filesystem::path& path) { return from_grid(read_pgm(path)); }, py::arg("path"));
  m.def("write_pgm",
        [](const Array& image, const std::filesystem::path& path, std::uint32_t maxval) {
          write_pgm(to_grid(image), path, maxval);
        },
        py::arg("image"), py::arg("path"), py::arg("maxval") = 65535);

  m.def("run_command",
        [](const std::string& command, const std::filesystem::path& config, std::optional<std::uint64_t> seed,
           const std::filesystem::path& out) {
          RunOptions options;
          options.config_path = config;
          options.seed = seed;
          options.out_dir = out;
          std::ostringstream log;
          std::ostringstream err;
          int code = 0;
          {
            py::gil_scoped_release release;
            code = run_command(command, options, log, err);
          }
          return py::make_tuple(code, log.str(), err.str());
        },
        py::arg("command"), py::arg("config"), py::arg("seed") = py::none(), py::arg("out") = "tslab-out",
        "Runs a CLI command in-process; returns (exit_code, log, errors).");
}
