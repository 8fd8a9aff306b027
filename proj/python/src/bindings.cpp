#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "cli.hpp"
#include "tomoprior/error.hpp"
#include "tomoprior/generator.hpp"
#include "tomoprior/metrics.hpp"
#include "tomoprior/phantom.hpp"
#include "tomoprior/projector.hpp"
#include "tomoprior/sart.hpp"
#include "tomoprior/scan.hpp"
#include "tomoprior/tv.hpp"
#include "tomoprior/weights_io.hpp"

namespace py = pybind11;
using namespace tomoprior;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

ImageGrid to_image(const Array& a, double pixel_size) {
  if (a.ndim() != 2 || a.shape(0) != a.shape(1))
    throw InvalidInput("expected a square 2-D image");
  const auto n = static_cast<std::size_t>(a.shape(0));
  return ImageGrid(n, pixel_size, std::vector<double>(a.data(), a.data() + n * n));
}

Array from_image(const ImageGrid& img) {
  const auto n = static_cast<py::ssize_t>(img.side());
  Array out({n, n});
  std::copy(img.values().begin(), img.values().end(), out.mutable_data());
  return out;
}

ParallelGeometry sino_geometry(const Array& a, double angular_range, double detector_spacing,
                               double angle_start) {
  if (a.ndim() != 2) throw InvalidInput("expected a 2-D sinogram (views x detectors)");
  ParallelGeometry g;
  g.num_views = static_cast<std::size_t>(a.shape(0));
  g.num_detectors = static_cast<std::size_t>(a.shape(1));
  g.angular_range = angular_range;
  g.detector_spacing = detector_spacing;
  g.angle_start = angle_start;
  g.validate();
  return g;
}

Sinogram to_sino(const Array& a, double angular_range, double detector_spacing,
                 double angle_start) {
  const auto g = sino_geometry(a, angular_range, detector_spacing, angle_start);
  return Sinogram(g, std::vector<double>(a.data(), a.data() + g.num_rays()));
}

Array from_sino(const Sinogram& s) {
  const auto& g = s.geometry();
  Array out({static_cast<py::ssize_t>(g.num_views), static_cast<py::ssize_t>(g.num_detectors)});
  std::copy(s.values().begin(), s.values().end(), out.mutable_data());
  return out;
}

py::dict scenario_dict(const ScanScenario& s) {
  py::dict d;
  d["name"] = s.name;
  d["kind"] = to_string(s.kind);
  d["beam_intensity"] = s.beam_intensity;
  d["num_views"] = s.num_views;
  d["angular_range"] = s.angular_range;
  return d;
}

}  // namespace

PYBIND11_MODULE(_tomoprior, m) {
  m.doc() = "SART reconstruction with clamp, TV and learned priors";

  py::register_exception<InvalidInput>(m, "InvalidInput", PyExc_ValueError);
  py::register_exception<DataError>(m, "DataError", PyExc_RuntimeError);

  constexpr double pi = std::numbers::pi;

  m.def("shepp_logan", [](std::size_t side) { return from_image(shepp_logan(side)); },
        py::arg("side"));
  m.def("random_phantom",
        [](std::size_t side, std::uint64_t seed) { return from_image(random_phantom(side, seed)); },
        py::arg("side"), py::arg("seed"));
  m.def("rotate90",
        [](const Array& img, int turns) { return from_image(rotate90(to_image(img, 1.0), turns)); },
        py::arg("image"), py::arg("quarter_turns"));

  m.def(
      "forward_project",
      [](const Array& img, std::size_t num_views, double angular_range, double pixel_size) {
        const auto image = to_image(img, pixel_size);
        return from_sino(forward_project(
            image, ParallelGeometry::for_image(image.side(), pixel_size, num_views, angular_range)));
      },
      py::arg("image"), py::arg("num_views"), py::arg("angular_range") = pi,
      py::arg("pixel_size") = 1.0,
      "Line integrals on the default detector layout, shape (views, detectors).");
  m.def(
      "back_project",
      [](const Array& sino, std::size_t side, double angular_range, double pixel_size) {
        return from_image(back_project(to_sino(sino, angular_range, pixel_size, 0.0), side, pixel_size));
      },
      py::arg("sinogram"), py::arg("side"), py::arg("angular_range") = pi,
      py::arg("pixel_size") = 1.0);

  m.def(
      "apply_poisson_noise",
      [](const Array& sino, double beam_intensity, std::uint64_t seed) {
        return from_sino(apply_poisson_noise(to_sino(sino, pi, 1.0, 0.0), beam_intensity, seed));
      },
      py::arg("sinogram"), py::arg("beam_intensity"), py::arg("seed"));

  m.def(
      "scenario_preset",
      [](const std::string& name, const std::string& scale) {
        return scenario_dict(scenario_preset(name, parse_scale(scale)));
      },
      py::arg("name"), py::arg("scale") = "desk");

  m.def(
      "simulate_scenario",
      [](const Array& phantom, const std::string& name, std::uint64_t seed,
         const std::string& scale) {
        const auto sc = parse_scale(scale);
        const auto pair = simulate_scenario(to_image(phantom, 1.0), scenario_preset(name, sc),
                                            seed, normal_dose(sc));
        return py::make_tuple(from_sino(pair.clean), from_sino(pair.degraded));
      },
      py::arg("phantom"), py::arg("scenario"), py::arg("seed"), py::arg("scale") = "desk",
      "Returns (clean, degraded) noisy sinograms.");

  m.def(
      "reconstruct",
      [](const Array& sino, std::size_t side, std::size_t iterations, std::size_t subsets,
         double relaxation, const std::string& prior, const std::string& weights,
         double angular_range, double pixel_size, std::optional<Array> truth) {
        ReconConfig cfg;
        cfg.iterations = iterations;
        cfg.num_subsets = subsets;
        cfg.relaxation = relaxation;
        cfg.prior = parse_prior(prior);
        cfg.weights_path = weights;
        ImageGrid gt;
        if (truth) gt = to_image(*truth, pixel_size);
        ReconResult r;
        {
          py::gil_scoped_release release;
          r = reconstruct(to_sino(sino, angular_range, pixel_size, 0.0), side, pixel_size, cfg,
                          truth ? &gt : nullptr);
        }
        return py::make_tuple(from_image(r.image), r.residuals, r.psnr);
      },
      py::arg("sinogram"), py::arg("side"), py::arg("iterations") = 20, py::arg("subsets") = 10,
      py::arg("relaxation") = 1.0, py::arg("prior") = "clamp", py::arg("weights") = "",
      py::arg("angular_range") = pi, py::arg("pixel_size") = 1.0,
      py::arg("ground_truth") = py::none(),
      "Returns (image, residuals, psnr). prior: clamp, tv or generator.");

  m.def("mse", [](const Array& x, const Array& y) { return mse(to_image(x, 1), to_image(y, 1)); });
  m.def("psnr", [](const Array& x, const Array& y) { return psnr(to_image(x, 1), to_image(y, 1)); },
        py::arg("x"), py::arg("ground_truth"));
  m.def(
      "ssim",
      [](const Array& x, const Array& y, std::optional<double> dynamic_range) {
        SsimOptions o;
        o.dynamic_range = dynamic_range;
        return ssim(to_image(x, 1), to_image(y, 1), o);
      },
      py::arg("x"), py::arg("ground_truth"), py::arg("dynamic_range") = py::none());
  m.def("tv_value", [](const Array& x) { return tv_value(to_image(x, 1)); });

  m.def(
      "generator_forward",
      [](const Array& img, const std::string& weights) {
        const auto w = load_weights(weights);
        return from_image(generator_forward(to_image(img, 1.0), w));
      },
      py::arg("image"), py::arg("weights"));
  m.def(
      "make_generator_file",
      [](const std::string& path, std::size_t side, std::vector<std::size_t> channels,
         std::vector<std::size_t> strides, bool attention, std::uint64_t seed) {
        GeneratorLayout layout{std::move(channels), std::move(strides), attention};
        save_weights(make_generator(side, layout, 1.0, seed), path);
      },
      py::arg("path"), py::arg("side"), py::arg("channels"), py::arg("strides"),
      py::arg("attention") = true, py::arg("seed") = 0,
      "Writes a seed-initialized generator weight file.");
  m.def(
      "weights_descriptor",
      [](const std::string& path) { return descriptor_json(load_weights(path)); },
      py::arg("path"));

  m.def(
      "run_cli",
      [](std::vector<std::string> args) {
        args.insert(args.begin(), "tomoprior");
        std::ostringstream out, err;
        const int code = cli::run_cli(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs a tomoprior subcommand; returns (exit code, stdout, stderr).");
}
