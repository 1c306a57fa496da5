#include <pybind11/pybind11.h>
#include <pybind11/numpy.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cstring>

#include <nlohmann/json.hpp>

#include "fa/boundary.hpp"
#include "fa/evaluation.hpp"
#include "fa/json_io.hpp"
#include "fa/saliency.hpp"
#include "fa/synthkit.hpp"

namespace py = pybind11;
using nlohmann::json;

namespace {

PyObject* fa_error_type = nullptr;

py::object to_py(const json& j) {
  switch (j.type()) {
    case json::value_t::null:
      return py::none();
    case json::value_t::boolean:
      return py::bool_(j.get<bool>());
    case json::value_t::number_integer:
      return py::int_(j.get<std::int64_t>());
    case json::value_t::number_unsigned:
      return py::int_(j.get<std::uint64_t>());
    case json::value_t::number_float:
      return py::float_(j.get<double>());
    case json::value_t::string:
      return py::str(j.get<std::string>());
    case json::value_t::array: {
      py::list out;
      for (const auto& v : j) out.append(to_py(v));
      return out;
    }
    case json::value_t::object: {
      py::dict out;
      for (const auto& [k, v] : j.items()) out[py::str(k)] = to_py(v);
      return out;
    }
    default:
      throw std::runtime_error("unsupported JSON value");
  }
}

template <typename T>
py::object as_dict(const T& v) {
  return to_py(json(v));
}

using ImageArray = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

cv::Mat to_mat(const ImageArray& a) {
  if (a.ndim() == 2) {
    cv::Mat gray(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)), CV_8UC1,
                 const_cast<std::uint8_t*>(a.data()));
    cv::Mat bgr;
    cv::merge(std::vector<cv::Mat>{gray, gray, gray}, bgr);
    return bgr;
  }
  if (a.ndim() != 3 || a.shape(2) != 3) fa::fail(fa::ErrorKind::DecodeError, "expected an HxWx3 BGR uint8 array");
  return cv::Mat(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)), CV_8UC3,
                 const_cast<std::uint8_t*>(a.data()))
      .clone();
}

py::array to_array(const cv::Mat& m) {
  const cv::Mat c = m.isContinuous() ? m : m.clone();
  if (c.type() == CV_8UC3) {
    py::array_t<std::uint8_t> out({c.rows, c.cols, 3});
    std::memcpy(out.mutable_data(), c.data, c.total() * 3);
    return out;
  }
  if (c.type() == CV_32F) {
    py::array_t<float> out({c.rows, c.cols});
    std::memcpy(out.mutable_data(), c.data, c.total() * sizeof(float));
    return out;
  }
  throw std::runtime_error("unsupported matrix type");
}

fa::MetricsReport report_of(std::int64_t tp, std::int64_t fp, std::int64_t fn, std::int64_t tn) {
  return fa::metrics({tp, fp, fn, tn, fa::Stratum::custom});
}

using Artifact = std::shared_ptr<const fa::ModelArtifact>;

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.attr("__version__") = FA_VERSION;

  fa_error_type = PyErr_NewException("fa_toolkit._core.FaError", PyExc_RuntimeError, nullptr);
  m.attr("FaError") = py::handle(fa_error_type);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const fa::Error& e) {
      py::object err = py::reinterpret_borrow<py::object>(fa_error_type)(e.what());
      err.attr("kind") = std::string(fa::to_string(e.kind()));
      PyErr_SetObject(fa_error_type, err.ptr());
    }
  });

  // metrics
  m.def("to_tenths_percent", &fa::to_tenths_percent, py::arg("numerator"), py::arg("denominator"));
  m.def(
      "metrics",
      [](std::int64_t tp, std::int64_t fp, std::int64_t fn, std::int64_t tn) { return as_dict(report_of(tp, fp, fn, tn)); },
      py::arg("tp"), py::arg("fp"), py::arg("fn"), py::arg("tn"));
  m.def(
      "reconcile_rates",
      [](double recall, double precision, double accuracy, double f1, std::optional<std::int64_t> total,
         std::optional<std::int64_t> positives) {
        py::list out;
        for (const auto& c : fa::reconcile_rates({recall, precision, accuracy, f1, total, positives})) {
          out.append(py::make_tuple(c.tp, c.fp, c.fn, c.tn));
        }
        return out;
      },
      py::arg("recall"), py::arg("precision"), py::arg("accuracy"), py::arg("f1"), py::arg("total") = py::none(),
      py::arg("positives") = py::none());

  // boundary geometry
  m.def(
      "apply_threshold",
      [](double p, double t) { return std::string(fa::to_string(fa::apply_threshold(p, t))); },
      py::arg("probability"), py::arg("threshold") = fa::kDefaultThreshold);
  m.def(
      "tile_intervals",
      [](int extent, int strip_width) {
        py::list out;
        for (const auto& s : fa::tile_intervals(extent, strip_width)) out.append(py::make_tuple(s.x0, s.x1));
        return out;
      },
      py::arg("extent"), py::arg("strip_width") = fa::kDefaultStripWidth);
  m.def(
      "estimate_boundary",
      [](const std::vector<std::tuple<int, int, double>>& strips, const std::string& distal, double threshold) {
        std::vector<fa::StripClassification> in;
        for (std::size_t i = 0; i < strips.size(); ++i) {
          const auto& [x0, x1, p] = strips[i];
          in.push_back({static_cast<int>(i), x0, x1, p, fa::apply_threshold(p, threshold)});
        }
        try {
          return as_dict(fa::estimate_boundary(in, fa::parse_distal(distal), threshold));
        } catch (const fa::NoFluorescentRegion& e) {
          return as_dict(e.estimate());
        }
      },
      py::arg("strips"), py::arg("distal") = "increasing_x", py::arg("threshold") = fa::kDefaultThreshold,
      "strips: (x0, x1, probability) tuples. boundary_x is None when nothing is fluorescent.");

  // synthetic data
  m.def(
      "synth_frame",
      [](int width, int height, std::optional<int> boundary_x, double falloff_width, const std::string& distal,
         double gain, double noise_sigma, std::uint64_t seed) {
        fa::synth::SynthParams p;
        p.width = width;
        p.height = height;
        p.colon_band = {height * 5 / 16, height * 11 / 16};
        p.boundary_x = boundary_x;
        p.falloff_width = falloff_width;
        p.distal_direction = fa::parse_distal(distal);
        p.fluorescence_gain = gain;
        p.noise_sigma = noise_sigma;
        p.seed = seed;
        const auto f = fa::synth::generate_frame(p);
        py::dict info;
        info["label"] = std::string(fa::to_string(f.truth_label));
        info["boundary_x"] = f.truth_boundary_x ? py::object(py::int_(*f.truth_boundary_x)) : py::object(py::none());
        info["band"] = py::make_tuple(p.colon_band.top, p.colon_band.bottom);
        return py::make_tuple(to_array(f.image), info);
      },
      py::arg("width") = 1440, py::arg("height") = 1080, py::arg("boundary_x") = py::none(),
      py::arg("falloff_width") = 40.0, py::arg("distal") = "increasing_x", py::arg("gain") = 1.0,
      py::arg("noise_sigma") = 4.0, py::arg("seed") = 0, "Returns (BGR image, truth dict).");
  m.def(
      "synth_dataset",
      [](const std::filesystem::path& out, int patients, int frames, double positive_fraction, int holdout_patients,
         int width, int height, std::uint64_t seed) {
        fa::synth::DatasetOptions o;
        o.n_patients = patients;
        o.frames_per_patient = frames;
        o.positive_fraction = positive_fraction;
        o.holdout_patients = holdout_patients;
        o.width = width;
        o.height = height;
        o.seed = seed;
        py::gil_scoped_release release;
        fa::synth::generate_dataset(o, out);
        return out / "manifest.jsonl";
      },
      py::arg("out"), py::arg("patients") = 7, py::arg("frames") = 256, py::arg("positive_fraction") = 0.196,
      py::arg("holdout_patients") = 0, py::arg("width") = 1440, py::arg("height") = 1080, py::arg("seed") = 1,
      "Writes frames and manifest.jsonl; returns the manifest path.");

  // model
  py::class_<fa::ModelArtifact, std::shared_ptr<fa::ModelArtifact>>(m, "Model")
      .def_static(
          "load", [](const std::filesystem::path& dir) { return std::make_shared<fa::ModelArtifact>(fa::ModelArtifact::load(dir)); },
          py::arg("dir"))
      .def_static(
          "untrained",
          [](int input_size, int width, std::uint64_t seed) {
            fa::TrainConfig c;
            c.input_size = input_size;
            c.crop.crop_size = input_size;
            c.base_width = width;
            c.seed = seed;
            return std::make_shared<fa::ModelArtifact>(fa::initial_network(c, std::nullopt), c);
          },
          py::arg("input_size") = 224, py::arg("width") = 64, py::arg("seed") = 0)
      .def_static(
          "train",
          [](const std::filesystem::path& manifest, int epochs, int crop, int width, double lr, int batch_size,
             std::uint64_t seed, bool class_weighting) {
            fa::TrainConfig c;
            c.epochs = epochs;
            c.crop.crop_size = crop;
            c.crop.seed = seed;
            c.base_width = width;
            c.learning_rate = lr;
            c.batch_size = batch_size;
            c.seed = seed;
            c.class_weighting = class_weighting;
            py::gil_scoped_release release;
            auto r = fa::train(fa::DatasetManifest::load(manifest), c);
            return std::const_pointer_cast<fa::ModelArtifact>(r.artifact);
          },
          py::arg("manifest"), py::arg("epochs") = 4, py::arg("crop") = 224, py::arg("width") = 64,
          py::arg("lr") = 1e-3, py::arg("batch_size") = 16, py::arg("seed") = 0, py::arg("class_weighting") = true)
      .def("save", &fa::ModelArtifact::save, py::arg("dir"))
      .def_property_readonly("version", &fa::ModelArtifact::version)
      .def_property_readonly("threshold", &fa::ModelArtifact::threshold)
      .def_property_readonly("input_size", &fa::ModelArtifact::input_size)
      .def_property_readonly("architecture_id", &fa::ModelArtifact::architecture_id)
      .def(
          "predict",
          [](const fa::ModelArtifact& a, const ImageArray& img, std::optional<double> threshold) {
            const auto mat = to_mat(img);
            fa::ClassificationResult r;
            {
              py::gil_scoped_release release;
              r = threshold ? fa::predict(a, mat, *threshold) : fa::predict(a, mat);
            }
            return as_dict(r);
          },
          py::arg("image"), py::arg("threshold") = py::none(), "image: HxWx3 BGR uint8.")
      .def(
          "boundary",
          [](const fa::ModelArtifact& a, const ImageArray& img, int strip_width, const std::string& axis,
             const std::string& distal, std::optional<double> threshold) {
            fa::BoundaryOptions o{strip_width, fa::parse_axis(axis), fa::parse_distal(distal), threshold};
            const auto mat = to_mat(img);
            try {
              return as_dict(fa::analyze_boundary(a, mat, o));
            } catch (const fa::NoFluorescentRegion& e) {
              auto d = as_dict(e.estimate());
              d["reason"] = "no_fluorescent_region";
              return d;
            }
          },
          py::arg("image"), py::arg("strip_width") = fa::kDefaultStripWidth, py::arg("axis") = "horizontal",
          py::arg("distal") = "increasing_x", py::arg("threshold") = py::none())
      .def(
          "saliency",
          [](const fa::ModelArtifact& a, const ImageArray& img) {
            const auto map = fa::compute_saliency(a, to_mat(img));
            return py::make_tuple(to_array(map.values), std::string(fa::to_string(map.explained_class)));
          },
          py::arg("image"), "Returns (HxW float32 map in [0, 1], explained class).")
      .def(
          "saliency_overlay",
          [](const fa::ModelArtifact& a, const ImageArray& img, double opacity) {
            const auto mat = to_mat(img);
            return to_array(fa::render_overlay(mat, fa::compute_saliency(a, mat), opacity));
          },
          py::arg("image"), py::arg("opacity") = 0.5);
}
