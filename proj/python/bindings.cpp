#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "radarfuse/io.hpp"
#include "radarfuse/metrics.hpp"
#include "radarfuse/pipeline.hpp"
#include "radarfuse/rng.hpp"
#include "radarfuse/sparse_depth.hpp"
#include "radarfuse/synth.hpp"

namespace py = pybind11;
using namespace radarfuse;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;

nn::Tensor<float> tensor_from_image(const FloatArray& arr) {
  if (arr.ndim() != 2) throw std::invalid_argument("image must be a (h, w) array");
  nn::Tensor<float> t({1, static_cast<int>(arr.shape(0)), static_cast<int>(arr.shape(1))});
  std::copy_n(arr.data(), t.numel(), t.data());
  return t;
}

nn::Tensor<float> tensor_from_flow(const FloatArray& arr) {
  if (arr.ndim() != 3 || arr.shape(0) != 2)
    throw std::invalid_argument("flow must be a (2, h, w) array");
  nn::Tensor<float> t({2, static_cast<int>(arr.shape(1)), static_cast<int>(arr.shape(2))});
  std::copy_n(arr.data(), t.numel(), t.data());
  return t;
}

py::array_t<float> array_from_tensor(const nn::Tensor<float>& t) {
  std::vector<py::ssize_t> shape(t.shape().begin(), t.shape().end());
  py::array_t<float> out(shape);
  std::copy_n(t.data(), t.numel(), out.mutable_data());
  return out;
}

py::array_t<float> array_from_gray(const nn::Tensor<float>& t) {
  py::array_t<float> out({t.dim(1), t.dim(2)});
  std::copy_n(t.data(), t.numel(), out.mutable_data());
  return out;
}

py::array_t<float> array_from_map(const SparseDepthMap& map) {
  py::array_t<float> out({map.height(), map.width()});
  std::copy_n(map.values().data(), map.values().size(), out.mutable_data());
  return out;
}

SparseDepthMap map_from_array(const FloatArray& arr) {
  if (arr.ndim() != 2) throw std::invalid_argument("depth map must be a (h, w) array");
  SparseDepthMap map(static_cast<int>(arr.shape(1)), static_cast<int>(arr.shape(0)));
  std::copy_n(arr.data(), map.values().size(), map.values().data());
  return map;
}

io::RunConfig inference_config(double d_max, int v, double tau) {
  io::RunConfig cfg;
  cfg.d_max = d_max;
  cfg.v = v;
  cfg.tau = tau;
  return cfg;
}

// float-compute model plus the glue the python side needs: random init,
// checkpoint round-trip and ERM scoring / thresholding.
struct Model {
  FusionModel<float> net;

  Model(double d_max, int feature_channels) : net(d_max, feature_channels, 64) {}

  void init(std::uint64_t seed) {
    Rng rng(seed);
    net.init(rng);
  }

  void save(const std::string& path) {
    const auto params = net.params();
    io::save_checkpoint<float>(path, static_cast<float>(net.d_max),
                               net.evaluator.feature_channels(), params);
  }

  static Model load(const std::string& path) {
    const auto data = io::load_checkpoint(path);
    Model m(data.d_max, data.feature_channels);
    const auto params = m.net.params();
    io::restore_params<float>(data, params);
    return m;
  }

  EstimatedMap infer(const FloatArray& image, const FloatArray& flow,
                     const std::vector<RadarReturn>& returns, const CameraIntrinsics& cam, int v,
                     double tau) {
    const auto cfg = inference_config(net.d_max, v, tau);
    return infer_em(net, tensor_from_image(image), tensor_from_flow(flow), returns, cam, cfg);
  }

  std::vector<double> score(const FloatArray& image, const FloatArray& flow,
                            const std::vector<ErmEntry>& entries) {
    const nn::Tensor<float> packed =
        pack_model_input<float>(tensor_from_image(image), tensor_from_flow(flow));
    const nn::Tensor<float> features = net.extractor.forward(packed, false);
    return score_entries(net, features, entries);
  }
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Camera-radar depth fusion: radar map expansion, LiDAR-supervised "
            "candidate selection, learned candidate scoring and depth completion.";

  py::register_exception<io::FileWriteError>(m, "FileWriteError", PyExc_OSError);
  py::register_exception<io::FormatError>(m, "FormatError", PyExc_ValueError);
  py::register_exception<io::ConfigError>(m, "ConfigError", PyExc_ValueError);

  py::class_<CameraIntrinsics>(m, "CameraIntrinsics")
      .def(py::init([](double fx, double fy, double cx, double cy, int width, int height) {
             return CameraIntrinsics{fx, fy, cx, cy, width, height};
           }),
           py::arg("fx"), py::arg("fy"), py::arg("cx"), py::arg("cy"), py::arg("width"),
           py::arg("height"))
      .def_readwrite("fx", &CameraIntrinsics::fx)
      .def_readwrite("fy", &CameraIntrinsics::fy)
      .def_readwrite("cx", &CameraIntrinsics::cx)
      .def_readwrite("cy", &CameraIntrinsics::cy)
      .def_readwrite("width", &CameraIntrinsics::width)
      .def_readwrite("height", &CameraIntrinsics::height);

  py::class_<RadarReturn>(m, "RadarReturn")
      .def(py::init([](double x, double z) { return RadarReturn{x, z}; }), py::arg("x"),
           py::arg("z"))
      .def_readwrite("x", &RadarReturn::x)
      .def_readwrite("z", &RadarReturn::z)
      .def_property_readonly("depth", &RadarReturn::depth);

  py::class_<SparseDepthMap>(m, "SparseDepthMap")
      .def(py::init<int, int>(), py::arg("width"), py::arg("height"))
      .def_property_readonly("width", &SparseDepthMap::width)
      .def_property_readonly("height", &SparseDepthMap::height)
      .def("at", &SparseDepthMap::at, py::arg("u"), py::arg("v"))
      .def("set", &SparseDepthMap::set, py::arg("u"), py::arg("v"), py::arg("depth"))
      .def("measured", &SparseDepthMap::measured, py::arg("u"), py::arg("v"))
      .def("measured_count", &SparseDepthMap::measured_count)
      .def("to_numpy", &array_from_map)
      .def_static("from_numpy", &map_from_array, py::arg("array"))
      .def("__eq__",
           [](const SparseDepthMap& a, const SparseDepthMap& b) { return a == b; })
      .def("__repr__", [](const SparseDepthMap& m_) {
        return "SparseDepthMap(" + std::to_string(m_.width()) + "x" +
               std::to_string(m_.height()) + ", " + std::to_string(m_.measured_count()) +
               " measured)";
      });

  py::class_<ErmEntry>(m, "ErmEntry")
      .def_property_readonly("u", [](const ErmEntry& e) { return e.pixel.u; })
      .def_property_readonly("v", [](const ErmEntry& e) { return e.pixel.v; })
      .def_readonly("depth", &ErmEntry::depth)
      .def_readonly("source", &ErmEntry::source);

  py::class_<RmBuildResult>(m, "RmBuildResult")
      .def_readonly("map", &RmBuildResult::map)
      .def_readonly("dropped_returns", &RmBuildResult::dropped_returns);

  py::class_<ErmBuildResult>(m, "ErmBuildResult")
      .def_readonly("map", &ErmBuildResult::map)
      .def_readonly("entries", &ErmBuildResult::entries)
      .def_readonly("dropped_returns", &ErmBuildResult::dropped_returns);

  py::class_<PcrmResult>(m, "PcrmResult")
      .def_readonly("pcrm", &PcrmResult::pcrm)
      .def_property_readonly("positives",
                             [](const PcrmResult& r) { return r.labels.positives; })
      .def_property_readonly("negatives",
                             [](const PcrmResult& r) { return r.labels.negatives; })
      .def_property_readonly("unlabeled",
                             [](const PcrmResult& r) { return r.labels.unlabeled; });

  py::class_<EstimatedMap>(m, "EstimatedMap")
      .def_readonly("em", &EstimatedMap::em)
      .def_readonly("probability", &EstimatedMap::probability);

  py::class_<MetricsReport>(m, "MetricsReport")
      .def_readonly("mae", &MetricsReport::mae)
      .def_readonly("rel", &MetricsReport::rel)
      .def_readonly("rmse", &MetricsReport::rmse)
      .def_readonly("evaluated_pixel_count", &MetricsReport::evaluated_pixel_count)
      .def("__repr__", [](const MetricsReport& r) {
        return "MetricsReport(mae=" + std::to_string(r.mae) + ", rel=" + std::to_string(r.rel) +
               ", rmse=" + std::to_string(r.rmse) + ", pixels=" +
               std::to_string(r.evaluated_pixel_count) + ")";
      });

  m.def(
      "build_rm",
      [](const std::vector<RadarReturn>& returns, const CameraIntrinsics& cam, int row_offset) {
        return build_rm(returns, cam, row_offset);
      },
      py::arg("returns"), py::arg("camera"), py::arg("row_offset") = 0,
      "Project each radar return to its horizon-row pixel; nearer depth wins collisions.");

  m.def(
      "build_erm",
      [](const std::vector<RadarReturn>& returns, const CameraIntrinsics& cam, int v,
         int row_offset) { return build_erm(returns, cam, v, row_offset); },
      py::arg("returns"), py::arg("camera"), py::arg("v"), py::arg("row_offset") = 0,
      "Expand each projected return upward over v rows, keeping every candidate entry.");

  m.def(
      "select_pcrm",
      [](const std::vector<ErmEntry>& entries, const SparseDepthMap& lm, double t_abs,
         double t_rel, bool negatives_include_uncovered) {
        return select_pcrm(entries, lm, MatchThresholds{t_abs, t_rel},
                           negatives_include_uncovered);
      },
      py::arg("entries"), py::arg("lm"), py::arg("t_abs") = 1.0, py::arg("t_rel") = 0.01,
      py::arg("negatives_include_uncovered") = false,
      "Label entries against the LiDAR map and collect the matching ones.");

  m.def(
      "complete_depth",
      [](const SparseDepthMap& sparse, const FloatArray& image) {
        return complete_depth(sparse, tensor_from_image(image));
      },
      py::arg("sparse"), py::arg("image"),
      "Densify a sparse map by image-guided nearest-neighbor interpolation.");

  m.def("evaluate_depth", &evaluate_depth, py::arg("pred"), py::arg("reference"),
        "MAE / REL / RMSE of a prediction over the reference's measured pixels.");

  m.def("binary_auc", &binary_auc, py::arg("scores"), py::arg("labels"),
        "Area under the ROC curve for binary labels, ties counted half.");

  m.def("compute_expansion_pixels", &compute_expansion_pixels, py::arg("camera"),
        py::arg("theta_deg"),
        "Pixel count covering a vertical angular uncertainty under the camera's fy.");

  m.def(
      "load_sdm1", [](const std::string& path) { return io::load_sdm1(path); }, py::arg("path"));
  m.def(
      "save_sdm1",
      [](const std::string& path, const SparseDepthMap& map) { io::save_sdm1(path, map); },
      py::arg("path"), py::arg("map"));
  m.def(
      "load_sdm2",
      [](const std::string& path) { return array_from_tensor(io::load_sdm2(path)); },
      py::arg("path"));
  m.def(
      "save_sdm2",
      [](const std::string& path, const FloatArray& flow) {
        io::save_sdm2(path, tensor_from_flow(flow));
      },
      py::arg("path"), py::arg("flow"));
  m.def(
      "load_pgm", [](const std::string& path) { return array_from_gray(io::load_pgm(path)); },
      py::arg("path"));

  m.def(
      "generate_scene",
      [](std::uint64_t seed) {
        const auto bundle = synth::generate_scene(synth::make_standard_scene(seed), {});
        py::dict out;
        out["image"] = array_from_gray(bundle.render.image);
        out["flow"] = array_from_tensor(bundle.render.flow);
        out["gt"] = bundle.render.depth;
        out["lm"] = bundle.lm;
        out["radar"] = bundle.radar.returns;
        out["camera"] = bundle.scene.camera;
        return out;
      },
      py::arg("seed"),
      "Render one synthetic scene with its LiDAR map and radar returns.");

  py::class_<Model>(m, "Model")
      .def(py::init<double, int>(), py::arg("d_max") = 80.0, py::arg("feature_channels") = 32)
      .def("init", &Model::init, py::arg("seed"),
           "Randomly initialize all parameters from the seed.")
      .def("save", &Model::save, py::arg("path"))
      .def_static("load", &Model::load, py::arg("path"))
      .def("infer", &Model::infer, py::arg("image"), py::arg("flow"), py::arg("returns"),
           py::arg("camera"), py::arg("v") = 60, py::arg("tau") = 0.5,
           "Expand, score and threshold radar candidates into an estimated depth map.")
      .def("score", &Model::score, py::arg("image"), py::arg("flow"), py::arg("entries"),
           "Evaluator probability for each entry.")
      .def_property_readonly("d_max", [](const Model& mm) { return mm.net.d_max; })
      .def_property_readonly("feature_channels",
                             [](const Model& mm) { return mm.net.evaluator.feature_channels(); });
}
