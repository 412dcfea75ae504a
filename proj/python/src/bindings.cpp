#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <vector>

#include "terrafuse/bgk.hpp"
#include "terrafuse/config.hpp"
#include "terrafuse/pipeline.hpp"
#include "terrafuse/synth.hpp"

namespace py = pybind11;
using namespace terrafuse;

namespace {

template <typename T>
py::array_t<T> square(const std::vector<T>& data, int side) {
  py::array_t<T> out({side, side});
  std::copy(data.begin(), data.end(), out.mutable_data());
  return out;
}

py::array_t<std::uint8_t> labels(const CostMap& map) {
  py::array_t<std::uint8_t> out({map.side(), map.side()});
  auto* dst = out.mutable_data();
  for (std::size_t i = 0; i < map.label.size(); ++i) dst[i] = static_cast<std::uint8_t>(map.label[i]);
  return out;
}

py::object optional_float(bool present, double v) { return present ? py::object(py::float_(v)) : py::none(); }

py::dict metrics_dict(const MetricReport& m) {
  py::dict d;
  d["frame"] = m.frame_id;
  const bool t = m.traversability.has_value();
  const bool e = m.elevation.has_value();
  d["P"] = optional_float(t, t ? m.traversability->precision : 0.0);
  d["R"] = optional_float(t, t ? m.traversability->recall : 0.0);
  d["F1"] = optional_float(t, t ? m.traversability->f1 : 0.0);
  d["E"] = optional_float(e, e ? m.elevation->mean_abs_error : 0.0);
  d["RMSE"] = optional_float(e, e ? m.elevation->rmse : 0.0);
  d["Rc"] = optional_float(e, e ? m.elevation->coverage : 0.0);
  return d;
}

std::vector<BgkObservation> to_observations(const std::vector<std::pair<double, double>>& xy,
                                            const std::vector<double>& means, const std::vector<double>& variances) {
  if (xy.size() != means.size() || xy.size() != variances.size()) {
    throw std::invalid_argument("positions, means and variances must have the same length");
  }
  std::vector<BgkObservation> obs(xy.size());
  for (std::size_t i = 0; i < obs.size(); ++i) {
    obs[i].position = Vec2(xy[i].first, xy[i].second);
    obs[i].mean = means[i];
    obs[i].variance = variances[i];
  }
  return obs;
}

py::list run_scene(const std::string& name, int frames, const PipelineConfig& cfg, std::uint64_t seed,
                   bool evaluate) {
  const SyntheticScene scene(builtin_scene(name, frames, cfg.lidar_height));
  const std::vector<ScanFrame> sequence = simulate_sequence(scene, seed);
  py::list out;
  std::vector<FrameResult> results;
  {
    py::gil_scoped_release release;
    results = run_pipeline(cfg, sequence);
  }
  for (const FrameResult& r : results) {
    py::dict d;
    d["frame"] = r.frame_id;
    const auto& t = r.pose.translation();
    d["position"] = py::make_tuple(t.x(), t.y(), t.z());
    d["elevation"] = square(r.terrain.elevation, r.terrain.side());
    d["variance"] = square(r.terrain.variance, r.terrain.side());
    d["valid"] = square(r.terrain.valid, r.terrain.side());
    d["labels"] = labels(r.costmap);
    d["cost"] = square(r.costmap.cost, r.costmap.side());
    d["total_ms"] = r.times.total_ms;
    if (evaluate) {
      const GroundTruthMap gt = scene.ground_truth(r.terrain.anchor, t, cfg.limits(), cfg.gt_radius);
      d["metrics"] = metrics_dict(evaluate_frame(r, gt, cfg.count_invalid));
    }
    out.append(std::move(d));
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Terrain mapping and traversability estimation";

  py::class_<PipelineConfig>(m, "Config")
      .def(py::init<>())
      .def_static("load", [](const std::string& path) { return load_config(path); }, py::arg("path"))
      .def_static("keys", &config_keys)
      .def("get", [](const PipelineConfig& c, const std::string& key) { return config_value(c, key); },
           py::arg("key"))
      .def("set", [](PipelineConfig& c, const std::string& key, const std::string& value) {
             apply_setting(c, key, value);
           },
           py::arg("key"), py::arg("value"))
      .def("side_cells", &PipelineConfig::side_cells)
      .def("to_text", [](const PipelineConfig& c) { return to_text(c); })
      .def("__repr__", [](const PipelineConfig& c) { return "<Config\n" + to_text(c) + ">"; });

  m.def("sparse_kernel", &sparse_kernel, py::arg("d"), py::arg("l"));

  m.def(
      "bgk_posterior",
      [](const std::vector<std::pair<double, double>>& positions, const std::vector<double>& means,
         const std::vector<double>& variances, std::pair<double, double> target, double kernel_radius,
         std::optional<std::pair<double, double>> prior) -> std::optional<std::pair<double, double>> {
        const auto obs = to_observations(positions, means, variances);
        const PriorGaussian p = prior ? PriorGaussian::from_variance(prior->first, prior->second)
                                      : PriorGaussian::uninformative();
        const auto post = bgk_posterior(obs, p, Vec2(target.first, target.second), kernel_radius);
        if (!post) return std::nullopt;
        return std::make_pair(post->mean, post->variance);
      },
      py::arg("positions"), py::arg("means"), py::arg("variances"), py::arg("target"),
      py::arg("kernel_radius") = 1.0, py::arg("prior") = py::none(),
      "Posterior (mean, variance) at target, or None without support. prior is (mean, variance).");

  m.def(
      "predictive",
      [](double mean, double variance, double likelihood_variance) {
        const PosteriorGaussian p = predictive_distribution({mean, variance}, likelihood_variance);
        return std::make_pair(p.mean, p.variance);
      },
      py::arg("mean"), py::arg("variance"), py::arg("likelihood_variance"));

  m.def("scene_names", &builtin_scene_names);
  m.def("run_scene", &run_scene, py::arg("name"), py::arg("frames") = 5, py::arg("config") = PipelineConfig{},
        py::arg("seed") = 1, py::arg("evaluate") = true,
        "Simulates a builtin scene and runs the full pipeline. Returns one dict per frame.");
}
