#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "bsdp/cli.hpp"
#include "bsdp/cluster.hpp"
#include "bsdp/error.hpp"
#include "bsdp/eval.hpp"
#include "bsdp/geo.hpp"
#include "bsdp/gru.hpp"
#include "bsdp/ingest.hpp"
#include "bsdp/metric.hpp"

namespace py = pybind11;

namespace {

double haversine_km(double lat_a, double lon_a, double lat_b, double lon_b) {
  return bsdp::haversine_distance({lat_a, lon_a}, {lat_b, lon_b});
}

py::dict cluster_points(const std::vector<std::pair<double, double>>& coords,
                        double cutoff_km, double rho_fraction,
                        double delta_fraction, int min_station_size) {
  bsdp::PositionSet set;
  set.points.reserve(coords.size());
  for (std::size_t i = 0; i < coords.size(); ++i) {
    bsdp::Position p;
    p.bike_id = "p" + std::to_string(i);
    p.location = {coords[i].first, coords[i].second};
    p.timestamp = static_cast<std::int64_t>(i);
    p.kind = bsdp::PositionKind::dropoff;
    set.points.push_back(std::move(p));
  }
  set.source_count = coords.size();

  bsdp::ClusterParams params;
  params.cutoff_distance_km = cutoff_km;
  params.rho_fraction = rho_fraction;
  params.delta_fraction = delta_fraction;
  params.min_station_size = min_station_size;

  bsdp::HaversineMetric metric;
  const bsdp::ClusterSet cs =
      bsdp::cluster_drop_offs(std::move(set), params, metric);

  py::dict out;
  out["labels"] = cs.label;
  out["rho"] = cs.rho;
  out["delta"] = cs.delta;
  out["centers"] = cs.centers;
  out["theta_rho"] = cs.theta_rho;
  out["theta_delta"] = cs.theta_delta;
  out["no_centers"] = cs.no_centers;
  return out;
}

py::dict train_frames(const std::vector<std::vector<double>>& frames,
                      int epochs, double learning_rate, int hidden_dim,
                      std::uint64_t seed, double init_scale,
                      double gradient_clip) {
  if (frames.size() < 2) {
    throw bsdp::InvalidInputError("need at least two frames to train");
  }
  const std::size_t dim = frames.front().size();
  std::vector<bsdp::Vector> vecs;
  vecs.reserve(frames.size());
  for (const auto& frame : frames) {
    if (frame.size() != dim) {
      throw bsdp::InvalidInputError("frames must share one dimension");
    }
    vecs.push_back(Eigen::Map<const bsdp::Vector>(
        frame.data(), static_cast<Eigen::Index>(frame.size())));
  }

  bsdp::TrainConfig cfg;
  cfg.epochs = epochs;
  cfg.learning_rate = learning_rate;
  cfg.hidden_dim = hidden_dim;
  cfg.rng_seed = seed;
  cfg.init_scale = init_scale;
  cfg.gradient_clip = gradient_clip;

  const bsdp::TrainResult result = bsdp::train_sequence(vecs, cfg);
  const bsdp::Vector pred = bsdp::predict_next_vector(result.model, vecs);

  py::dict out;
  out["loss"] = result.epoch_loss;
  out["prediction"] = std::vector<double>(
      pred.data(), pred.data() + pred.size());
  return out;
}

double roc_auc_py(const std::vector<double>& scores,
                  const std::vector<int>& labels) {
  std::vector<unsigned char> flags;
  flags.reserve(labels.size());
  for (const int v : labels) {
    flags.push_back(static_cast<unsigned char>(v != 0));
  }
  return bsdp::roc_auc(scores, flags);
}

}  // namespace

PYBIND11_MODULE(_bsdp, m) {
  m.doc() = "bicycle station dynamic planning core";
  m.attr("__version__") = "0.1.0";
  m.attr("OUTLIER") = bsdp::kOutlier;

  py::register_exception<bsdp::ConfigError>(m, "ConfigError");
  py::register_exception<bsdp::InvalidInputError>(m, "InvalidInputError");
  py::register_exception<bsdp::ContractError>(m, "ContractError");
  py::register_exception<bsdp::NumericalError>(m, "NumericalError");

  m.def("haversine_km", &haversine_km, py::arg("lat_a"), py::arg("lon_a"),
        py::arg("lat_b"), py::arg("lon_b"),
        "Great-circle distance in kilometres.");

  m.def("cluster_points", &cluster_points, py::arg("coords"),
        py::arg("cutoff_km") = 0.1, py::arg("rho_fraction") = 1.0 / 3.0,
        py::arg("delta_fraction") = 1.0 / 3.0, py::arg("min_station_size") = 5,
        "Density-peak clustering of (lat, lon) pairs; returns labels, "
        "densities, deltas and the detected centers.");

  m.def("train_frames", &train_frames, py::arg("frames"),
        py::arg("epochs") = 200, py::arg("learning_rate") = 0.05,
        py::arg("hidden_dim") = 32, py::arg("seed") = 42,
        py::arg("init_scale") = 0.1, py::arg("gradient_clip") = 0.0,
        "Train the recurrent predictor on a frame sequence; returns the "
        "per-epoch loss curve and the next-frame prediction.");

  m.def("roc_auc", &roc_auc_py, py::arg("scores"), py::arg("labels"),
        "Mann-Whitney ROC AUC with averaged tied ranks.");

  m.def(
      "run",
      [](std::vector<std::string> args) {
        return bsdp::cli::run(std::move(args));
      },
      py::arg("args"),
      "Run the command-line driver in-process and return its exit code.");
}
