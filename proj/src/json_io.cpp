#include "bsdp/json_io.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "bsdp/error.hpp"

namespace bsdp {

namespace {

using nlohmann::json;

json point_to_json(const Position& p) {
  return json{{"bike_id", p.bike_id},
              {"lat", p.location.latitude},
              {"lon", p.location.longitude},
              {"ts", p.timestamp},
              {"kind", p.kind == PositionKind::pickup ? "pickup" : "dropoff"}};
}

Position point_from_json(const json& j) {
  Position p;
  p.bike_id = j.at("bike_id").get<std::string>();
  p.location = {j.at("lat").get<double>(), j.at("lon").get<double>()};
  p.timestamp = j.at("ts").get<std::int64_t>();
  const auto kind = j.at("kind").get<std::string>();
  if (kind != "pickup" && kind != "dropoff") {
    throw InvalidInputError("unknown position kind '" + kind + "'");
  }
  p.kind = kind == "pickup" ? PositionKind::pickup : PositionKind::dropoff;
  return p;
}

}  // namespace

json to_json(const ClusterSet& set) {
  json points = json::array();
  for (const auto& p : set.points.points) points.push_back(point_to_json(p));
  return json{{"points", std::move(points)},
              {"rho", set.rho},
              {"delta", set.delta},
              {"label", set.label},
              {"centers", set.centers},
              {"theta_rho", set.theta_rho},
              {"theta_delta", set.theta_delta},
              {"no_centers", set.no_centers},
              {"source_count", set.points.source_count}};
}

ClusterSet cluster_set_from_json(const json& j) {
  ClusterSet set;
  for (const auto& p : j.at("points")) {
    set.points.points.push_back(point_from_json(p));
  }
  set.points.source_count = j.at("source_count").get<std::size_t>();
  set.rho = j.at("rho").get<std::vector<int>>();
  set.delta = j.at("delta").get<std::vector<double>>();
  set.label = j.at("label").get<std::vector<int>>();
  set.centers = j.at("centers").get<std::vector<std::size_t>>();
  set.theta_rho = j.at("theta_rho").get<double>();
  set.theta_delta = j.at("theta_delta").get<double>();
  set.no_centers = j.at("no_centers").get<bool>();
  const std::size_t n = set.points.points.size();
  if (set.rho.size() != n || set.delta.size() != n || set.label.size() != n) {
    throw InvalidInputError("cluster set arrays disagree on point count");
  }
  return set;
}

json to_json(const StationGraph& g) {
  json vertices = json::array();
  for (const auto& v : g.vertices()) {
    vertices.push_back(json{{"id", v.station_id},
                            {"lat", v.location.latitude},
                            {"lon", v.location.longitude},
                            {"n", v.bike_count},
                            {"level", std::string(to_string(v.level))}});
  }
  json edges = json::array();
  for (const auto& e : g.edges()) {
    edges.push_back(json{{"from", e.from},
                         {"to", e.to},
                         {"w", e.weight},
                         {"d_km", e.distance_km}});
  }
  json self_loops = json::array();
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g.weight(i, i) > 0) {
      self_loops.push_back(
          json{{"id", g.vertices()[i].station_id}, {"w", g.weight(i, i)}});
    }
  }
  return json{{"vertices", std::move(vertices)},
              {"edges", std::move(edges)},
              {"self_loops", std::move(self_loops)}};
}

StationGraph station_graph_from_json(const json& j) {
  std::vector<Station> vertices;
  for (const auto& v : j.at("vertices")) {
    Station s;
    s.station_id = v.at("id").get<std::string>();
    s.location = {v.at("lat").get<double>(), v.at("lon").get<double>()};
    s.bike_count = v.at("n").get<int>();
    s.level = station_level_from_string(v.at("level").get<std::string>());
    vertices.push_back(std::move(s));
  }
  const std::size_t k = vertices.size();
  std::vector<std::int64_t> w(k * k, 0);
  std::vector<double> d(k * k, 0.0);
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = a + 1; b < k; ++b) {
      const double dist =
          haversine_distance(vertices[a].location, vertices[b].location);
      d[a * k + b] = dist;
      d[b * k + a] = dist;
    }
  }
  for (const auto& e : j.at("edges")) {
    const auto from = e.at("from").get<std::size_t>();
    const auto to = e.at("to").get<std::size_t>();
    if (from >= k || to >= k || from == to) {
      throw InvalidInputError("edge endpoints out of range");
    }
    w[from * k + to] = e.at("w").get<std::int64_t>();
  }
  if (j.contains("self_loops")) {
    for (const auto& loop : j.at("self_loops")) {
      const auto id = loop.at("id").get<std::string>();
      bool found = false;
      for (std::size_t i = 0; i < k; ++i) {
        if (vertices[i].station_id == id) {
          w[i * k + i] = loop.at("w").get<std::int64_t>();
          found = true;
          break;
        }
      }
      if (!found) {
        throw InvalidInputError("self loop names unknown station '" + id + "'");
      }
    }
  }
  return StationGraph(std::move(vertices), std::move(w), std::move(d));
}

json to_json(const GridCodec& codec) {
  json anchors = json::array();
  for (int cell = 0; cell < codec.dimension(); ++cell) {
    if (static_cast<std::size_t>(cell) < codec.anchor_lat.size() &&
        std::isfinite(codec.anchor_lat[static_cast<std::size_t>(cell)])) {
      anchors.push_back(
          json{{"cell", cell},
               {"lat", codec.anchor_lat[static_cast<std::size_t>(cell)]},
               {"lon", codec.anchor_lon[static_cast<std::size_t>(cell)]}});
    }
  }
  return json{{"lat_min", codec.lat_min},
              {"lat_max", codec.lat_max},
              {"lon_min", codec.lon_min},
              {"lon_max", codec.lon_max},
              {"rows", codec.rows},
              {"cols", codec.cols},
              {"cap_max", codec.cap_max},
              {"anchor_policy", std::string(to_string(codec.anchor_policy))},
              {"anchors", std::move(anchors)}};
}

GridCodec grid_codec_from_json(const json& j) {
  GridCodec codec;
  codec.lat_min = j.at("lat_min").get<double>();
  codec.lat_max = j.at("lat_max").get<double>();
  codec.lon_min = j.at("lon_min").get<double>();
  codec.lon_max = j.at("lon_max").get<double>();
  codec.rows = j.at("rows").get<int>();
  codec.cols = j.at("cols").get<int>();
  codec.cap_max = j.at("cap_max").get<double>();
  codec.anchor_policy =
      anchor_policy_from_string(j.at("anchor_policy").get<std::string>());
  const auto nan = std::numeric_limits<double>::quiet_NaN();
  codec.anchor_lat.assign(static_cast<std::size_t>(codec.dimension()), nan);
  codec.anchor_lon.assign(static_cast<std::size_t>(codec.dimension()), nan);
  for (const auto& a : j.at("anchors")) {
    const auto cell = a.at("cell").get<int>();
    if (cell < 0 || cell >= codec.dimension()) {
      throw InvalidInputError("codec anchor cell out of range");
    }
    codec.anchor_lat[static_cast<std::size_t>(cell)] = a.at("lat").get<double>();
    codec.anchor_lon[static_cast<std::size_t>(cell)] = a.at("lon").get<double>();
  }
  codec.validate();
  return codec;
}

json to_json(const GraphSequence& gs) {
  json graphs = json::array();
  for (const auto& g : gs.graphs) graphs.push_back(to_json(g));
  return json{{"region_id", gs.region_id},
              {"granularity", std::string(to_string(gs.granularity))},
              {"first_period", gs.first_period},
              {"missing_periods", gs.missing_periods},
              {"codec", to_json(gs.codec)},
              {"graphs", std::move(graphs)}};
}

GraphSequence graph_sequence_from_json(const json& j) {
  GraphSequence gs;
  gs.region_id = j.at("region_id").get<std::string>();
  gs.granularity =
      granularity_from_string(j.at("granularity").get<std::string>());
  gs.first_period = j.at("first_period").get<std::int64_t>();
  gs.missing_periods =
      j.at("missing_periods").get<std::vector<std::int64_t>>();
  gs.codec = grid_codec_from_json(j.at("codec"));
  for (const auto& g : j.at("graphs")) {
    gs.graphs.push_back(station_graph_from_json(g));
  }
  return gs;
}

namespace {

json matrix_to_json(const Matrix& m) {
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) values.push_back(m(r, c));
  }
  return json(values);
}

Matrix matrix_from_json(const json& j, Eigen::Index rows, Eigen::Index cols,
                        const char* name) {
  const auto values = j.get<std::vector<double>>();
  if (values.size() != static_cast<std::size_t>(rows * cols)) {
    throw InvalidInputError(std::string("checkpoint matrix ") + name +
                            " has the wrong size");
  }
  Matrix m(rows, cols);
  std::size_t i = 0;
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = values[i++];
  }
  return m;
}

Vector vector_from_json(const json& j, Eigen::Index size, const char* name) {
  const auto values = j.get<std::vector<double>>();
  if (values.size() != static_cast<std::size_t>(size)) {
    throw InvalidInputError(std::string("checkpoint vector ") + name +
                            " has the wrong size");
  }
  return Eigen::Map<const Vector>(values.data(),
                                  static_cast<Eigen::Index>(values.size()));
}

}  // namespace

json checkpoint_to_json(const GruModel& model, const GridCodec& codec) {
  model.validate_shapes();
  json weights{{"w_rx", matrix_to_json(model.w_rx)},
               {"w_rh", matrix_to_json(model.w_rh)},
               {"w_zx", matrix_to_json(model.w_zx)},
               {"w_zh", matrix_to_json(model.w_zh)},
               {"w_hx", matrix_to_json(model.w_hx)},
               {"w_hh", matrix_to_json(model.w_hh)},
               {"w_o", matrix_to_json(model.w_o)},
               {"b_r", matrix_to_json(model.b_r)},
               {"b_z", matrix_to_json(model.b_z)}};
  return json{{"version", 1},
              {"input_dim", model.input_dim()},
              {"hidden_dim", model.hidden_dim()},
              {"codec", to_json(codec)},
              {"weights", std::move(weights)}};
}

ModelCheckpoint checkpoint_from_json(const json& j) {
  if (j.at("version").get<int>() != 1) {
    throw InvalidInputError("unsupported checkpoint version");
  }
  const auto dx = j.at("input_dim").get<Eigen::Index>();
  const auto dh = j.at("hidden_dim").get<Eigen::Index>();
  ModelCheckpoint cp;
  cp.codec = grid_codec_from_json(j.at("codec"));
  if (cp.codec.dimension() != dx) {
    throw InvalidInputError("checkpoint codec does not match input_dim");
  }
  const auto& w = j.at("weights");
  cp.model.w_rx = matrix_from_json(w.at("w_rx"), dh, dx, "w_rx");
  cp.model.w_rh = matrix_from_json(w.at("w_rh"), dh, dh, "w_rh");
  cp.model.w_zx = matrix_from_json(w.at("w_zx"), dh, dx, "w_zx");
  cp.model.w_zh = matrix_from_json(w.at("w_zh"), dh, dh, "w_zh");
  cp.model.w_hx = matrix_from_json(w.at("w_hx"), dh, dx, "w_hx");
  cp.model.w_hh = matrix_from_json(w.at("w_hh"), dh, dh, "w_hh");
  cp.model.w_o = matrix_from_json(w.at("w_o"), dx, dh, "w_o");
  cp.model.b_r = vector_from_json(w.at("b_r"), dh, "b_r");
  cp.model.b_z = vector_from_json(w.at("b_z"), dh, "b_z");
  cp.model.validate_shapes();
  return cp;
}

json to_json(const LayoutRecommendation& rec) {
  json stations = json::array();
  for (const auto& s : rec.stations) {
    stations.push_back(json{{"id", s.station_id},
                            {"lat", s.location.latitude},
                            {"lon", s.location.longitude},
                            {"n", s.bike_count},
                            {"level", std::string(to_string(s.level))},
                            {"position_id", s.position_id},
                            {"case", std::string(to_string(s.adjustment))}});
  }
  json adjustments = json::array();
  for (const auto& a : rec.adjustments) {
    adjustments.push_back(json{{"station_id", a.station_id},
                               {"case", std::string(to_string(a.kind))},
                               {"moved_km", a.moved_km},
                               {"split_into", a.split_into},
                               {"unplaced", a.unplaced}});
  }
  return json{{"stations", std::move(stations)},
              {"unplaced", rec.unplaced},
              {"adjustments", std::move(adjustments)}};
}

json to_json(const GroundTruth& truth) {
  json stations = json::array();
  for (const auto& s : truth.stations) {
    stations.push_back(json{{"id", s.id},
                            {"lat", s.location.latitude},
                            {"lon", s.location.longitude},
                            {"capacity", s.capacity}});
  }
  json points = json::array();
  for (const auto& p : truth.points) {
    points.push_back(json{{"bike_id", p.bike_id},
                          {"lat", p.location.latitude},
                          {"lon", p.location.longitude},
                          {"station", p.station}});
  }
  return json{{"stations", std::move(stations)},
              {"first_period_index", truth.first_period_index},
              {"granularity", std::string(to_string(truth.granularity))},
              {"period_counts", truth.period_counts},
              {"od", truth.od},
              {"points", std::move(points)}};
}

GroundTruth ground_truth_from_json(const json& j) {
  GroundTruth truth;
  for (const auto& s : j.at("stations")) {
    truth.stations.push_back(
        {s.at("id").get<std::string>(),
         {s.at("lat").get<double>(), s.at("lon").get<double>()},
         s.at("capacity").get<int>()});
  }
  truth.first_period_index = j.at("first_period_index").get<std::int64_t>();
  truth.granularity =
      granularity_from_string(j.at("granularity").get<std::string>());
  truth.period_counts =
      j.at("period_counts").get<std::vector<std::vector<int>>>();
  truth.od = j.at("od").get<std::vector<std::vector<std::vector<int>>>>();
  for (const auto& p : j.at("points")) {
    truth.points.push_back(
        {p.at("bike_id").get<std::string>(),
         {p.at("lat").get<double>(), p.at("lon").get<double>()},
         p.at("station").get<int>()});
  }
  return truth;
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInputError("cannot open file: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw InvalidInputError("invalid JSON in " + path.string() + ": " +
                            e.what());
  }
  return j;
}

void write_json_file(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInputError("cannot write file: " + path.string());
  out << j.dump(2) << '\n';
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInputError("cannot open file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path,
                     std::string_view content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInputError("cannot write file: " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
}

}  // namespace bsdp
