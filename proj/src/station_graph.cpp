#include "bsdp/station_graph.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "bsdp/error.hpp"

namespace bsdp {

StationLevel classify_station_level(int n) {
  if (n < 5) {
    throw InvalidInputError("station size " + std::to_string(n) +
                            " is below the minimum of 5");
  }
  if (n < 10) return StationLevel::micro;
  if (n < 20) return StationLevel::small;
  if (n < 30) return StationLevel::medium;
  return StationLevel::large;
}

std::string_view to_string(StationLevel level) {
  switch (level) {
    case StationLevel::micro: return "micro";
    case StationLevel::small: return "small";
    case StationLevel::medium: return "medium";
    case StationLevel::large: return "large";
  }
  throw ContractError("unknown station level");
}

StationLevel station_level_from_string(std::string_view text) {
  if (text == "micro") return StationLevel::micro;
  if (text == "small") return StationLevel::small;
  if (text == "medium") return StationLevel::medium;
  if (text == "large") return StationLevel::large;
  throw InvalidInputError("unknown station level '" + std::string(text) + "'");
}

StationGraph::StationGraph(std::vector<Station> vertices,
                           std::vector<std::int64_t> weights,
                           std::vector<double> distances)
    : vertices_(std::move(vertices)),
      w_(std::move(weights)),
      d_(std::move(distances)) {
  const std::size_t k = vertices_.size();
  if (w_.size() != k * k || d_.size() != k * k) {
    throw ContractError("station graph matrix shapes do not match vertex count");
  }
  for (std::size_t i = 0; i < k; ++i) {
    if (d_[i * k + i] != 0.0) {
      throw ContractError("distance matrix has a non-zero diagonal");
    }
    for (std::size_t j = i + 1; j < k; ++j) {
      if (d_[i * k + j] != d_[j * k + i]) {
        throw ContractError("distance matrix is not symmetric");
      }
    }
  }
  for (const auto w : w_) {
    if (w < 0) throw ContractError("negative ride count in weight matrix");
  }
}

StationGraph StationGraph::vertices_only(std::vector<Station> vertices) {
  const std::size_t k = vertices.size();
  return StationGraph(std::move(vertices), std::vector<std::int64_t>(k * k, 0),
                      std::vector<double>(k * k, 0.0));
}

void StationGraph::check_index(std::size_t i) const {
  if (i >= vertices_.size()) {
    throw InvalidInputError("vertex index " + std::to_string(i) +
                            " out of range");
  }
}

std::int64_t StationGraph::weight(std::size_t i, std::size_t j) const {
  check_index(i);
  check_index(j);
  return w_[i * size() + j];
}

double StationGraph::distance(std::size_t i, std::size_t j) const {
  check_index(i);
  check_index(j);
  return d_[i * size() + j];
}

std::vector<GraphEdge> StationGraph::edges() const {
  std::vector<GraphEdge> out;
  const std::size_t k = size();
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      if (i != j && w_[i * k + j] > 0) {
        out.push_back({i, j, w_[i * k + j], d_[i * k + j]});
      }
    }
  }
  return out;
}

std::int64_t StationGraph::out_weight(std::size_t i) const {
  check_index(i);
  const std::size_t k = size();
  return std::accumulate(w_.begin() + i * k, w_.begin() + (i + 1) * k,
                         std::int64_t{0});
}

std::int64_t StationGraph::in_weight(std::size_t i) const {
  check_index(i);
  const std::size_t k = size();
  std::int64_t s = 0;
  for (std::size_t j = 0; j < k; ++j) s += w_[j * k + i];
  return s;
}

std::int64_t StationGraph::total_rides() const {
  return std::accumulate(w_.begin(), w_.end(), std::int64_t{0});
}

namespace {

struct EndpointKey {
  std::string_view bike;
  std::uint64_t lat_bits, lon_bits;
  bool operator==(const EndpointKey&) const = default;
};

struct EndpointKeyHash {
  std::size_t operator()(const EndpointKey& k) const {
    std::size_t h = std::hash<std::string_view>{}(k.bike);
    h ^= std::hash<std::uint64_t>{}(k.lat_bits) + 0x9e3779b97f4a7c15ull +
         (h << 6) + (h >> 2);
    h ^= std::hash<std::uint64_t>{}(k.lon_bits) + 0x9e3779b97f4a7c15ull +
         (h << 6) + (h >> 2);
    return h;
  }
};

EndpointKey key_of(const std::string& bike, const GeoPoint& p) {
  return {bike, std::bit_cast<std::uint64_t>(p.latitude),
          std::bit_cast<std::uint64_t>(p.longitude)};
}

}  // namespace

StationGraph build_station_graph(const ClusterSet& clusters,
                                 std::span<const TrajectoryRecord> records,
                                 const GraphBuildOptions& options) {
  if (options.min_station_size < 1) {
    throw ConfigError("min_station_size must be >= 1");
  }
  if (clusters.centers.empty()) return StationGraph{};

  const auto& points = clusters.points.points;
  const std::size_t n_clusters = clusters.centers.size();

  // Bike count per cluster: drop-off points only, then apply the size floor.
  std::vector<int> drop_offs(n_clusters, 0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const int label = clusters.label[i];
    if (label >= 0 && points[i].kind == PositionKind::dropoff) {
      ++drop_offs[label];
    }
  }

  std::vector<int> vertex_of(n_clusters, -1);
  std::vector<Station> stations;
  for (std::size_t c = 0; c < n_clusters; ++c) {
    if (drop_offs[c] < options.min_station_size) continue;
    vertex_of[c] = static_cast<int>(stations.size());
    Station s;
    s.station_id = "s" + std::to_string(stations.size());
    s.location = points[clusters.centers[c]].location;
    s.bike_count = drop_offs[c];
    s.level = classify_station_level(s.bike_count);
    stations.push_back(std::move(s));
  }
  const std::size_t k = stations.size();
  if (k == 0) return StationGraph{};

  std::unordered_map<EndpointKey, int, EndpointKeyHash> point_cluster;
  point_cluster.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    point_cluster.emplace(key_of(points[i].bike_id, points[i].location),
                          clusters.label[i]);
  }

  auto vertex_for = [&](const std::string& bike, const GeoPoint& p) -> int {
    const auto it = point_cluster.find(key_of(bike, p));
    if (it == point_cluster.end() || it->second < 0) return -1;
    return vertex_of[it->second];
  };

  std::vector<std::int64_t> w(k * k, 0);
  for (const auto& rec : records) {
    const int vi = vertex_for(rec.bike_id, rec.depart);
    const int vj = vertex_for(rec.bike_id, rec.arrive);
    if (vi >= 0 && vj >= 0) ++w[static_cast<std::size_t>(vi) * k + vj];
  }

  std::vector<double> d(k * k, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      const double dist =
          haversine_distance(stations[i].location, stations[j].location);
      d[i * k + j] = dist;
      d[j * k + i] = dist;
    }
  }
  return StationGraph(std::move(stations), std::move(w), std::move(d));
}

double station_revenue(const StationGraph& g, std::size_t i, double alpha) {
  if (!(alpha > 0.0)) throw InvalidInputError("alpha must be positive");
  if (i >= g.size()) throw InvalidInputError("vertex index out of range");
  const std::size_t k = g.size();
  const auto& w = g.weight_matrix();
  const auto& d = g.distance_matrix();
  double p = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    p += static_cast<double>(w[i * k + j]) * d[i * k + j] * alpha;
  }
  return p;
}

double station_utility(const StationGraph& g, std::size_t i) {
  if (i >= g.size()) throw InvalidInputError("vertex index out of range");
  const std::int64_t total = g.total_rides();
  if (total == 0) {
    throw NumericalError("station utility undefined: graph has no rides");
  }
  return static_cast<double>(g.out_weight(i) + g.in_weight(i)) /
         (2.0 * static_cast<double>(total));
}

StationGraph remove_inferior(const StationGraph& g, double theta_p,
                             double theta_u, double alpha) {
  if (theta_p < 0.0 || theta_u < 0.0) {
    throw InvalidInputError("pruning thresholds must be >= 0");
  }
  const std::size_t k = g.size();
  if (k == 0) return g;

  const std::int64_t total = g.total_rides();
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < k; ++i) {
    const double p = station_revenue(g, i, alpha);
    const double u =
        total == 0 ? 0.0
                   : static_cast<double>(g.out_weight(i) + g.in_weight(i)) /
                         (2.0 * static_cast<double>(total));
    if (!(p < theta_p && u < theta_u)) keep.push_back(i);
  }
  if (keep.size() == k) return g;

  const std::size_t m = keep.size();
  std::vector<Station> vertices(m);
  std::vector<std::int64_t> w(m * m, 0);
  std::vector<double> d(m * m, 0.0);
  const auto& gw = g.weight_matrix();
  const auto& gd = g.distance_matrix();
  for (std::size_t a = 0; a < m; ++a) {
    vertices[a] = g.vertices()[keep[a]];
    for (std::size_t b = 0; b < m; ++b) {
      w[a * m + b] = gw[keep[a] * k + keep[b]];
      d[a * m + b] = gd[keep[a] * k + keep[b]];
    }
  }
  return StationGraph(std::move(vertices), std::move(w), std::move(d));
}

double nearest_rank_percentile(std::vector<double> values, double fraction) {
  if (values.empty()) throw InvalidInputError("percentile of an empty set");
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw InvalidInputError("percentile fraction must lie in (0, 1]");
  }
  std::sort(values.begin(), values.end());
  const auto rank = static_cast<std::size_t>(
      std::ceil(fraction * static_cast<double>(values.size())));
  return values[std::max<std::size_t>(rank, 1) - 1];
}

std::pair<double, double> default_inferior_thresholds(const StationGraph& g,
                                                      double alpha) {
  if (g.empty()) return {0.0, 0.0};
  std::vector<double> revenue(g.size()), utility(g.size());
  const std::int64_t total = g.total_rides();
  for (std::size_t i = 0; i < g.size(); ++i) {
    revenue[i] = station_revenue(g, i, alpha);
    utility[i] =
        total == 0 ? 0.0
                   : static_cast<double>(g.out_weight(i) + g.in_weight(i)) /
                         (2.0 * static_cast<double>(total));
  }
  return {nearest_rank_percentile(std::move(revenue), 0.25),
          nearest_rank_percentile(std::move(utility), 0.25)};
}

}  // namespace bsdp
