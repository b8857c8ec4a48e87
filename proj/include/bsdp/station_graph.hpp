#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bsdp/cluster.hpp"
#include "bsdp/geo.hpp"
#include "bsdp/ingest.hpp"

namespace bsdp {

enum class StationLevel { micro, small, medium, large };

// Half-open size bands: micro [5,10), small [10,20), medium [20,30),
// large [30, inf). Throws for n < 5.
StationLevel classify_station_level(int n);
std::string_view to_string(StationLevel level);
StationLevel station_level_from_string(std::string_view text);

struct Station {
  std::string station_id;
  GeoPoint location;
  int bike_count = 0;
  StationLevel level = StationLevel::micro;
};

struct GraphEdge {
  std::size_t from = 0;
  std::size_t to = 0;
  std::int64_t weight = 0;
  double distance_km = 0.0;
};

// Weighted digraph of stations. W holds directed ride counts (diagonal =
// same-station rides, which never appear as edges); D is symmetric km.
class StationGraph {
 public:
  StationGraph() = default;
  StationGraph(std::vector<Station> vertices, std::vector<std::int64_t> weights,
               std::vector<double> distances);

  // Vertex set with zeroed W and D, as produced by prediction decoding.
  static StationGraph vertices_only(std::vector<Station> vertices);

  std::size_t size() const { return vertices_.size(); }
  bool empty() const { return vertices_.empty(); }
  const std::vector<Station>& vertices() const { return vertices_; }
  const std::vector<std::int64_t>& weight_matrix() const { return w_; }
  const std::vector<double>& distance_matrix() const { return d_; }

  std::int64_t weight(std::size_t i, std::size_t j) const;
  double distance(std::size_t i, std::size_t j) const;

  // Directed edges (i != j, w > 0) ordered by (from, to).
  std::vector<GraphEdge> edges() const;

  std::int64_t out_weight(std::size_t i) const;  // row sum, diagonal included
  std::int64_t in_weight(std::size_t i) const;   // column sum, diagonal included
  std::int64_t total_rides() const;              // sum of all of W

 private:
  void check_index(std::size_t i) const;

  std::vector<Station> vertices_;
  std::vector<std::int64_t> w_;  // row-major k*k
  std::vector<double> d_;        // row-major k*k, symmetric, zero diagonal
};

struct GraphBuildOptions {
  int min_station_size = 5;
};

// One vertex per retained cluster whose drop-off count reaches
// min_station_size; W counts rides between clusters of the same records.
StationGraph build_station_graph(const ClusterSet& clusters,
                                 std::span<const TrajectoryRecord> records,
                                 const GraphBuildOptions& options = {});

// P_i: out-going ride-kilometres priced at alpha per km.
double station_revenue(const StationGraph& g, std::size_t i, double alpha);

// U_i = (out_i + in_i) / (2 * total rides); throws when the graph is idle.
double station_utility(const StationGraph& g, std::size_t i);

// Drops every vertex with P_i < theta_p and U_i < theta_u, both evaluated on
// the input graph (single pass, no cascade).
StationGraph remove_inferior(const StationGraph& g, double theta_p,
                             double theta_u, double alpha);

// Nearest-rank percentile: k = ceil(fraction * n) in the ascending order.
double nearest_rank_percentile(std::vector<double> values, double fraction);

// Default pruning thresholds: 25th percentiles of {P_i} and {U_i}.
std::pair<double, double> default_inferior_thresholds(const StationGraph& g,
                                                      double alpha);

}  // namespace bsdp
