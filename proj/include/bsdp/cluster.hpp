#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "bsdp/ingest.hpp"
#include "bsdp/metric.hpp"

namespace bsdp {

/// Label used for points that belong to no retained cluster.
inline constexpr int kOutlier = -1;

struct ClusterParams {
  double cutoff_distance_km = 0.1;  // d_c
  double rho_fraction = 1.0 / 3.0;  // theta_rho = rho_max * rho_fraction
  double delta_fraction = 1.0 / 3.0;
  int min_station_size = 5;

  void validate() const;
};

/// Per-point local density rho (count of strictly-closer-than-cutoff
/// neighbours), delta distance to the nearest point of higher rank, and that
/// point's index (-1 for the head of the ranking, whose delta is the maximum
/// distance to any other point).
///
/// Rank order is (rho descending, index ascending), which turns "higher
/// density" into a strict total order even under rho ties.
struct DensityDelta {
  std::vector<int> rho;
  std::vector<double> delta;
  std::vector<std::int64_t> nearest_higher;
};

DensityDelta compute_density_delta(std::span<const GeoPoint> points,
                                   double cutoff_km, PointMetric& metric);

struct CenterDetection {
  std::vector<std::size_t> centers;   // rho > theta_rho and delta > theta_delta
  std::vector<std::size_t> outliers;  // rho <= theta_rho and delta > theta_delta
  double theta_rho = 0.0;
  double theta_delta = 0.0;
};

CenterDetection detect_centers_outliers(std::span<const int> rho,
                                        std::span<const double> delta,
                                        const ClusterParams& params);

/// Clustered positions. label[i] is an index into `centers` or kOutlier;
/// centers holds point indices of the retained cluster heads.
struct ClusterSet {
  PositionSet points;
  std::vector<int> rho;
  std::vector<double> delta;
  std::vector<int> label;
  std::vector<std::size_t> centers;
  double theta_rho = 0.0;
  double theta_delta = 0.0;
  bool no_centers = false;  // set when detection found no cluster center

  std::size_t size() const { return points.points.size(); }
  std::size_t cluster_count() const { return centers.size(); }
};

/// Density-peak clustering of a position set: density and delta computation,
/// decision-graph center/outlier detection, label inheritance along
/// nearest-higher links, then removal of clusters smaller than
/// min_station_size (their members become outliers).
ClusterSet cluster_drop_offs(PositionSet positions, const ClusterParams& params,
                             PointMetric& metric);

}  // namespace bsdp
