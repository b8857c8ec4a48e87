#include "bsdp/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <unordered_map>

#include "bsdp/error.hpp"

namespace bsdp {

void ClusterParams::validate() const {
  if (!(cutoff_distance_km > 0.0) || !std::isfinite(cutoff_distance_km)) {
    throw ConfigError("cutoff distance d_c must be positive");
  }
  if (!(rho_fraction > 0.0 && rho_fraction <= 1.0) ||
      !(delta_fraction > 0.0 && delta_fraction <= 1.0)) {
    throw ConfigError("threshold fractions must lie in (0, 1]");
  }
  if (min_station_size < 1) {
    throw ConfigError("min_station_size must be >= 1");
  }
}

namespace {

// Strict total order standing in for "higher density": rho descending,
// then lower index ranks higher.
inline bool ranks_higher(int rho_a, std::size_t a, int rho_b, std::size_t b) {
  return rho_a > rho_b || (rho_a == rho_b && a < b);
}

// Canonical pair orientation so both triangle halves see one value.
inline double pair_distance(const PointMetric& metric, std::size_t i,
                            std::size_t j) {
  return i < j ? metric.distance(i, j) : metric.distance(j, i);
}

struct CellGrid {
  double lat0 = 0.0, lon0 = 0.0;
  double dlat = 0.0, dlon = 0.0;
  std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> cells;

  static std::uint64_t key(std::int64_t cx, std::int64_t cy) {
    return (static_cast<std::uint64_t>(cx) << 32) ^
           static_cast<std::uint32_t>(cy);
  }

  std::pair<std::int64_t, std::int64_t> cell_of(const GeoPoint& p) const {
    return {static_cast<std::int64_t>(std::floor((p.latitude - lat0) / dlat)),
            static_cast<std::int64_t>(std::floor((p.longitude - lon0) / dlon))};
  }
};

// Builds a bucket grid whose cell size guarantees that any pair within the
// cutoff lands in adjacent cells. Returns nullopt when the metric cannot give
// a sound coordinate bound (planar data is fine, polar data is not).
std::optional<CellGrid> build_grid(std::span<const GeoPoint> points,
                                   double cutoff_km,
                                   const PointMetric& metric) {
  const auto bound = metric.coordinate_bound(cutoff_km);
  if (!bound || !(bound->first > 0.0) || !(bound->second > 0.0) ||
      !std::isfinite(bound->first) || !std::isfinite(bound->second)) {
    return std::nullopt;
  }
  CellGrid grid;
  grid.dlat = bound->first;
  grid.dlon = bound->second;
  grid.lat0 = points[0].latitude;
  grid.lon0 = points[0].longitude;
  for (const auto& p : points) {
    grid.lat0 = std::min(grid.lat0, p.latitude);
    grid.lon0 = std::min(grid.lon0, p.longitude);
  }
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto [cx, cy] = grid.cell_of(points[i]);
    grid.cells[CellGrid::key(cx, cy)].push_back(
        static_cast<std::uint32_t>(i));
  }
  return grid;
}

template <typename Fn>
void for_neighbourhood(const CellGrid& grid, const GeoPoint& p, Fn&& fn) {
  const auto [cx, cy] = grid.cell_of(p);
  for (std::int64_t dx = -1; dx <= 1; ++dx) {
    for (std::int64_t dy = -1; dy <= 1; ++dy) {
      const auto it = grid.cells.find(CellGrid::key(cx + dx, cy + dy));
      if (it == grid.cells.end()) continue;
      for (std::uint32_t j : it->second) fn(j);
    }
  }
}

}  // namespace

DensityDelta compute_density_delta(std::span<const GeoPoint> points,
                                   double cutoff_km, PointMetric& metric) {
  const std::size_t n = points.size();
  if (n == 0) throw InvalidInputError("density computation needs >= 1 point");

  DensityDelta out;
  out.rho.assign(n, 0);
  out.delta.assign(n, 0.0);
  out.nearest_higher.assign(n, -1);
  metric.prepare(points);
  if (n == 1) return out;

  const auto grid = build_grid(points, cutoff_km, metric);

  // Local density: strict count of neighbours closer than the cutoff.
  if (grid) {
    for (std::size_t i = 0; i < n; ++i) {
      int count = 0;
      for_neighbourhood(*grid, points[i], [&](std::uint32_t j) {
        if (j != i && pair_distance(metric, i, j) < cutoff_km) ++count;
      });
      out.rho[i] = count;
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        if (metric.distance(i, j) < cutoff_km) {
          ++out.rho[i];
          ++out.rho[j];
        }
      }
    }
  }

  // Rank order; order[0] is the head whose delta is the max distance.
  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    return ranks_higher(out.rho[a], a, out.rho[b], b);
  });

  const std::size_t head = order[0];
  double max_d = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    if (j != head) max_d = std::max(max_d, pair_distance(metric, head, j));
  }
  out.delta[head] = max_d;
  out.nearest_higher[head] = -1;

  auto full_scan = [&](std::size_t i) {
    double best = std::numeric_limits<double>::infinity();
    std::int64_t best_j = -1;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i || !ranks_higher(out.rho[j], j, out.rho[i], i)) continue;
      const double d = pair_distance(metric, i, j);
      if (d < best || (d == best && static_cast<std::int64_t>(j) < best_j)) {
        best = d;
        best_j = static_cast<std::int64_t>(j);
      }
    }
    out.delta[i] = best;
    out.nearest_higher[i] = best_j;
  };

  for (std::size_t k = 1; k < n; ++k) {
    const std::size_t i = order[k];
    if (grid) {
      // Points outside the 3x3 neighbourhood are provably >= cutoff away, so
      // a strictly-closer hit inside it is the global nearest higher point.
      double best = std::numeric_limits<double>::infinity();
      std::int64_t best_j = -1;
      for_neighbourhood(*grid, points[i], [&](std::uint32_t j) {
        if (j == i || !ranks_higher(out.rho[j], j, out.rho[i], i)) return;
        const double d = pair_distance(metric, i, j);
        if (d < best || (d == best && static_cast<std::int64_t>(j) < best_j)) {
          best = d;
          best_j = static_cast<std::int64_t>(j);
        }
      });
      if (best_j >= 0 && best < cutoff_km) {
        out.delta[i] = best;
        out.nearest_higher[i] = best_j;
        continue;
      }
    }
    full_scan(i);
  }
  return out;
}

CenterDetection detect_centers_outliers(std::span<const int> rho,
                                        std::span<const double> delta,
                                        const ClusterParams& params) {
  if (rho.size() != delta.size()) {
    throw ContractError("rho and delta lengths differ");
  }
  params.validate();
  CenterDetection det;
  if (rho.empty()) return det;

  const int rho_max = *std::max_element(rho.begin(), rho.end());
  const double delta_max = *std::max_element(delta.begin(), delta.end());
  det.theta_rho = rho_max * params.rho_fraction;
  det.theta_delta = delta_max * params.delta_fraction;

  for (std::size_t i = 0; i < rho.size(); ++i) {
    const bool high_delta = delta[i] > det.theta_delta;
    if (rho[i] > det.theta_rho && high_delta) {
      det.centers.push_back(i);
    } else if (rho[i] <= det.theta_rho && high_delta) {
      det.outliers.push_back(i);
    }
  }
  return det;
}

ClusterSet cluster_drop_offs(PositionSet positions, const ClusterParams& params,
                             PointMetric& metric) {
  params.validate();
  const std::size_t n = positions.points.size();
  if (n == 0) throw InvalidInputError("cannot cluster an empty position set");

  std::vector<GeoPoint> coords(n);
  for (std::size_t i = 0; i < n; ++i) coords[i] = positions.points[i].location;

  auto dd = compute_density_delta(coords, params.cutoff_distance_km, metric);
  auto det = detect_centers_outliers(dd.rho, dd.delta, params);

  ClusterSet set;
  set.points = std::move(positions);
  set.rho = std::move(dd.rho);
  set.delta = std::move(dd.delta);
  set.theta_rho = det.theta_rho;
  set.theta_delta = det.theta_delta;
  set.label.assign(n, kOutlier);

  if (det.centers.empty()) {
    set.no_centers = true;
    return set;
  }

  constexpr int kUnresolved = -2;
  std::vector<int> label(n, kUnresolved);
  for (std::size_t c = 0; c < det.centers.size(); ++c) {
    label[det.centers[c]] = static_cast<int>(c);
  }
  for (std::size_t i : det.outliers) label[i] = kOutlier;

  // Each remaining point inherits the label of its nearest higher-ranked
  // neighbour; chains are resolved iteratively and memoized on the way back.
  std::vector<std::size_t> path;
  for (std::size_t i = 0; i < n; ++i) {
    if (label[i] != kUnresolved) continue;
    path.clear();
    std::size_t cur = i;
    while (label[cur] == kUnresolved) {
      path.push_back(cur);
      const std::int64_t next = dd.nearest_higher[cur];
      if (next < 0) {
        label[cur] = kOutlier;  // degenerate head with no assignment
        path.pop_back();
        break;
      }
      cur = static_cast<std::size_t>(next);
    }
    const int resolved = label[cur];
    for (std::size_t p : path) label[p] = resolved;
  }

  // Drop clusters below the minimum station size.
  std::vector<int> member_count(det.centers.size(), 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (label[i] >= 0) ++member_count[label[i]];
  }
  std::vector<int> remap(det.centers.size(), kOutlier);
  for (std::size_t c = 0; c < det.centers.size(); ++c) {
    if (member_count[c] >= params.min_station_size) {
      remap[c] = static_cast<int>(set.centers.size());
      set.centers.push_back(det.centers[c]);
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    set.label[i] = label[i] >= 0 ? remap[label[i]] : kOutlier;
  }
  if (set.centers.empty()) set.no_centers = true;
  return set;
}

}  // namespace bsdp
