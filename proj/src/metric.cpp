#include "bsdp/metric.hpp"

#include <algorithm>
#include <cmath>

namespace bsdp {

void HaversineMetric::prepare(std::span<const GeoPoint> points) {
  points_ = points;
  const std::size_t n = points.size();
  lat_rad_.resize(n);
  cos_lat_.resize(n);
  min_cos_lat_ = 1.0;
  max_abs_lat_ = 0.0;
  double lon_min = 0.0, lon_max = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    lat_rad_[i] = points[i].latitude * kDegToRad;
    cos_lat_[i] = std::cos(lat_rad_[i]);
    min_cos_lat_ = std::min(min_cos_lat_, cos_lat_[i]);
    max_abs_lat_ = std::max(max_abs_lat_, std::abs(points[i].latitude));
    if (i == 0) {
      lon_min = lon_max = points[i].longitude;
    } else {
      lon_min = std::min(lon_min, points[i].longitude);
      lon_max = std::max(lon_max, points[i].longitude);
    }
  }
  lon_span_ = n ? lon_max - lon_min : 0.0;
}

double HaversineMetric::distance(std::size_t i, std::size_t j) const {
  // The longitude delta is scaled from degrees exactly like the raw-point
  // path does, keeping the two paths bitwise interchangeable.
  return detail::haversine_core(
      lat_rad_[i], cos_lat_[i], lat_rad_[j], cos_lat_[j],
      (points_[i].longitude - points_[j].longitude) * kDegToRad);
}

double HaversineMetric::distance(const GeoPoint& a, const GeoPoint& b) const {
  return haversine_distance(a, b);
}

std::optional<std::pair<double, double>> HaversineMetric::coordinate_bound(
    double radius_km) const {
  // Bucketing on raw coordinates is only sound away from the poles and when
  // no pair can straddle the antimeridian.
  if (max_abs_lat_ > 85.0 || lon_span_ >= 180.0 || min_cos_lat_ <= 0.0) {
    return std::nullopt;
  }
  // d >= R*|dlat| and d >= (2/pi)*R*cos_max(lat)*|dlon| on the sphere, so a
  // pair within radius_km stays within these coordinate deltas.
  const double margin = 1.0 + 1e-9;
  const double dlat = radius_km / kKmPerDegLat * margin;
  const double dlon =
      90.0 * radius_km / (kEarthRadiusKm * min_cos_lat_) * margin;
  return std::make_pair(dlat, dlon);
}

double PlanarMetric::distance(std::size_t i, std::size_t j) const {
  return distance(points_[i], points_[j]);
}

double PlanarMetric::distance(const GeoPoint& a, const GeoPoint& b) const {
  const double dy = a.latitude - b.latitude;
  const double dx = a.longitude - b.longitude;
  return std::sqrt(dy * dy + dx * dx);
}

std::optional<std::pair<double, double>> PlanarMetric::coordinate_bound(
    double radius_km) const {
  const double bound = radius_km * (1.0 + 1e-9);
  return std::make_pair(bound, bound);
}

}  // namespace bsdp
