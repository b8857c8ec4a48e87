#pragma once

#include <cmath>
#include <numbers>

namespace bsdp {

inline constexpr double kEarthRadiusKm = 6371.0;
inline constexpr double kDegToRad = std::numbers::pi / 180.0;
/// Length of one degree of latitude on the reference sphere.
inline constexpr double kKmPerDegLat = kEarthRadiusKm * kDegToRad;

/// A WGS-84-style coordinate pair in degrees. Latitude in [-90, 90],
/// longitude in [-180, 180], both finite.
struct GeoPoint {
  double latitude = 0.0;
  double longitude = 0.0;

  bool operator==(const GeoPoint&) const = default;
};

bool is_valid(const GeoPoint& p) noexcept;

/// Throws InvalidInputError if the point is non-finite or out of range.
void validate(const GeoPoint& p);

namespace detail {

/// Great-circle distance core on prepared radian inputs. Every distance the
/// library computes goes through this one expression so that cached-input
/// call sites stay bitwise identical to haversine_distance().
inline double haversine_core(double lat_a_rad, double cos_lat_a,
                             double lat_b_rad, double cos_lat_b,
                             double dlon_rad) {
  const double s_lat = std::sin((lat_a_rad - lat_b_rad) * 0.5);
  const double s_lon = std::sin(dlon_rad * 0.5);
  const double h = s_lat * s_lat + cos_lat_a * cos_lat_b * (s_lon * s_lon);
  return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(h)));
}

}  // namespace detail

/// Great-circle distance in kilometers between two points, R = 6371.0 km.
double haversine_distance(const GeoPoint& a, const GeoPoint& b);

}  // namespace bsdp
