#include "bsdp/geo.hpp"

#include <sstream>

#include "bsdp/error.hpp"

namespace bsdp {

bool is_valid(const GeoPoint& p) noexcept {
  return std::isfinite(p.latitude) && std::isfinite(p.longitude) &&
         p.latitude >= -90.0 && p.latitude <= 90.0 &&
         p.longitude >= -180.0 && p.longitude <= 180.0;
}

void validate(const GeoPoint& p) {
  if (!is_valid(p)) {
    std::ostringstream os;
    os << "invalid coordinate (" << p.latitude << ", " << p.longitude
       << "): latitude must be in [-90, 90] and longitude in [-180, 180]";
    throw InvalidInputError(os.str());
  }
}

double haversine_distance(const GeoPoint& a, const GeoPoint& b) {
  validate(a);
  validate(b);
  const double lat_a = a.latitude * kDegToRad;
  const double lat_b = b.latitude * kDegToRad;
  return detail::haversine_core(lat_a, std::cos(lat_a), lat_b,
                                std::cos(lat_b),
                                (a.longitude - b.longitude) * kDegToRad);
}

}  // namespace bsdp
