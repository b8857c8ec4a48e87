#include "bsdp/grid_codec.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "bsdp/error.hpp"

namespace bsdp {

std::string_view to_string(CellAnchorPolicy policy) {
  return policy == CellAnchorPolicy::cell_center ? "cell_center"
                                                 : "historical_centroid";
}

CellAnchorPolicy anchor_policy_from_string(std::string_view text) {
  if (text == "cell_center") return CellAnchorPolicy::cell_center;
  if (text == "historical_centroid") return CellAnchorPolicy::historical_centroid;
  throw InvalidInputError("unknown cell anchor policy '" + std::string(text) +
                          "'");
}

bool GridCodec::contains(const GeoPoint& p) const {
  return p.latitude >= lat_min && p.latitude <= lat_max &&
         p.longitude >= lon_min && p.longitude <= lon_max;
}

namespace {

int axis_index(double value, double lo, double hi, int n) {
  const double extent = hi - lo;
  if (!(extent > 0.0)) return 0;
  const auto idx = static_cast<int>(std::floor((value - lo) / extent * n));
  return std::clamp(idx, 0, n - 1);
}

}  // namespace

int GridCodec::cell_of(const GeoPoint& p) const {
  if (!contains(p)) {
    throw InvalidInputError("point outside grid codec bounding box");
  }
  const int r = axis_index(p.latitude, lat_min, lat_max, rows);
  const int c = axis_index(p.longitude, lon_min, lon_max, cols);
  return r * cols + c;
}

GeoPoint GridCodec::cell_center(int cell) const {
  if (cell < 0 || cell >= dimension()) {
    throw InvalidInputError("cell index out of range");
  }
  const int r = cell / cols;
  const int c = cell % cols;
  const double dlat = (lat_max - lat_min) / rows;
  const double dlon = (lon_max - lon_min) / cols;
  return {lat_min + (r + 0.5) * dlat, lon_min + (c + 0.5) * dlon};
}

GeoPoint GridCodec::anchor(int cell) const {
  if (anchor_policy == CellAnchorPolicy::historical_centroid &&
      cell >= 0 && static_cast<std::size_t>(cell) < anchor_lat.size() &&
      std::isfinite(anchor_lat[cell])) {
    return {anchor_lat[cell], anchor_lon[cell]};
  }
  return cell_center(cell);
}

void GridCodec::validate() const {
  if (rows < 1 || cols < 1) throw ConfigError("grid must have >= 1 row and column");
  if (!(cap_max > 0.0)) throw ConfigError("cap_max must be positive");
  if (!(lat_max >= lat_min) || !(lon_max >= lon_min)) {
    throw ConfigError("grid codec bounding box is inverted");
  }
  if (!anchor_lat.empty() &&
      (anchor_lat.size() != static_cast<std::size_t>(dimension()) ||
       anchor_lon.size() != anchor_lat.size())) {
    throw ConfigError("anchor table size does not match grid dimension");
  }
}

GridCodec fit_grid_codec(std::span<const StationGraph> graphs,
                         const CodecFitOptions& options) {
  if (options.rows < 1 || options.cols < 1) {
    throw ConfigError("grid must have >= 1 row and column");
  }
  if (options.cap_round < 1) throw ConfigError("cap_round must be >= 1");

  GridCodec codec;
  codec.rows = options.rows;
  codec.cols = options.cols;
  codec.anchor_policy = options.anchor_policy;

  bool any = false;
  codec.lat_min = codec.lon_min = std::numeric_limits<double>::infinity();
  codec.lat_max = codec.lon_max = -std::numeric_limits<double>::infinity();
  for (const auto& g : graphs) {
    for (const auto& v : g.vertices()) {
      any = true;
      codec.lat_min = std::min(codec.lat_min, v.location.latitude);
      codec.lat_max = std::max(codec.lat_max, v.location.latitude);
      codec.lon_min = std::min(codec.lon_min, v.location.longitude);
      codec.lon_max = std::max(codec.lon_max, v.location.longitude);
    }
  }
  if (!any) {
    throw InvalidInputError("cannot fit grid codec: no stations in any graph");
  }
  // A degenerate axis gets a token width so cell geometry stays finite.
  if (codec.lat_max == codec.lat_min) {
    codec.lat_min -= 5e-4;
    codec.lat_max += 5e-4;
  }
  if (codec.lon_max == codec.lon_min) {
    codec.lon_min -= 5e-4;
    codec.lon_max += 5e-4;
  }

  const int dim = codec.dimension();
  const auto nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> sum_lat(dim, 0.0), sum_lon(dim, 0.0);
  std::vector<std::int64_t> count(dim, 0);
  std::vector<std::int64_t> cell_total(dim, 0);
  std::int64_t cap = 0;
  for (const auto& g : graphs) {
    std::fill(cell_total.begin(), cell_total.end(), 0);
    for (const auto& v : g.vertices()) {
      const int cell = codec.cell_of(v.location);
      cell_total[cell] += v.bike_count;
      sum_lat[cell] += v.location.latitude;
      sum_lon[cell] += v.location.longitude;
      ++count[cell];
    }
    for (const auto t : cell_total) cap = std::max(cap, t);
  }
  const std::int64_t round = options.cap_round;
  cap = std::max<std::int64_t>((cap + round - 1) / round * round, round);
  codec.cap_max = static_cast<double>(cap);

  codec.anchor_lat.assign(dim, nan);
  codec.anchor_lon.assign(dim, nan);
  for (int cell = 0; cell < dim; ++cell) {
    if (count[cell] > 0) {
      codec.anchor_lat[cell] = sum_lat[cell] / static_cast<double>(count[cell]);
      codec.anchor_lon[cell] = sum_lon[cell] / static_cast<double>(count[cell]);
    }
  }
  return codec;
}

std::vector<double> encode_graph(const StationGraph& g,
                                 const GridCodec& codec) {
  codec.validate();
  std::vector<double> x(codec.dimension(), 0.0);
  std::vector<std::int64_t> totals(codec.dimension(), 0);
  for (const auto& v : g.vertices()) {
    if (!codec.contains(v.location)) {
      throw InvalidInputError("station '" + v.station_id +
                              "' lies outside the grid codec bounding box");
    }
    totals[codec.cell_of(v.location)] += v.bike_count;
  }
  for (int cell = 0; cell < codec.dimension(); ++cell) {
    x[cell] = std::min(1.0, static_cast<double>(totals[cell]) / codec.cap_max);
  }
  return x;
}

StationGraph decode_prediction(std::span<const double> y,
                               const GridCodec& codec, int min_station_size) {
  codec.validate();
  if (y.size() != static_cast<std::size_t>(codec.dimension())) {
    throw ContractError("prediction vector length does not match grid");
  }
  if (min_station_size < 1) throw ConfigError("min_station_size must be >= 1");

  std::vector<Station> stations;
  for (int cell = 0; cell < codec.dimension(); ++cell) {
    if (!std::isfinite(y[cell])) {
      throw NumericalError("non-finite prediction value at cell " +
                           std::to_string(cell));
    }
    const auto count = std::lround(y[cell] * codec.cap_max);
    if (count < min_station_size) continue;
    Station s;
    s.station_id = "c" + std::to_string(cell);
    s.location = codec.anchor(cell);
    s.bike_count = static_cast<int>(count);
    s.level = classify_station_level(s.bike_count);
    stations.push_back(std::move(s));
  }
  return StationGraph::vertices_only(std::move(stations));
}

}  // namespace bsdp
