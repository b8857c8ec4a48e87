#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "bsdp/geo.hpp"
#include "bsdp/station_graph.hpp"

namespace bsdp {

enum class CellAnchorPolicy { cell_center, historical_centroid };

std::string_view to_string(CellAnchorPolicy policy);
CellAnchorPolicy anchor_policy_from_string(std::string_view text);

// Maps stations onto a fixed lat/lon grid so variable-size graphs become
// fixed-length vectors in [0, 1]^(rows*cols), cell-major by (row, col).
struct GridCodec {
  double lat_min = 0.0, lat_max = 0.0;
  double lon_min = 0.0, lon_max = 0.0;
  int rows = 16, cols = 16;
  double cap_max = 0.0;
  CellAnchorPolicy anchor_policy = CellAnchorPolicy::historical_centroid;
  // Per-cell historical centroids; NaN marks cells with no history.
  std::vector<double> anchor_lat, anchor_lon;

  int dimension() const { return rows * cols; }
  bool contains(const GeoPoint& p) const;
  int cell_of(const GeoPoint& p) const;  // requires contains(p)
  GeoPoint cell_center(int cell) const;
  // Decode target for a cell: historical centroid when available and
  // selected, otherwise the cell center.
  GeoPoint anchor(int cell) const;

  void validate() const;
};

struct CodecFitOptions {
  int rows = 16;
  int cols = 16;
  CellAnchorPolicy anchor_policy = CellAnchorPolicy::historical_centroid;
  int cap_round = 10;  // cap_max rounds up to a multiple of this
};

// Fits bounding box, cap_max and per-cell centroids over every vertex of the
// given graphs. Throws when no graph has any vertex.
GridCodec fit_grid_codec(std::span<const StationGraph> graphs,
                         const CodecFitOptions& options = {});

// Cell value = min(1, sum of bike counts in cell / cap_max).
std::vector<double> encode_graph(const StationGraph& g, const GridCodec& codec);

// Cells whose round(y * cap_max) reaches min_station_size become stations at
// the cell anchor; result carries vertices only.
StationGraph decode_prediction(std::span<const double> y,
                               const GridCodec& codec,
                               int min_station_size = 5);

}  // namespace bsdp
