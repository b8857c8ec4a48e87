#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bsdp/geo.hpp"

namespace bsdp {

/// One ride from the trajectory table: who, which bike, and the
/// departure/arrival endpoints with second-resolution timestamps.
struct TrajectoryRecord {
  std::string user_id;
  std::string bike_id;
  std::int64_t depart_time = 0;  // epoch seconds, UTC
  GeoPoint depart;
  std::int64_t arrive_time = 0;
  GeoPoint arrive;
};

enum class PositionKind { pickup, dropoff };

struct Position {
  std::string bike_id;
  GeoPoint location;
  std::int64_t timestamp = 0;
  PositionKind kind = PositionKind::dropoff;
};

/// Deduplicated pickup/dropoff positions extracted from M source records.
/// Positions are unique by exact (bike_id, latitude, longitude).
struct PositionSet {
  std::vector<Position> points;
  std::size_t source_count = 0;  // M
};

struct RowError {
  std::size_t line = 0;  // 1-based, header = line 1
  std::string message;
};

struct ParseResult {
  std::vector<TrajectoryRecord> records;
  std::vector<RowError> row_errors;
};

/// Parses the 8-column trajectory CSV (header mandatory):
///   user_id,bike_id,depart_ts,depart_lat,depart_lon,arrive_ts,arrive_lat,arrive_lon
/// Malformed rows are collected with their line number; in strict mode the
/// first bad row aborts the parse instead.
ParseResult parse_trajectory_csv(std::istream& in, bool strict = false);
ParseResult parse_trajectory_csv_file(const std::filesystem::path& path,
                                      bool strict = false);

/// Emits pickup and dropoff positions for every record (2M raw), then removes
/// exact duplicates by (bike_id, latitude, longitude), keeping the first
/// occurrence in emission order.
PositionSet extract_positions(std::span<const TrajectoryRecord> records);

enum class Granularity { day, week };

std::string_view to_string(Granularity g);
Granularity granularity_from_string(std::string_view s);

/// Identifies one spatio-temporal subset. period_index is an absolute day
/// (days since 1970-01-01) or ISO week number (Monday-start weeks counted the
/// same way), so indices compare across files.
struct SpatioTemporalKey {
  std::string region_id;
  std::int64_t period_index = 0;
  Granularity granularity = Granularity::day;

  auto operator<=>(const SpatioTemporalKey&) const = default;
};

std::int64_t period_index_for(std::int64_t epoch_seconds, Granularity g);
std::int64_t period_start(std::int64_t period_index, Granularity g);
std::int64_t period_length_seconds(Granularity g);

/// Polygonal region; containment by the even-odd (ray crossing) rule.
struct Region {
  std::string region_id;
  std::vector<GeoPoint> polygon;  // closed implicitly

  bool contains(const GeoPoint& p) const;
};

std::vector<Region> load_regions(const std::filesystem::path& path);
std::vector<Region> parse_regions(std::string_view json_text);

struct PartitionResult {
  std::map<SpatioTemporalKey, std::vector<TrajectoryRecord>> buckets;
  std::vector<TrajectoryRecord> rejected;  // departure outside all regions
};

/// Assigns each record to exactly one (region, period) bucket keyed by its
/// departure time and departure point. A departure point inside more than one
/// region means the region set is overlapping -> ConfigError.
PartitionResult partition_spatiotemporal(std::span<const TrajectoryRecord> records,
                                         std::span<const Region> regions,
                                         Granularity granularity);

/// Accepts "YYYY/MM/DD HH:MM:SS" and ISO-8601 "YYYY-MM-DD[T ]HH:MM:SS" (UTC).
std::int64_t parse_timestamp(std::string_view text);
/// Formats epoch seconds in the legacy "YYYY/MM/DD HH:MM:SS" form.
std::string format_timestamp(std::int64_t epoch_seconds);

}  // namespace bsdp
