#pragma once

#include <filesystem>
#include <istream>
#include <span>
#include <string>
#include <vector>

#include "bsdp/geo.hpp"
#include "bsdp/station_graph.hpp"

namespace bsdp {

struct LegalPosition {
  std::string position_id;
  GeoPoint location;
  int capacity = 0;
  int remaining = 0;
};

// CSV columns: position_id,lat,lon,capacity (header mandatory).
// remaining starts equal to capacity.
std::vector<LegalPosition> parse_legal_positions_csv(std::istream& in);
std::vector<LegalPosition> load_legal_positions_csv(
    const std::filesystem::path& path);

struct PositionMatch {
  std::size_t index = 0;
  double distance_km = 0.0;
};

// Nearest position by haversine distance; ties go to the lower position_id.
PositionMatch match_legal_position(const GeoPoint& location,
                                   std::span<const LegalPosition> positions);

enum class AdjustmentCase { a, b, c };

std::string_view to_string(AdjustmentCase c);

// Level bands for recommendation outputs: splits may carry fewer than the
// station minimum, so micro extends below 5 here.
StationLevel level_for_count(int n);

struct RecommendedStation {
  std::string station_id;
  GeoPoint location;  // always exactly a legal position's coordinates
  int bike_count = 0;
  StationLevel level = StationLevel::micro;
  std::string position_id;
  AdjustmentCase adjustment = AdjustmentCase::a;
};

// One audit entry per predicted station.
struct Adjustment {
  std::string station_id;
  AdjustmentCase kind = AdjustmentCase::a;
  double moved_km = 0.0;  // non-zero only for case c
  int split_into = 0;     // output stations derived from this one
  int unplaced = 0;       // bikes no position could absorb
};

struct LayoutRecommendation {
  std::vector<RecommendedStation> stations;
  int unplaced = 0;
  std::vector<Adjustment> adjustments;

  std::int64_t placed_total() const;
};

// Greedy capacity-constrained assignment of predicted stations to legal
// positions. Stations are processed by descending bike count (ties by id);
// positions share one capacity ledger.
// Case a: nearest position within theta_d has room for the whole station.
// Case b: nearest position within theta_d lacks room; the overflow splits
//         across next-nearest positions with remaining capacity (no distance
//         limit), or counts as unplaced when every position is full.
// Case c: nearest position is farther than theta_d; the station is relocated
//         onto it, then resolved like a/b.
LayoutRecommendation fine_tune_layout(const StationGraph& predicted,
                                      std::vector<LegalPosition> positions,
                                      double theta_d_km);

}  // namespace bsdp
