#include "bsdp/recommend.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>

#include "bsdp/error.hpp"

namespace bsdp {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  fields.push_back(cur);
  for (auto& f : fields) {
    const auto a = f.find_first_not_of(" \t");
    const auto b = f.find_last_not_of(" \t");
    f = a == std::string::npos ? std::string{} : f.substr(a, b - a + 1);
  }
  return fields;
}

double parse_double_field(const std::string& text, std::size_t line,
                         const char* what) {
  double value = 0.0;
  const auto [p, ec] =
      std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || p != text.data() + text.size()) {
    throw InvalidInputError("line " + std::to_string(line) + ": bad " + what +
                            " '" + text + "'");
  }
  return value;
}

}  // namespace

std::vector<LegalPosition> parse_legal_positions_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) {
    throw InvalidInputError("legal positions file is empty");
  }
  const auto header = split_csv_line(line);
  const std::vector<std::string> expected = {"position_id", "lat", "lon",
                                             "capacity"};
  if (header != expected) {
    throw InvalidInputError(
        "legal positions header must be 'position_id,lat,lon,capacity'");
  }

  std::vector<LegalPosition> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 4) {
      throw InvalidInputError("line " + std::to_string(line_no) +
                              ": expected 4 fields, got " +
                              std::to_string(fields.size()));
    }
    LegalPosition p;
    p.position_id = fields[0];
    if (p.position_id.empty()) {
      throw InvalidInputError("line " + std::to_string(line_no) +
                              ": empty position_id");
    }
    p.location = {parse_double_field(fields[1], line_no, "latitude"),
                  parse_double_field(fields[2], line_no, "longitude")};
    validate(p.location);
    const double cap = parse_double_field(fields[3], line_no, "capacity");
    if (cap < 0 || cap != std::floor(cap)) {
      throw InvalidInputError("line " + std::to_string(line_no) +
                              ": capacity must be a non-negative integer");
    }
    p.capacity = static_cast<int>(cap);
    p.remaining = p.capacity;
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<LegalPosition> load_legal_positions_csv(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw InvalidInputError("cannot open legal positions file: " +
                            path.string());
  }
  return parse_legal_positions_csv(in);
}

namespace {

// Shared nearest-position scan; `filter` decides which positions are
// eligible. Tie on distance goes to the lower position_id.
template <typename Filter>
std::optional<PositionMatch> nearest_position(
    const GeoPoint& location, std::span<const LegalPosition> positions,
    Filter&& filter) {
  std::optional<PositionMatch> best;
  for (std::size_t j = 0; j < positions.size(); ++j) {
    if (!filter(positions[j])) continue;
    const double d = haversine_distance(location, positions[j].location);
    if (!best || d < best->distance_km ||
        (d == best->distance_km &&
         positions[j].position_id < positions[best->index].position_id)) {
      best = PositionMatch{j, d};
    }
  }
  return best;
}

}  // namespace

PositionMatch match_legal_position(const GeoPoint& location,
                                   std::span<const LegalPosition> positions) {
  const auto best = nearest_position(location, positions,
                                     [](const LegalPosition&) { return true; });
  if (!best) throw InvalidInputError("no legal positions to match against");
  return *best;
}

std::string_view to_string(AdjustmentCase c) {
  switch (c) {
    case AdjustmentCase::a: return "a";
    case AdjustmentCase::b: return "b";
    case AdjustmentCase::c: return "c";
  }
  throw ContractError("unknown adjustment case");
}

StationLevel level_for_count(int n) {
  if (n < 0) throw InvalidInputError("negative bike count");
  if (n < 10) return StationLevel::micro;
  if (n < 20) return StationLevel::small;
  if (n < 30) return StationLevel::medium;
  return StationLevel::large;
}

std::int64_t LayoutRecommendation::placed_total() const {
  std::int64_t total = 0;
  for (const auto& s : stations) total += s.bike_count;
  return total;
}

LayoutRecommendation fine_tune_layout(const StationGraph& predicted,
                                      std::vector<LegalPosition> positions,
                                      double theta_d_km) {
  if (!(theta_d_km > 0.0)) {
    throw ConfigError("theta_d must be positive");
  }
  for (auto& p : positions) p.remaining = p.capacity;

  LayoutRecommendation rec;
  if (predicted.empty()) return rec;

  // Biggest stations are placed first; ties resolved by id for determinism.
  std::vector<std::size_t> order(predicted.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& va = predicted.vertices()[a];
    const auto& vb = predicted.vertices()[b];
    if (va.bike_count != vb.bike_count) return va.bike_count > vb.bike_count;
    return va.station_id < vb.station_id;
  });

  for (const std::size_t vi : order) {
    const Station& v = predicted.vertices()[vi];
    Adjustment adj;
    adj.station_id = v.station_id;

    const auto first = nearest_position(
        v.location, positions, [](const LegalPosition&) { return true; });
    if (!first) {
      adj.kind = AdjustmentCase::b;
      adj.unplaced = v.bike_count;
      rec.unplaced += v.bike_count;
      rec.adjustments.push_back(std::move(adj));
      continue;
    }

    GeoPoint at = v.location;
    if (first->distance_km > theta_d_km) {
      adj.kind = AdjustmentCase::c;
      adj.moved_km = first->distance_km;
      at = positions[first->index].location;
    } else {
      adj.kind = positions[first->index].remaining >= v.bike_count
                     ? AdjustmentCase::a
                     : AdjustmentCase::b;
    }

    auto emit = [&](std::size_t pos_index, int count) {
      auto& p = positions[pos_index];
      RecommendedStation s;
      s.station_id = adj.split_into == 0
                         ? v.station_id
                         : v.station_id + "-" +
                               std::to_string(adj.split_into + 1);
      s.location = p.location;
      s.bike_count = count;
      s.level = level_for_count(count);
      s.position_id = p.position_id;
      s.adjustment = adj.kind;
      p.remaining -= count;
      ++adj.split_into;
      rec.stations.push_back(std::move(s));
    };

    // First placement at the matched position, then overflow to the nearest
    // positions that still have room, however far away.
    int left = v.bike_count;
    auto& matched = positions[first->index];
    const int take = std::min(matched.remaining, left);
    if (take > 0 || left == 0) emit(first->index, take);
    left -= take;
    while (left > 0) {
      const auto next = nearest_position(
          at, positions,
          [](const LegalPosition& p) { return p.remaining > 0; });
      if (!next) {
        adj.unplaced = left;
        rec.unplaced += left;
        break;
      }
      const int portion = std::min(positions[next->index].remaining, left);
      emit(next->index, portion);
      left -= portion;
    }
    rec.adjustments.push_back(std::move(adj));
  }
  return rec;
}

}  // namespace bsdp
