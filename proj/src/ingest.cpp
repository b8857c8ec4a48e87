#include "bsdp/ingest.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "bsdp/error.hpp"

namespace bsdp {

namespace {

// Days since 1970-01-01 for a proleptic Gregorian date (Howard Hinnant's
// days_from_civil).
std::int64_t days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2u) / 5u + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, int& y, int& m, int& d) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t year = yoe + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
  m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
  y = static_cast<int>(year + (m <= 2));
}

bool parse_dt_fields(std::string_view s, char date_sep, char time_sep,
                     std::int64_t& out) {
  int y, mo, d, h, mi, se;
  char sep1, sep2, mid, sep3, sep4;
  std::istringstream is{std::string(s)};
  is >> y >> sep1 >> mo >> sep2 >> d >> std::noskipws >> mid >> h >> sep3 >>
      mi >> sep4 >> se;
  if (!is || sep1 != date_sep || sep2 != date_sep ||
      (mid != time_sep && !(time_sep == ' ' && mid == 'T')) || sep3 != ':' ||
      sep4 != ':') {
    return false;
  }
  char extra;
  if (is >> extra) return false;
  if (mo < 1 || mo > 12 || d < 1 || d > 31 || h < 0 || h > 23 || mi < 0 ||
      mi > 59 || se < 0 || se > 60) {
    return false;
  }
  out = days_from_civil(y, mo, d) * 86400 + h * 3600 + mi * 60 + se;
  return true;
}

double parse_double_field(std::string_view s, const char* what) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw InvalidInputError(std::string("bad ") + what + " value '" +
                            std::string(s) + "'");
  }
  return v;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() &&
         (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == ',') {
      fields.push_back(trim(line.substr(start, i - start)));
      start = i + 1;
    }
  }
  return fields;
}

constexpr std::array<const char*, 8> kHeader = {
    "user_id",    "bike_id",    "depart_ts",  "depart_lat",
    "depart_lon", "arrive_ts",  "arrive_lat", "arrive_lon"};

GeoPoint parse_point_fields(std::string_view lat, std::string_view lon,
                            const char* what) {
  GeoPoint p{parse_double_field(lat, what), parse_double_field(lon, what)};
  if (!is_valid(p)) {
    std::ostringstream os;
    os << what << " coordinate out of range (" << p.latitude << ", "
       << p.longitude << ")";
    throw InvalidInputError(os.str());
  }
  return p;
}

TrajectoryRecord parse_row(std::span<const std::string_view> f) {
  TrajectoryRecord rec;
  rec.user_id = std::string(f[0]);
  rec.bike_id = std::string(f[1]);
  rec.depart_time = parse_timestamp(f[2]);
  rec.depart = parse_point_fields(f[3], f[4], "departure");
  rec.arrive_time = parse_timestamp(f[5]);
  rec.arrive = parse_point_fields(f[6], f[7], "arrival");
  if (rec.depart_time > rec.arrive_time) {
    throw InvalidInputError("departure time is after arrival time");
  }
  return rec;
}

}  // namespace

std::int64_t parse_timestamp(std::string_view text) {
  text = trim(text);
  std::int64_t out = 0;
  if (parse_dt_fields(text, '/', ' ', out)) return out;
  if (parse_dt_fields(text, '-', ' ', out)) return out;
  throw InvalidInputError("unparseable timestamp '" + std::string(text) + "'");
}

std::string format_timestamp(std::int64_t epoch_seconds) {
  std::int64_t days = epoch_seconds / 86400;
  std::int64_t rem = epoch_seconds % 86400;
  if (rem < 0) {
    rem += 86400;
    days -= 1;
  }
  int y, m, d;
  civil_from_days(days, y, m, d);
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%04d/%02d/%02d %02d:%02d:%02d", y, m, d,
                static_cast<int>(rem / 3600), static_cast<int>(rem / 60 % 60),
                static_cast<int>(rem % 60));
  return buf;
}

ParseResult parse_trajectory_csv(std::istream& in, bool strict) {
  ParseResult result;
  std::string line;
  std::size_t line_no = 0;

  if (!std::getline(in, line)) {
    throw InvalidInputError("trajectory CSV is empty (missing header)");
  }
  ++line_no;
  const auto header = split_csv_line(line);
  if (header.size() != kHeader.size()) {
    throw InvalidInputError("trajectory CSV header must have 8 columns");
  }
  for (std::size_t i = 0; i < kHeader.size(); ++i) {
    if (header[i] != kHeader[i]) {
      throw InvalidInputError("unexpected trajectory CSV column '" +
                              std::string(header[i]) + "', expected '" +
                              kHeader[i] + "'");
    }
  }

  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_csv_line(line);
    try {
      if (fields.size() != 8) {
        throw InvalidInputError("expected 8 fields, got " +
                                std::to_string(fields.size()));
      }
      result.records.push_back(parse_row(fields));
    } catch (const Error& e) {
      if (strict) {
        throw InvalidInputError("line " + std::to_string(line_no) + ": " +
                                e.what());
      }
      result.row_errors.push_back({line_no, e.what()});
    }
  }
  return result;
}

ParseResult parse_trajectory_csv_file(const std::filesystem::path& path,
                                      bool strict) {
  std::ifstream in(path);
  if (!in) {
    throw InvalidInputError("cannot open trajectory CSV: " + path.string());
  }
  return parse_trajectory_csv(in, strict);
}

namespace {

// Coordinates are compared bitwise so hash and equality agree on every input.
struct PositionKey {
  std::string_view bike;
  double lat, lon;
  bool operator==(const PositionKey& o) const {
    return bike == o.bike &&
           std::bit_cast<std::uint64_t>(lat) == std::bit_cast<std::uint64_t>(o.lat) &&
           std::bit_cast<std::uint64_t>(lon) == std::bit_cast<std::uint64_t>(o.lon);
  }
};

struct PositionKeyHash {
  std::size_t operator()(const PositionKey& k) const {
    std::size_t h = std::hash<std::string_view>{}(k.bike);
    auto mix = [&h](double v) {
      const auto bits = std::bit_cast<std::uint64_t>(v);
      h ^= std::hash<std::uint64_t>{}(bits) + 0x9e3779b97f4a7c15ull + (h << 6) +
           (h >> 2);
    };
    mix(k.lat);
    mix(k.lon);
    return h;
  }
};

}  // namespace

PositionSet extract_positions(std::span<const TrajectoryRecord> records) {
  PositionSet set;
  set.source_count = records.size();
  set.points.reserve(records.size() * 2);
  std::unordered_set<PositionKey, PositionKeyHash> seen;
  seen.reserve(records.size() * 2);

  auto add = [&](const std::string& bike, const GeoPoint& loc,
                 std::int64_t ts, PositionKind kind) {
    if (seen.insert({bike, loc.latitude, loc.longitude}).second) {
      set.points.push_back({bike, loc, ts, kind});
    }
  };
  for (const auto& rec : records) {
    add(rec.bike_id, rec.depart, rec.depart_time, PositionKind::pickup);
    add(rec.bike_id, rec.arrive, rec.arrive_time, PositionKind::dropoff);
  }
  return set;
}

std::string_view to_string(Granularity g) {
  return g == Granularity::day ? "day" : "week";
}

Granularity granularity_from_string(std::string_view s) {
  if (s == "day") return Granularity::day;
  if (s == "week") return Granularity::week;
  throw ConfigError("granularity must be 'day' or 'week', got '" +
                    std::string(s) + "'");
}

std::int64_t period_index_for(std::int64_t epoch_seconds, Granularity g) {
  std::int64_t day = epoch_seconds / 86400;
  if (epoch_seconds % 86400 < 0) day -= 1;
  if (g == Granularity::day) return day;
  // ISO weeks start on Monday; 1970-01-01 was a Thursday.
  std::int64_t shifted = day + 3;
  return shifted >= 0 ? shifted / 7 : (shifted - 6) / 7;
}

std::int64_t period_length_seconds(Granularity g) {
  return g == Granularity::day ? 86400 : 7 * 86400;
}

std::int64_t period_start(std::int64_t period_index, Granularity g) {
  if (g == Granularity::day) return period_index * 86400;
  return (period_index * 7 - 3) * 86400;
}

bool Region::contains(const GeoPoint& p) const {
  // Even-odd rule on the closed polygon.
  bool inside = false;
  const std::size_t n = polygon.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const auto& a = polygon[i];
    const auto& b = polygon[j];
    if ((a.latitude > p.latitude) != (b.latitude > p.latitude)) {
      const double x = (b.longitude - a.longitude) *
                           (p.latitude - a.latitude) /
                           (b.latitude - a.latitude) +
                       a.longitude;
      if (p.longitude < x) inside = !inside;
    }
  }
  return inside;
}

std::vector<Region> parse_regions(std::string_view json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInputError(std::string("bad region JSON: ") + e.what());
  }
  if (!doc.is_array()) {
    throw InvalidInputError("region file must be a JSON list");
  }
  std::vector<Region> regions;
  for (const auto& item : doc) {
    Region r;
    r.region_id = item.at("region_id").get<std::string>();
    for (const auto& pt : item.at("polygon")) {
      GeoPoint p{pt.at(0).get<double>(), pt.at(1).get<double>()};
      validate(p);
      r.polygon.push_back(p);
    }
    if (r.polygon.size() < 3) {
      throw InvalidInputError("region '" + r.region_id +
                              "' needs at least 3 polygon points");
    }
    regions.push_back(std::move(r));
  }
  return regions;
}

std::vector<Region> load_regions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw InvalidInputError("cannot open region file: " + path.string());
  }
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_regions(buf.str());
}

PartitionResult partition_spatiotemporal(
    std::span<const TrajectoryRecord> records, std::span<const Region> regions,
    Granularity granularity) {
  PartitionResult out;
  for (const auto& rec : records) {
    const Region* hit = nullptr;
    for (const auto& region : regions) {
      if (region.contains(rec.depart)) {
        if (hit != nullptr) {
          throw ConfigError("regions '" + hit->region_id + "' and '" +
                            region.region_id +
                            "' overlap at a record departure point");
        }
        hit = &region;
      }
    }
    if (hit == nullptr) {
      out.rejected.push_back(rec);
      continue;
    }
    SpatioTemporalKey key{hit->region_id,
                          period_index_for(rec.depart_time, granularity),
                          granularity};
    out.buckets[key].push_back(rec);
  }
  return out;
}

}  // namespace bsdp
