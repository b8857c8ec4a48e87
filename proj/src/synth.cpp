#include "bsdp/synth.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <unordered_map>

#include "bsdp/error.hpp"

namespace bsdp {

std::string_view to_string(DriftModel model) {
  switch (model) {
    case DriftModel::constant: return "constant";
    case DriftModel::alternating: return "alternating";
    case DriftModel::linear_drift: return "linear_drift";
    case DriftModel::weekly_periodic: return "weekly_periodic";
  }
  throw ContractError("unknown drift model");
}

DriftModel drift_model_from_string(std::string_view text) {
  if (text == "constant") return DriftModel::constant;
  if (text == "alternating") return DriftModel::alternating;
  if (text == "linear_drift") return DriftModel::linear_drift;
  if (text == "weekly_periodic") return DriftModel::weekly_periodic;
  throw InvalidInputError("unknown drift model '" + std::string(text) + "'");
}

void SynthConfig::validate() const {
  if (!(lat_max > lat_min) || !(lon_max > lon_min)) {
    throw ConfigError("synthetic region box is degenerate");
  }
  bsdp::validate(GeoPoint{lat_min, lon_min});
  bsdp::validate(GeoPoint{lat_max, lon_max});
  if (n_stations < 1) throw ConfigError("n_stations must be >= 1");
  if (capacity_min < 1 || capacity_max < capacity_min) {
    throw ConfigError("capacity range is invalid");
  }
  if (rides_per_period < 1) throw ConfigError("rides_per_period must be >= 1");
  if (drift_amplitude < 0) throw ConfigError("drift_amplitude must be >= 0");
  if (noise_sigma_km < 0.0) throw ConfigError("noise sigma must be >= 0");
  if (n_periods < 1) throw ConfigError("n_periods must be >= 1");
  if (min_separation_km < 0.0) throw ConfigError("min_separation must be >= 0");
  if (n_bikes < 0 || extra_positions < 0) {
    throw ConfigError("pool sizes must be >= 0");
  }
}

double SynthConfig::effective_separation_km() const {
  if (min_separation_km > 0.0) return min_separation_km;
  return std::max(4.0 * noise_sigma_km, 0.25);
}

std::vector<int> apportion(int total, const std::vector<double>& weights) {
  if (weights.empty()) throw InvalidInputError("apportion needs weights");
  if (total < 0) throw InvalidInputError("apportion total must be >= 0");
  double sum = 0.0;
  for (const double w : weights) {
    if (!(w >= 0.0)) throw InvalidInputError("apportion weights must be >= 0");
    sum += w;
  }
  if (!(sum > 0.0)) throw InvalidInputError("apportion weights all zero");

  const std::size_t n = weights.size();
  std::vector<int> counts(n, 0);
  std::vector<std::pair<double, std::size_t>> rem(n);
  int assigned = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double quota = total * weights[i] / sum;
    counts[i] = static_cast<int>(std::floor(quota));
    assigned += counts[i];
    rem[i] = {quota - std::floor(quota), i};
  }
  std::sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  for (int k = 0; k < total - assigned; ++k) {
    ++counts[rem[static_cast<std::size_t>(k)].second];
  }
  return counts;
}

namespace {

inline double unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline int uniform_int(std::mt19937_64& rng, int lo, int hi) {
  const int span = hi - lo + 1;
  const int v = static_cast<int>(unit(rng) * span);
  return lo + std::min(v, span - 1);
}

// Box-Muller; both values consumed to keep the draw count stable.
inline std::pair<double, double> gaussian_pair(std::mt19937_64& rng) {
  const double u1 = 1.0 - unit(rng);  // (0, 1]
  const double u2 = unit(rng);
  const double m = std::sqrt(-2.0 * std::log(u1));
  return {m * std::cos(2.0 * std::numbers::pi * u2),
          m * std::sin(2.0 * std::numbers::pi * u2)};
}

// Snaps a coordinate to its 6-decimal CSV form so emitted text and recorded
// ground truth agree bitwise after re-ingestion.
double snap6(double v) {
  char buf[32];
  const int len = std::snprintf(buf, sizeof(buf), "%.6f", v);
  double out = 0.0;
  std::from_chars(buf, buf + len, out);
  return out;
}

GeoPoint jitter(const GeoPoint& center, double sigma_km,
                std::mt19937_64& rng) {
  if (sigma_km == 0.0) {
    return {snap6(center.latitude), snap6(center.longitude)};
  }
  const auto [z0, z1] = gaussian_pair(rng);
  const double dlat = z0 * sigma_km / kKmPerDegLat;
  const double dlon = z1 * sigma_km /
                      (kKmPerDegLat * std::cos(center.latitude * kDegToRad));
  return {snap6(center.latitude + dlat), snap6(center.longitude + dlon)};
}

struct EndpointKey {
  std::string bike;
  std::uint64_t lat_bits, lon_bits;
  bool operator==(const EndpointKey&) const = default;
};

struct EndpointKeyHash {
  std::size_t operator()(const EndpointKey& k) const {
    std::size_t h = std::hash<std::string>{}(k.bike);
    h ^= std::hash<std::uint64_t>{}(k.lat_bits) + 0x9e3779b97f4a7c15ull +
         (h << 6) + (h >> 2);
    h ^= std::hash<std::uint64_t>{}(k.lon_bits) + 0x9e3779b97f4a7c15ull +
         (h << 6) + (h >> 2);
    return h;
  }
};

int drifted_count(const SynthConfig& cfg, int base, int station, int period) {
  const int sign = station % 2 == 0 ? 1 : -1;
  const int a = cfg.drift_amplitude;
  int v = base;
  switch (cfg.drift) {
    case DriftModel::constant:
      break;
    case DriftModel::alternating:
      v = base + (period % 2 == 0 ? a : -a) * sign;
      break;
    case DriftModel::linear_drift:
      if (cfg.n_periods > 1) {
        v = base + sign * static_cast<int>(std::lround(
                              static_cast<double>(a) * period /
                              (cfg.n_periods - 1)));
      }
      break;
    case DriftModel::weekly_periodic:
      v = base + sign * static_cast<int>(std::lround(
                            a * std::sin(2.0 * std::numbers::pi *
                                         (period % 7) / 7.0)));
      break;
  }
  return std::max(0, v);
}

void append_csv(std::string& out, const char* fmt, auto... args) {
  char buf[256];
  const int len = std::snprintf(buf, sizeof(buf), fmt, args...);
  out.append(buf, static_cast<std::size_t>(len));
}

}  // namespace

SynthOutput generate_synthetic_city(const SynthConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.rng_seed);

  SynthOutput out;
  out.region_id = "synth";
  GroundTruth& truth = out.truth;
  truth.granularity = config.granularity;

  // Plant stations with a minimum pairwise separation.
  const double sep = config.effective_separation_km();
  std::vector<GeoPoint> centers;
  centers.reserve(static_cast<std::size_t>(config.n_stations));
  const long max_attempts = 2000L * config.n_stations;
  long attempts = 0;
  while (centers.size() < static_cast<std::size_t>(config.n_stations)) {
    if (++attempts > max_attempts) {
      throw ConfigError(
          "cannot place stations with the requested separation; "
          "enlarge the box or reduce n_stations");
    }
    GeoPoint p{config.lat_min + unit(rng) * (config.lat_max - config.lat_min),
               config.lon_min + unit(rng) * (config.lon_max - config.lon_min)};
    p = {snap6(p.latitude), snap6(p.longitude)};
    bool ok = true;
    for (const auto& c : centers) {
      if (haversine_distance(p, c) < sep) {
        ok = false;
        break;
      }
    }
    if (ok) centers.push_back(p);
  }

  std::vector<double> weights;
  for (int s = 0; s < config.n_stations; ++s) {
    PlantedStation st;
    st.id = "t" + std::to_string(s);
    st.location = centers[static_cast<std::size_t>(s)];
    st.capacity = uniform_int(rng, config.capacity_min, config.capacity_max);
    weights.push_back(static_cast<double>(st.capacity));
    truth.stations.push_back(std::move(st));
  }
  const std::vector<int> base = apportion(config.rides_per_period, weights);

  // Legal positions: one near each station plus scattered extras.
  const int extras =
      config.extra_positions > 0 ? config.extra_positions : config.n_stations / 2;
  std::string& positions_csv = out.legal_positions_csv;
  positions_csv = "position_id,lat,lon,capacity\n";
  int position_no = 0;
  auto emit_position = [&](const GeoPoint& loc, int capacity) {
    append_csv(positions_csv, "p%04d,%.6f,%.6f,%d\n", position_no++,
               loc.latitude, loc.longitude, capacity);
  };
  for (int s = 0; s < config.n_stations; ++s) {
    const auto& st = truth.stations[static_cast<std::size_t>(s)];
    const double ang = 2.0 * std::numbers::pi * unit(rng);
    const double r_km = 0.03 * unit(rng);
    GeoPoint loc{
        st.location.latitude + r_km * std::sin(ang) / kKmPerDegLat,
        st.location.longitude +
            r_km * std::cos(ang) /
                (kKmPerDegLat * std::cos(st.location.latitude * kDegToRad))};
    emit_position({snap6(loc.latitude), snap6(loc.longitude)},
                  st.capacity + uniform_int(rng, 0, 10));
  }
  for (int e = 0; e < extras; ++e) {
    GeoPoint loc{config.lat_min + unit(rng) * (config.lat_max - config.lat_min),
                 config.lon_min + unit(rng) * (config.lon_max - config.lon_min)};
    emit_position({snap6(loc.latitude), snap6(loc.longitude)},
                  uniform_int(rng, config.capacity_min, config.capacity_max));
  }

  // Region polygon: the box padded generously so noisy endpoints stay inside.
  {
    const double pad_lat = 12.0 * config.noise_sigma_km / kKmPerDegLat + 1e-4;
    const double pad_lon =
        12.0 * config.noise_sigma_km /
            (kKmPerDegLat * std::cos(config.lat_min * kDegToRad)) +
        1e-4;
    const double a = config.lat_min - pad_lat, b = config.lat_max + pad_lat;
    const double c = config.lon_min - pad_lon, d = config.lon_max + pad_lon;
    char buf[512];
    std::snprintf(buf, sizeof(buf),
                  "[{\"region_id\":\"synth\",\"polygon\":[[%.6f,%.6f],[%.6f,"
                  "%.6f],[%.6f,%.6f],[%.6f,%.6f]]}]\n",
                  a, c, a, d, b, d, b, c);
    out.regions_json = buf;
  }

  const std::int64_t period_len = period_length_seconds(config.granularity);
  truth.first_period_index =
      period_index_for(config.start_epoch, config.granularity);
  const int n_bikes =
      config.n_bikes > 0
          ? config.n_bikes
          : std::max(50, config.rides_per_period / 10);
  const int n_users = 2 * n_bikes;

  std::unordered_map<EndpointKey, int, EndpointKeyHash> label_of;
  auto record_point = [&](const std::string& bike, const GeoPoint& loc,
                          int station) {
    EndpointKey key{bike, std::bit_cast<std::uint64_t>(loc.latitude),
                    std::bit_cast<std::uint64_t>(loc.longitude)};
    if (label_of.emplace(std::move(key), station).second) {
      truth.points.push_back({bike, loc, station});
    }
  };

  struct Ride {
    std::int64_t depart_ts, arrive_ts;
    GeoPoint depart, arrive;
    int origin, dest;
    int user, bike;
    int seq;
  };

  std::string& csv = out.trajectory_csv;
  csv = "user_id,bike_id,depart_ts,depart_lat,depart_lon,arrive_ts,arrive_lat,"
        "arrive_lon\n";

  int ride_counter = 0;
  for (int t = 0; t < config.n_periods; ++t) {
    std::vector<int> counts(static_cast<std::size_t>(config.n_stations));
    for (int s = 0; s < config.n_stations; ++s) {
      counts[static_cast<std::size_t>(s)] =
          drifted_count(config, base[static_cast<std::size_t>(s)], s, t);
    }
    truth.period_counts.push_back(counts);
    truth.od.emplace_back(
        config.n_stations, std::vector<int>(config.n_stations, 0));
    auto& od = truth.od.back();

    const std::int64_t p_start = config.start_epoch + t * period_len;
    std::vector<Ride> rides;
    for (int dest = 0; dest < config.n_stations; ++dest) {
      for (int k = 0; k < counts[static_cast<std::size_t>(dest)]; ++k) {
        const int origin = uniform_int(rng, 0, config.n_stations - 1);
        ++od[static_cast<std::size_t>(origin)][static_cast<std::size_t>(dest)];
        Ride r;
        r.origin = origin;
        r.dest = dest;
        r.seq = ride_counter++;
        r.user = uniform_int(rng, 0, n_users - 1);
        r.bike = r.seq % n_bikes;
        r.depart = jitter(truth.stations[origin].location,
                          config.noise_sigma_km, rng);
        r.arrive = jitter(truth.stations[dest].location,
                          config.noise_sigma_km, rng);
        const double dist = haversine_distance(r.depart, r.arrive);
        const auto duration = static_cast<std::int64_t>(
            60 + dist * 300.0 + unit(rng) * 240.0);
        r.depart_ts =
            p_start + static_cast<std::int64_t>(
                          unit(rng) * static_cast<double>(period_len - 1));
        r.arrive_ts = r.depart_ts + duration;
        rides.push_back(r);
      }
    }
    std::sort(rides.begin(), rides.end(), [](const Ride& a, const Ride& b) {
      if (a.depart_ts != b.depart_ts) return a.depart_ts < b.depart_ts;
      return a.seq < b.seq;
    });
    // Labels follow emission order (pickup before dropoff, rides by depart
    // time) so keep-first matches the ingest deduplication exactly.
    for (const auto& r : rides) {
      const std::string bike = "b" + std::to_string(r.bike);
      append_csv(csv, "u%d,%s,%s,%.6f,%.6f,%s,%.6f,%.6f\n", r.user,
                 bike.c_str(), format_timestamp(r.depart_ts).c_str(),
                 r.depart.latitude, r.depart.longitude,
                 format_timestamp(r.arrive_ts).c_str(), r.arrive.latitude,
                 r.arrive.longitude);
      record_point(bike, r.depart, r.origin);
      record_point(bike, r.arrive, r.dest);
    }
  }

  return out;
}

}  // namespace bsdp
