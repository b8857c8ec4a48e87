#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bsdp/geo.hpp"
#include "bsdp/ingest.hpp"

namespace bsdp {

enum class DriftModel { constant, alternating, linear_drift, weekly_periodic };

std::string_view to_string(DriftModel model);
DriftModel drift_model_from_string(std::string_view text);

struct SynthConfig {
  std::uint64_t rng_seed = 1;
  double lat_min = 39.80, lat_max = 39.95;
  double lon_min = 116.30, lon_max = 116.50;
  int n_stations = 30;
  int capacity_min = 10, capacity_max = 40;
  int rides_per_period = 2000;
  DriftModel drift = DriftModel::constant;
  int drift_amplitude = 0;  // bikes added/removed per station by the drift
  double noise_sigma_km = 0.02;
  int n_periods = 8;
  Granularity granularity = Granularity::week;
  std::int64_t start_epoch = 1538352000;  // 2018-10-01 00:00:00 UTC, a Monday
  double min_separation_km = 0.0;         // 0 = max(4 sigma, 0.25)
  int n_bikes = 0;                        // 0 = auto from ride volume
  int extra_positions = 0;                // 0 = n_stations / 2

  void validate() const;
  double effective_separation_km() const;
};

struct PlantedStation {
  std::string id;
  GeoPoint location;
  int capacity = 0;
};

// Endpoint label after coordinate rounding, keyed like the ingest
// deduplication (first occurrence wins).
struct LabeledPoint {
  std::string bike_id;
  GeoPoint location;
  int station = 0;
};

struct GroundTruth {
  std::vector<PlantedStation> stations;
  std::int64_t first_period_index = 0;
  Granularity granularity = Granularity::week;
  // [period][station] planted drop-off counts, the drifting demand signal.
  std::vector<std::vector<int>> period_counts;
  // [period][origin][destination] ride counts.
  std::vector<std::vector<std::vector<int>>> od;
  std::vector<LabeledPoint> points;
};

struct SynthOutput {
  std::string region_id;
  std::string trajectory_csv;
  std::string legal_positions_csv;
  std::string regions_json;
  GroundTruth truth;
};

// Deterministic given the seed, byte for byte.
SynthOutput generate_synthetic_city(const SynthConfig& config);

// Largest-remainder apportioning of `total` over non-negative weights;
// deterministic, exact sum. Exposed for the generator's oracle tests.
std::vector<int> apportion(int total, const std::vector<double>& weights);

}  // namespace bsdp
