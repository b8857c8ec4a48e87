#include <doctest.h>

#include <random>
#include <string>
#include <vector>

#include "bsdp/cluster.hpp"
#include "bsdp/error.hpp"
#include "bsdp/ingest.hpp"
#include "bsdp/metric.hpp"
#include "oracles.hpp"

using bsdp::GeoPoint;

namespace {

std::vector<GeoPoint> random_points(std::mt19937_64& rng, std::size_t n,
                                    double spread_deg = 0.02) {
  std::vector<GeoPoint> pts;
  pts.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    pts.push_back({39.9 + oracle::uniform(rng, -spread_deg, spread_deg),
                   116.4 + oracle::uniform(rng, -spread_deg, spread_deg)});
  }
  return pts;
}

bsdp::PositionSet as_positions(const std::vector<GeoPoint>& pts) {
  bsdp::PositionSet set;
  set.points.reserve(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    set.points.push_back({"b" + std::to_string(i), pts[i],
                          static_cast<std::int64_t>(i),
                          bsdp::PositionKind::dropoff});
  }
  set.source_count = pts.size();
  return set;
}

void check_matches_brute(const std::vector<GeoPoint>& pts,
                         const bsdp::ClusterParams& params) {
  bsdp::HaversineMetric metric;
  const bsdp::ClusterSet got =
      bsdp::cluster_drop_offs(as_positions(pts), params, metric);
  const oracle::BruteClusters want = oracle::brute_cluster(pts, params);

  REQUIRE(got.size() == pts.size());
  CHECK(got.rho == want.rho);
  CHECK(got.delta == want.delta);
  CHECK(got.label == want.label);
  CHECK(got.centers == want.centers);
  CHECK(got.theta_rho == want.theta_rho);
  CHECK(got.theta_delta == want.theta_delta);
  CHECK(got.no_centers == want.no_centers);
}

}  // namespace

TEST_CASE("density and delta match the naive definitions") {
  std::mt19937_64 rng(1101);
  const auto pts = random_points(rng, 150);
  bsdp::HaversineMetric metric;
  const auto got = bsdp::compute_density_delta(pts, 0.1, metric);

  bsdp::ClusterParams params;
  const auto want = oracle::brute_cluster(pts, params);
  CHECK(got.rho == want.rho);
  CHECK(got.delta == want.delta);
  CHECK(got.nearest_higher == want.nearest_higher);
}

TEST_CASE("clustering equals brute force on seeded instances") {
  std::mt19937_64 rng(1102);
  for (int trial = 0; trial < 12; ++trial) {
    const std::size_t n = 20 + static_cast<std::size_t>(rng() % 120);
    const auto pts = random_points(rng, n, trial % 2 == 0 ? 0.02 : 0.004);
    bsdp::ClusterParams params;
    params.cutoff_distance_km = trial % 3 == 0 ? 0.05 : 0.1;
    check_matches_brute(pts, params);
  }
}

TEST_CASE("clustering equals brute force with duplicate coordinates") {
  std::mt19937_64 rng(1103);
  auto pts = random_points(rng, 60, 0.005);
  for (int i = 0; i < 20; ++i) {
    pts.push_back(pts[static_cast<std::size_t>(rng() % 60)]);
  }
  check_matches_brute(pts, bsdp::ClusterParams{});
}

TEST_CASE("clustering equals brute force when the grid prefilter is unsound") {
  std::mt19937_64 rng(1104);
  std::vector<GeoPoint> pts;
  // Near-polar band where the longitude cell bound collapses.
  for (int i = 0; i < 40; ++i) {
    pts.push_back({88.0 + oracle::uniform(rng, 0.0, 0.01),
                   oracle::uniform(rng, -179.9, 179.9)});
  }
  check_matches_brute(pts, bsdp::ClusterParams{});
}

TEST_CASE("two planted sites resolve into two clusters") {
  std::mt19937_64 rng(1105);
  std::vector<GeoPoint> pts;
  for (int i = 0; i < 30; ++i) {
    pts.push_back({39.90 + oracle::uniform(rng, -1e-4, 1e-4),
                   116.40 + oracle::uniform(rng, -1e-4, 1e-4)});
  }
  for (int i = 0; i < 30; ++i) {
    pts.push_back({39.93 + oracle::uniform(rng, -1e-4, 1e-4),
                   116.43 + oracle::uniform(rng, -1e-4, 1e-4)});
  }
  bsdp::HaversineMetric metric;
  const auto set =
      bsdp::cluster_drop_offs(as_positions(pts), bsdp::ClusterParams{}, metric);
  REQUIRE(set.cluster_count() == 2);
  for (std::size_t i = 0; i < 30; ++i) {
    CHECK(set.label[i] == set.label[0]);
    CHECK(set.label[30 + i] == set.label[30]);
  }
  CHECK(set.label[0] != set.label[30]);
  CHECK_FALSE(set.no_centers);
}

TEST_CASE("clusters below the minimum size dissolve into outliers") {
  std::vector<GeoPoint> pts;
  for (int i = 0; i < 3; ++i) pts.push_back({39.90 + i * 1e-5, 116.40});
  for (int i = 0; i < 3; ++i) pts.push_back({39.95 + i * 1e-5, 116.45});
  bsdp::HaversineMetric metric;
  const auto set =
      bsdp::cluster_drop_offs(as_positions(pts), bsdp::ClusterParams{}, metric);
  CHECK(set.cluster_count() == 0);
  CHECK(set.no_centers);
  for (const int label : set.label) CHECK(label == bsdp::kOutlier);
  check_matches_brute(pts, bsdp::ClusterParams{});
}

TEST_CASE("a single point is an outlier with no centers") {
  const std::vector<GeoPoint> pts{{39.9, 116.4}};
  bsdp::HaversineMetric metric;
  const auto set =
      bsdp::cluster_drop_offs(as_positions(pts), bsdp::ClusterParams{}, metric);
  CHECK(set.no_centers);
  CHECK(set.label == std::vector<int>{bsdp::kOutlier});
}

TEST_CASE("cluster parameters are validated") {
  bsdp::HaversineMetric metric;
  const auto pts = as_positions({{39.9, 116.4}});

  bsdp::ClusterParams bad = {};
  bad.cutoff_distance_km = 0.0;
  CHECK_THROWS_AS(bsdp::cluster_drop_offs(pts, bad, metric),
                  bsdp::ConfigError);

  bad = {};
  bad.rho_fraction = 1.5;
  CHECK_THROWS_AS(bsdp::cluster_drop_offs(pts, bad, metric),
                  bsdp::ConfigError);

  bad = {};
  bad.min_station_size = 0;
  CHECK_THROWS_AS(bsdp::cluster_drop_offs(pts, bad, metric),
                  bsdp::ConfigError);

  CHECK_THROWS_AS(
      bsdp::cluster_drop_offs(bsdp::PositionSet{}, bsdp::ClusterParams{},
                              metric),
      bsdp::InvalidInputError);
}
