#include <doctest.h>

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "bsdp/error.hpp"
#include "bsdp/graph_sequence.hpp"
#include "bsdp/grid_codec.hpp"
#include "bsdp/station_graph.hpp"

using bsdp::GeoPoint;
using bsdp::GridCodec;
using bsdp::Station;
using bsdp::StationGraph;

namespace {

StationGraph vertices_at(const std::vector<std::pair<GeoPoint, int>>& wanted) {
  std::vector<Station> vs;
  for (std::size_t i = 0; i < wanted.size(); ++i) {
    vs.push_back({"s" + std::to_string(i), wanted[i].first, wanted[i].second,
                  bsdp::classify_station_level(wanted[i].second)});
  }
  return StationGraph::vertices_only(std::move(vs));
}

}  // namespace

TEST_CASE("codec fit covers every vertex and rounds the cap") {
  const auto g0 = vertices_at({{{39.90, 116.40}, 12}, {{39.95, 116.48}, 7}});
  const auto g1 = vertices_at({{{39.92, 116.44}, 23}});
  const std::vector<StationGraph> graphs{g0, g1};

  const GridCodec codec = bsdp::fit_grid_codec(graphs);
  CHECK(codec.rows == 16);
  CHECK(codec.cols == 16);
  CHECK(codec.dimension() == 256);
  CHECK(codec.lat_min <= 39.90);
  CHECK(codec.lat_max >= 39.95);
  CHECK(codec.lon_min <= 116.40);
  CHECK(codec.lon_max >= 116.48);
  // Largest per-cell total is 23, rounded up to a multiple of 10.
  CHECK(codec.cap_max == 30.0);
  for (const auto& g : graphs) {
    for (const auto& v : g.vertices()) CHECK(codec.contains(v.location));
  }
}

TEST_CASE("encoding normalizes per-cell totals and decoding inverts it") {
  const auto g = vertices_at({{{39.90, 116.40}, 12},
                              {{39.9001, 116.4001}, 11},
                              {{39.95, 116.48}, 7}});
  const GridCodec codec = bsdp::fit_grid_codec({&g, 1});
  const auto y = bsdp::encode_graph(g, codec);
  REQUIRE(static_cast<int>(y.size()) == codec.dimension());

  double sum = 0.0;
  int nonzero = 0;
  for (const double v : y) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
    sum += v;
    if (v > 0.0) ++nonzero;
  }
  // The two nearby stations share one cell: 23/30; the third gives 7/30.
  CHECK(nonzero == 2);
  CHECK(sum == doctest::Approx(30.0 / 30.0));

  const StationGraph decoded = bsdp::decode_prediction(y, codec);
  REQUIRE(decoded.size() == 2);
  CHECK(decoded.vertices()[0].bike_count + decoded.vertices()[1].bike_count ==
        30);
  CHECK(decoded.edges().empty());
  for (const auto& v : decoded.vertices()) {
    CHECK(v.station_id.starts_with("c"));
    CHECK(codec.contains(v.location));
  }
}

TEST_CASE("cells below the station floor decode to nothing") {
  const auto g = vertices_at({{{39.90, 116.40}, 40}});
  GridCodec codec = bsdp::fit_grid_codec({&g, 1});
  std::vector<double> y(static_cast<std::size_t>(codec.dimension()), 0.0);
  y[0] = 4.4 / codec.cap_max;  // rounds to 4, below the floor of 5
  CHECK(bsdp::decode_prediction(y, codec).empty());
  y[0] = 4.6 / codec.cap_max;  // rounds to 5
  CHECK(bsdp::decode_prediction(y, codec).size() == 1);

  std::vector<double> bad = y;
  bad[3] = std::nan("");
  CHECK_THROWS_AS(bsdp::decode_prediction(bad, codec), bsdp::NumericalError);
}

TEST_CASE("historical centroids anchor decoded stations") {
  const auto g = vertices_at({{{39.9030, 116.4040}, 20}});
  const GridCodec codec = bsdp::fit_grid_codec({&g, 1});
  const auto y = bsdp::encode_graph(g, codec);
  const StationGraph decoded = bsdp::decode_prediction(y, codec);
  REQUIRE(decoded.size() == 1);
  // With one station the centroid is the station itself.
  CHECK(decoded.vertices()[0].location.latitude ==
        doctest::Approx(39.9030).epsilon(1e-9));
  CHECK(decoded.vertices()[0].location.longitude ==
        doctest::Approx(116.4040).epsilon(1e-9));

  GridCodec centers = codec;
  centers.anchor_policy = bsdp::CellAnchorPolicy::cell_center;
  const StationGraph at_center = bsdp::decode_prediction(y, centers);
  REQUIRE(at_center.size() == 1);
  const GeoPoint want =
      centers.cell_center(centers.cell_of({39.9030, 116.4040}));
  CHECK(at_center.vertices()[0].location.latitude == want.latitude);
  CHECK(at_center.vertices()[0].location.longitude == want.longitude);
}

TEST_CASE("degenerate extents are padded") {
  const auto g = vertices_at({{{39.90, 116.40}, 8}});
  const GridCodec codec = bsdp::fit_grid_codec({&g, 1});
  CHECK(codec.lat_max > codec.lat_min);
  CHECK(codec.lon_max > codec.lon_min);
  CHECK(codec.contains({39.90, 116.40}));
  CHECK_NOTHROW(codec.validate());
}

TEST_CASE("fitting with no vertices anywhere fails") {
  const std::vector<StationGraph> graphs{StationGraph{}, StationGraph{}};
  CHECK_THROWS_AS(bsdp::fit_grid_codec(graphs), bsdp::InvalidInputError);
}

TEST_CASE("points outside the box are rejected by cell_of") {
  const auto g = vertices_at({{{39.90, 116.40}, 8}, {{39.95, 116.45}, 9}});
  const GridCodec codec = bsdp::fit_grid_codec({&g, 1});
  CHECK_FALSE(codec.contains({10.0, 10.0}));
  CHECK_THROWS_AS(codec.cell_of({10.0, 10.0}), bsdp::InvalidInputError);
  // Box edges clamp into the outermost cells.
  CHECK(codec.cell_of({codec.lat_max, codec.lon_max}) ==
        codec.dimension() - 1);
  CHECK(codec.cell_of({codec.lat_min, codec.lon_min}) == 0);
}

TEST_CASE("graph sequences are dense over the period range") {
  std::map<std::int64_t, StationGraph> by_period;
  by_period[100] = vertices_at({{{39.90, 116.40}, 12}});
  by_period[103] = vertices_at({{{39.91, 116.41}, 15}});

  const auto gs = bsdp::build_graph_sequence(by_period, "west",
                                             bsdp::Granularity::week, {});
  CHECK(gs.region_id == "west");
  CHECK(gs.first_period == 100);
  REQUIRE(gs.size() == 4);
  CHECK(gs.period_of(0) == 100);
  CHECK(gs.period_of(3) == 103);
  CHECK(gs.graphs[1].empty());
  CHECK(gs.graphs[2].empty());
  CHECK(gs.missing_periods == std::vector<std::int64_t>{101, 102});
  CHECK(gs.codec.cap_max >= 15.0);

  std::map<std::int64_t, StationGraph> single;
  single[5] = vertices_at({{{39.90, 116.40}, 12}});
  CHECK_THROWS_AS(
      bsdp::build_graph_sequence(single, "west", bsdp::Granularity::week, {}),
      bsdp::InvalidInputError);
}
