// End-to-end acceptance gate. Each criterion prints one PASS/FAIL line;
// the process exits nonzero if any criterion fails. Tolerances and time
// limits are pinned here on purpose: loosening them is a contract change,
// not a test fix.

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <random>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "bsdp/cluster.hpp"
#include "bsdp/eval.hpp"
#include "bsdp/geo.hpp"
#include "bsdp/gru.hpp"
#include "bsdp/ingest.hpp"
#include "bsdp/json_io.hpp"
#include "bsdp/metric.hpp"
#include "bsdp/pipeline.hpp"
#include "bsdp/recommend.hpp"
#include "bsdp/station_graph.hpp"
#include "bsdp/synth.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

int g_failed = 0;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void report(int criterion, bool ok, const std::string& text) {
  std::printf("[%s] criterion %d: %s\n", ok ? "PASS" : "FAIL", criterion,
              text.c_str());
  std::fflush(stdout);
  if (!ok) ++g_failed;
}

std::string timed(const std::string& text, double elapsed, double limit) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), " (%.2f s, limit %.0f s)", elapsed, limit);
  return text + buf;
}

template <typename Fn>
void criterion(int n, Fn&& body) {
  try {
    body();
  } catch (const std::exception& e) {
    report(n, false, std::string("threw ") + e.what());
  }
}

// --- criterion 1: haversine vs independent great-circle oracle ------------

void criterion_1() {
  const auto start = Clock::now();
  const double limit = 1.0;

  std::mt19937_64 rng(20260825);
  double worst = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const bsdp::GeoPoint a{oracle::uniform(rng, -85.0, 85.0),
                           oracle::uniform(rng, -180.0, 180.0)};
    const bsdp::GeoPoint b{oracle::uniform(rng, -85.0, 85.0),
                           oracle::uniform(rng, -180.0, 180.0)};
    const double got = bsdp::haversine_distance(a, b);
    const double want = oracle::great_circle_km(a, b);
    worst = std::max(worst, std::abs(got - want) / std::max(std::abs(want), 1.0));
  }

  // Known Beijing ride, four kilometres and change.
  const double ride = bsdp::haversine_distance({39.914548, 116.440848},
                                               {39.900323, 116.484110});
  const bool ride_ok = std::abs(ride - 4.0147802724063718) < 1e-9 &&
                       std::abs(ride - 4.0) < 0.05;

  const double elapsed = seconds_since(start);
  const bool ok = worst <= 1e-6 && ride_ok && elapsed < limit;
  std::ostringstream what;
  what << "haversine matches the oracle on 1000 pairs (max rel err " << worst
       << "), reference ride " << ride << " km";
  report(1, ok, timed(what.str(), elapsed, limit));
}

// --- criterion 2: clustering equals brute force ---------------------------

void criterion_2() {
  const auto start = Clock::now();
  const double limit = 10.0;

  const double cutoffs[] = {0.05, 0.1, 0.2};
  const int min_sizes[] = {2, 3, 5};
  std::size_t checked = 0;
  std::string failure;

  for (int t = 0; t < 50 && failure.empty(); ++t) {
    std::mt19937_64 rng(5200 + t);
    const std::size_t n = 5 + rng() % 196;
    const double spread = oracle::uniform(rng, 0.002, 0.05);

    std::vector<bsdp::GeoPoint> pts(n);
    bsdp::PositionSet positions;
    positions.source_count = n;
    for (std::size_t i = 0; i < n; ++i) {
      pts[i] = {39.9 + oracle::uniform(rng, -spread, spread),
                116.4 + oracle::uniform(rng, -spread, spread)};
      positions.points.push_back({"b" + std::to_string(i), pts[i],
                                  static_cast<std::int64_t>(i),
                                  bsdp::PositionKind::dropoff});
    }

    bsdp::ClusterParams params;
    params.cutoff_distance_km = cutoffs[t % 3];
    params.min_station_size = min_sizes[t % 3];

    const auto want = oracle::brute_cluster(pts, params);
    bsdp::HaversineMetric metric;
    const auto got = bsdp::cluster_drop_offs(positions, params, metric);

    if (got.label != want.label || got.centers != want.centers ||
        got.no_centers != want.no_centers) {
      failure = "instance " + std::to_string(t) + " diverges from brute force";
    }
    ++checked;
  }

  const double elapsed = seconds_since(start);
  const bool ok = failure.empty() && checked == 50 && elapsed < limit;
  report(2, ok,
         timed(failure.empty()
                   ? "labels equal brute-force clustering on 50 instances"
                   : failure,
               elapsed, limit));
}

// --- criterion 3: planted-cluster recovery --------------------------------

void criterion_3() {
  const auto start = Clock::now();
  const double limit = 30.0;

  const auto recover = [](double sigma) {
    bsdp::SynthConfig sc;
    sc.rng_seed = 97;
    sc.n_stations = 30;
    sc.capacity_min = 20;
    sc.capacity_max = 20;
    sc.rides_per_period = 2500;
    sc.n_periods = 2;
    sc.noise_sigma_km = sigma;
    sc.min_separation_km = 1.0;
    const auto out = bsdp::generate_synthetic_city(sc);

    std::istringstream csv(out.trajectory_csv);
    const auto parsed = bsdp::parse_trajectory_csv(csv, true);
    auto positions = bsdp::extract_positions(parsed.records);

    std::vector<int> truth;
    truth.reserve(out.truth.points.size());
    for (const auto& p : out.truth.points) truth.push_back(p.station);

    bsdp::ClusterParams params;
    params.delta_fraction = 0.05;  // the default third over-merges planted sites
    bsdp::HaversineMetric metric;
    const auto n_points = positions.points.size();
    const auto cs = bsdp::cluster_drop_offs(std::move(positions), params, metric);
    return std::tuple{n_points, bsdp::pairwise_comembership_auc(cs.label, truth)};
  };

  const auto [noisy_points, noisy_auc] = recover(0.02);
  const auto [exact_points, exact_auc] = recover(0.0);

  const double elapsed = seconds_since(start);
  const bool ok = noisy_points == 10000 && noisy_auc >= 0.95 &&
                  exact_auc == 1.0 && elapsed < limit;
  std::ostringstream what;
  what << "co-membership AUC " << noisy_auc << " on " << noisy_points
       << " noisy points (>= 0.95), " << exact_auc << " on " << exact_points
       << " noise-free points (= 1.0)";
  report(3, ok, timed(what.str(), elapsed, limit));
}

// --- criterion 4: graph identities and pruning oracle ---------------------

bsdp::StationGraph random_graph(std::mt19937_64& rng) {
  const std::size_t n = 3 + rng() % 30;
  std::vector<bsdp::Station> stations(n);
  for (std::size_t i = 0; i < n; ++i) {
    char id[8];
    std::snprintf(id, sizeof(id), "s%02zu", i);
    stations[i].station_id = id;
    stations[i].location = {oracle::uniform(rng, 39.80, 39.95),
                            oracle::uniform(rng, 116.30, 116.50)};
    stations[i].bike_count = 5 + static_cast<int>(rng() % 36);
    stations[i].level = bsdp::classify_station_level(stations[i].bike_count);
  }
  std::vector<std::int64_t> w(n * n, 0);
  for (auto& entry : w) {
    if (rng() % 2 == 0) entry = static_cast<std::int64_t>(rng() % 8);
  }
  w[0] += 1;  // keep the graph non-idle
  std::vector<double> d(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double km =
          bsdp::haversine_distance(stations[i].location, stations[j].location);
      d[i * n + j] = km;
      d[j * n + i] = km;
    }
  }
  return bsdp::StationGraph(std::move(stations), std::move(w), std::move(d));
}

void criterion_4() {
  std::string failure;

  for (int t = 0; t < 100 && failure.empty(); ++t) {
    std::mt19937_64 rng(9100 + t);
    const auto g = random_graph(rng);
    const std::size_t n = g.size();

    long double utility_sum = 0.0L;
    std::int64_t throughput_sum = 0;
    for (std::size_t i = 0; i < n; ++i) {
      utility_sum += static_cast<long double>(bsdp::station_utility(g, i));
      throughput_sum += g.out_weight(i) + g.in_weight(i);
    }
    if (std::abs(static_cast<double>(utility_sum) - 1.0) > 1e-12) {
      failure = "utility sum off by " +
                std::to_string(static_cast<double>(utility_sum) - 1.0);
      break;
    }
    if (throughput_sum != 2 * g.total_rides()) {
      failure = "throughput sum != 2 * total rides";
      break;
    }

    const double alpha = oracle::uniform(rng, 0.5, 2.0);
    double max_revenue = 0.0;
    std::vector<double> revenue(n), utility(n);
    for (std::size_t i = 0; i < n; ++i) {
      revenue[i] = bsdp::station_revenue(g, i, alpha);
      utility[i] = bsdp::station_utility(g, i);
      max_revenue = std::max(max_revenue, revenue[i]);
    }
    const double theta_p = oracle::uniform(rng, 0.0, 1.2 * max_revenue);
    const double theta_u = oracle::uniform(rng, 0.0, 2.0 / static_cast<double>(n));

    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < n; ++i) {
      if (!(revenue[i] < theta_p && utility[i] < theta_u)) keep.push_back(i);
    }

    const auto pruned = bsdp::remove_inferior(g, theta_p, theta_u, alpha);
    if (pruned.size() != keep.size()) {
      failure = "pruned size mismatch on graph " + std::to_string(t);
      break;
    }
    for (std::size_t a = 0; a < keep.size(); ++a) {
      if (pruned.vertices()[a].station_id != g.vertices()[keep[a]].station_id) {
        failure = "pruned vertex order mismatch";
      }
      for (std::size_t b = 0; b < keep.size(); ++b) {
        if (pruned.weight(a, b) != g.weight(keep[a], keep[b]) ||
            pruned.distance(a, b) != g.distance(keep[a], keep[b])) {
          failure = "pruned matrix entries differ from brute-force filter";
        }
      }
    }
  }

  report(4, failure.empty(),
         failure.empty()
             ? "utility sums to 1, throughput doubles total rides, pruning "
               "equals brute-force filter on 100 graphs"
             : failure);
}

// --- criterion 5: gradients vs central finite differences -----------------

void criterion_5() {
  const auto start = Clock::now();
  const double limit = 10.0;

  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    std::mt19937_64 rng(7700 + t);
    const auto model =
        bsdp::GruModel::random_init(4, 3, 7700 + static_cast<std::uint64_t>(t),
                                    oracle::uniform(rng, 0.2, 0.8));
    std::vector<bsdp::Vector> inputs(3), targets(3);
    for (int s = 0; s < 3; ++s) {
      inputs[s] = bsdp::Vector(4);
      targets[s] = bsdp::Vector(4);
      for (int d = 0; d < 4; ++d) {
        inputs[s](d) = oracle::uniform(rng, -1.0, 1.0);
        targets[s](d) = oracle::uniform(rng, 0.1, 0.9);
      }
    }
    worst = std::max(worst, oracle::max_gradient_rel_err(model, inputs, targets));
  }

  const double elapsed = seconds_since(start);
  const bool ok = worst < 1e-4 && elapsed < limit;
  std::ostringstream what;
  what << "20 models, worst gradient rel err " << worst << " (< 1e-4)";
  report(5, ok, timed(what.str(), elapsed, limit));
}

// --- criterion 6: learning sanity -----------------------------------------

void criterion_6() {
  const auto start = Clock::now();
  const double limit = 60.0;
  constexpr int kDim = 256;

  bsdp::TrainConfig tc;
  tc.epochs = 200;
  tc.learning_rate = 0.05;
  tc.hidden_dim = 32;
  tc.rng_seed = 7;
  tc.init_scale = 0.1;
  tc.gradient_clip = 0.0;

  std::mt19937_64 rng(606);
  bsdp::Vector target(kDim);
  for (int d = 0; d < kDim; ++d) target(d) = oracle::uniform(rng, 0.1, 0.9);
  const std::vector<bsdp::Vector> constant(40, target);

  const auto trained = bsdp::train_sequence(constant, tc);
  const double first = trained.epoch_loss.front();
  const double last = trained.epoch_loss.back();
  const auto pred = bsdp::predict_next_vector(trained.model, constant);
  const double cell_err = (pred - target).cwiseAbs().maxCoeff();

  bsdp::Vector a(kDim), b(kDim);
  for (int d = 0; d < kDim; ++d) {
    a(d) = oracle::uniform(rng, 0.1, 0.9);
    b(d) = oracle::uniform(rng, 0.1, 0.9);
  }
  std::vector<bsdp::Vector> alternating(40);
  for (int s = 0; s < 40; ++s) alternating[s] = (s % 2 == 0) ? a : b;

  const std::span<const bsdp::Vector> seen(alternating.data(), 39);
  const auto alt = bsdp::train_sequence(seen, tc);
  const auto alt_pred = bsdp::predict_next_vector(alt.model, seen);
  const auto rmse_to_final = [&](const bsdp::Vector& v) {
    return bsdp::vector_rmse(
        std::span<const double>(v.data(), static_cast<std::size_t>(v.size())),
        std::span<const double>(alternating[39].data(), kDim));
  };
  const double model_rmse = rmse_to_final(alt_pred);
  const double persistence_rmse = rmse_to_final(alternating[38]);

  const double elapsed = seconds_since(start);
  const bool ok = first > 0.0 && last <= 0.5 * first && cell_err < 0.05 &&
                  model_rmse < persistence_rmse && elapsed < limit;
  std::ostringstream what;
  what << "constant sequence loss " << first << " -> " << last
       << ", max cell err " << cell_err << "; alternating RMSE " << model_rmse
       << " < persistence " << persistence_rmse;
  report(6, ok, timed(what.str(), elapsed, limit));
}

// --- criterion 7: recommendation invariants -------------------------------

void criterion_7() {
  std::string failure;

  for (int t = 0; t < 200 && failure.empty(); ++t) {
    std::mt19937_64 rng(4400 + t);
    const std::size_t n_stations = 1 + rng() % 8;
    std::vector<bsdp::Station> stations(n_stations);
    std::int64_t total_bikes = 0;
    for (std::size_t i = 0; i < n_stations; ++i) {
      stations[i].station_id = "s" + std::to_string(i);
      stations[i].location = {oracle::uniform(rng, 39.88, 39.92),
                              oracle::uniform(rng, 116.38, 116.42)};
      stations[i].bike_count = 1 + static_cast<int>(rng() % 40);
      stations[i].level = bsdp::level_for_count(stations[i].bike_count);
      total_bikes += stations[i].bike_count;
    }
    const auto predicted = bsdp::StationGraph::vertices_only(std::move(stations));

    const std::size_t n_positions = 1 + rng() % 10;
    std::vector<bsdp::LegalPosition> positions(n_positions);
    for (std::size_t i = 0; i < n_positions; ++i) {
      positions[i].position_id = "p" + std::to_string(i);
      positions[i].location = {oracle::uniform(rng, 39.88, 39.92),
                               oracle::uniform(rng, 116.38, 116.42)};
      positions[i].capacity = static_cast<int>(rng() % 31);
      positions[i].remaining = positions[i].capacity;
    }
    const double theta_d = oracle::uniform(rng, 0.05, 1.0);

    const auto rec = bsdp::fine_tune_layout(predicted, positions, theta_d);

    if (rec.placed_total() + rec.unplaced != total_bikes) {
      failure = "bike conservation broken on instance " + std::to_string(t);
      break;
    }
    std::map<std::string, int> load;
    for (const auto& st : rec.stations) {
      const auto pos = std::find_if(
          positions.begin(), positions.end(),
          [&](const auto& p) { return p.position_id == st.position_id; });
      if (pos == positions.end() ||
          st.location.latitude != pos->location.latitude ||
          st.location.longitude != pos->location.longitude) {
        failure = "station not on a legal position (instance " +
                  std::to_string(t) + ")";
        break;
      }
      load[st.position_id] += st.bike_count;
      if (load[st.position_id] > pos->capacity) {
        failure = "position over capacity (instance " + std::to_string(t) + ")";
        break;
      }
    }
    if (!failure.empty()) break;

    auto roomier = positions;
    for (auto& p : roomier) {
      const int extra = 1 + static_cast<int>(rng() % 10);
      p.capacity += extra;
      p.remaining = p.capacity;
    }
    const auto rec2 = bsdp::fine_tune_layout(predicted, roomier, theta_d);
    if (rec2.unplaced > rec.unplaced) {
      failure = "unplaced grew after raising capacities (instance " +
                std::to_string(t) + ")";
    }
  }

  report(7, failure.empty(),
         failure.empty() ? "conservation, legality, capacity, and "
                           "capacity-monotonicity hold on 200 instances"
                         : failure);
}

// --- criterion 8: fold plan covers every subset exactly once --------------

void criterion_8() {
  std::string failure;
  for (std::uint64_t seed : {1ULL, 77ULL, 20260825ULL}) {
    const auto plan = bsdp::kfold_splits(20, 5, seed);
    std::vector<std::size_t> seen;
    for (int fold = 0; fold < 5; ++fold) {
      const auto test = plan.test_indices(fold);
      if (test.size() != 4) failure = "fold sizes unbalanced";
      seen.insert(seen.end(), test.begin(), test.end());
    }
    std::sort(seen.begin(), seen.end());
    for (std::size_t i = 0; i < seen.size(); ++i) {
      if (seen.size() != 20 || seen[i] != i) {
        failure = "subset coverage broken for seed " + std::to_string(seed);
        break;
      }
    }
  }
  report(8, failure.empty(),
         failure.empty()
             ? "5-fold plan tests each of 20 subsets exactly once"
             : failure);
}

// --- criterion 9: end-to-end pipeline -------------------------------------

std::map<std::string, std::string> snapshot_tree(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    files[fs::relative(entry.path(), root).string()] =
        bsdp::read_text_file(entry.path());
  }
  return files;
}

void criterion_9() {
  const auto start = Clock::now();
  const double limit = 120.0;

  const fs::path base =
      fs::temp_directory_path() /
      ("bsdp_accept9_" + std::to_string(static_cast<long>(::getpid())));
  fs::remove_all(base);
  fs::create_directories(base);

  const auto run_into = [&](const std::string& name) {
    auto cfg = bsdp::PipelineConfig::from_text(
        "seed = 11\n"
        "jobs = 4\n"
        "granularity = day\n"
        "synth.n_stations = 30\n"
        "synth.rides_per_period = 1667\n"
        "synth.n_periods = 60\n");
    cfg.set("out", (base / name).string());
    bsdp::run_pipeline(bsdp::StageContext::from_config(std::move(cfg)));
    return snapshot_tree(base / name);
  };

  const auto first = run_into("run1");
  const double first_elapsed = seconds_since(start);

  const auto second = run_into("run2");
  bool identical = first.size() == second.size() && !first.empty();
  std::size_t records = 0;
  if (identical) {
    for (const auto& [rel, bytes] : first) {
      const auto it = second.find(rel);
      if (it == second.end() || it->second != bytes) {
        identical = false;
        break;
      }
    }
    const auto& csv = first.at("trajectories.csv");
    records = static_cast<std::size_t>(
                  std::count(csv.begin(), csv.end(), '\n')) -
              1;
  }
  fs::remove_all(base);

  const bool ok = identical && records >= 100000 && first_elapsed < limit;
  std::ostringstream what;
  what << "pipeline over " << records << " records, " << first.size()
       << " artifacts byte-identical across reruns";
  report(9, ok, timed(what.str(), first_elapsed, limit));
}

}  // namespace

int main() {
  criterion(1, criterion_1);
  criterion(2, criterion_2);
  criterion(3, criterion_3);
  criterion(4, criterion_4);
  criterion(5, criterion_5);
  criterion(6, criterion_6);
  criterion(7, criterion_7);
  criterion(8, criterion_8);
  criterion(9, criterion_9);

  std::printf("%d/9 criteria passed\n", 9 - g_failed);
  return g_failed == 0 ? 0 : 1;
}
