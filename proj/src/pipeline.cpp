#include "bsdp/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <charconv>
#include <cmath>
#include <functional>
#include <mutex>
#include <optional>
#include <set>
#include <thread>
#include <vector>

#include "bsdp/cluster.hpp"
#include "bsdp/error.hpp"
#include "bsdp/eval.hpp"
#include "bsdp/graph_sequence.hpp"
#include "bsdp/gru.hpp"
#include "bsdp/json_io.hpp"
#include "bsdp/metric.hpp"
#include "bsdp/recommend.hpp"
#include "bsdp/synth.hpp"

namespace bsdp {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "seed", "jobs", "strict", "out", "granularity",
      "trajectories", "regions", "legal_positions", "groundtruth",
      "synth.enabled", "synth.n_stations", "synth.capacity_min",
      "synth.capacity_max", "synth.rides_per_period", "synth.drift",
      "synth.drift_amplitude", "synth.noise_sigma_km", "synth.n_periods",
      "synth.lat_min", "synth.lat_max", "synth.lon_min", "synth.lon_max",
      "synth.min_separation_km", "synth.n_bikes", "synth.extra_positions",
      "synth.start_epoch",
      "cluster.d_c_km", "cluster.rho_fraction", "cluster.delta_fraction",
      "cluster.min_station_size",
      "graph.alpha", "graph.theta_p", "graph.theta_u", "graph.percentile",
      "grid.rows", "grid.cols", "grid.anchor_policy", "grid.cap_round",
      "train.epochs", "train.learning_rate", "train.hidden_dim",
      "train.init_scale", "train.gradient_clip",
      "recommend.theta_d_km",
      "eval.k", "eval.max_pairs",
  };
  return keys;
}

std::string trim(std::string_view s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string_view::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return std::string(s.substr(a, b - a + 1));
}

// Region ids appear in file names; keep them path-safe.
std::string sanitize(const std::string& id) {
  std::string out;
  for (const char ch : id) {
    out += std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' ||
                   ch == '_'
               ? ch
               : '_';
  }
  return out.empty() ? "_" : out;
}

void parallel_for(std::size_t n, int jobs,
                  const std::function<void(std::size_t)>& fn) {
  if (n == 0) return;
  const auto workers = static_cast<std::size_t>(std::max(1, jobs));
  if (workers <= 1 || n == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        const std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < std::min(workers, n); ++w) {
    pool.emplace_back(worker);
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

ClusterParams cluster_params_from(const PipelineConfig& cfg) {
  ClusterParams p;
  p.cutoff_distance_km = cfg.get_double("cluster.d_c_km", 0.1);
  p.rho_fraction = cfg.get_double("cluster.rho_fraction", 1.0 / 3.0);
  p.delta_fraction = cfg.get_double("cluster.delta_fraction", 1.0 / 3.0);
  p.min_station_size =
      static_cast<int>(cfg.get_int("cluster.min_station_size", 5));
  p.validate();
  return p;
}

CodecFitOptions codec_options_from(const PipelineConfig& cfg) {
  CodecFitOptions o;
  o.rows = static_cast<int>(cfg.get_int("grid.rows", 16));
  o.cols = static_cast<int>(cfg.get_int("grid.cols", 16));
  o.anchor_policy = anchor_policy_from_string(
      cfg.get_string("grid.anchor_policy", "historical_centroid"));
  o.cap_round = static_cast<int>(cfg.get_int("grid.cap_round", 10));
  return o;
}

TrainConfig train_config_from(const PipelineConfig& cfg, std::uint64_t seed) {
  TrainConfig t;
  t.epochs = static_cast<int>(cfg.get_int("train.epochs", 200));
  t.learning_rate = cfg.get_double("train.learning_rate", 0.05);
  t.rng_seed = seed;
  t.init_scale = cfg.get_double("train.init_scale", 0.1);
  t.gradient_clip = cfg.get_double("train.gradient_clip", 5.0);
  t.hidden_dim = static_cast<int>(cfg.get_int("train.hidden_dim", 32));
  t.validate();
  return t;
}

Granularity granularity_from(const PipelineConfig& cfg) {
  return granularity_from_string(cfg.get_string("granularity", "week"));
}

struct PartitionedInput {
  std::vector<TrajectoryRecord> records;
  PartitionResult partition;
  std::size_t row_errors = 0;
};

PartitionedInput load_partitioned(const StageContext& ctx) {
  PartitionedInput in;
  auto parsed = parse_trajectory_csv_file(ctx.trajectories_path(), ctx.strict);
  in.records = std::move(parsed.records);
  in.row_errors = parsed.row_errors.size();
  const auto regions = load_regions(ctx.regions_path());
  in.partition =
      partition_spatiotemporal(in.records, regions, granularity_from(ctx.config));
  return in;
}

fs::path cluster_file(const StageContext& ctx, const SpatioTemporalKey& key) {
  return ctx.out_dir / "clusters" / sanitize(key.region_id) /
         ("p" + std::to_string(key.period_index) + ".json");
}

fs::path graph_file(const StageContext& ctx, const std::string& region,
                    std::int64_t period) {
  return ctx.out_dir / "graphs" / sanitize(region) /
         ("p" + std::to_string(period) + ".json");
}

// Region name -> period -> file, discovered from the graphs directory.
std::map<std::string, std::map<std::int64_t, fs::path>> discover_graphs(
    const StageContext& ctx) {
  std::map<std::string, std::map<std::int64_t, fs::path>> out;
  const fs::path root = ctx.out_dir / "graphs";
  if (!fs::exists(root)) {
    throw InvalidInputError("no graphs directory at " + root.string() +
                            "; run the graph stage first");
  }
  for (const auto& region_dir : fs::directory_iterator(root)) {
    if (!region_dir.is_directory()) continue;
    auto& periods = out[region_dir.path().filename().string()];
    for (const auto& f : fs::directory_iterator(region_dir.path())) {
      const std::string name = f.path().filename().string();
      if (name.size() < 7 || name.front() != 'p' ||
          !name.ends_with(".json")) {
        continue;
      }
      std::int64_t period = 0;
      const auto* begin = name.data() + 1;
      const auto* end = name.data() + name.size() - 5;
      if (std::from_chars(begin, end, period).ptr != end) continue;
      periods[period] = f.path();
    }
  }
  return out;
}

std::vector<std::string> discover_sequences(const StageContext& ctx) {
  std::vector<std::string> regions;
  if (!fs::exists(ctx.out_dir)) return regions;
  for (const auto& f : fs::directory_iterator(ctx.out_dir)) {
    const std::string name = f.path().filename().string();
    if (name.starts_with("sequence_") && name.ends_with(".json")) {
      regions.push_back(name.substr(9, name.size() - 14));
    }
  }
  std::sort(regions.begin(), regions.end());
  return regions;
}

std::vector<Vector> encoded_frames(const GraphSequence& gs) {
  std::vector<Vector> frames;
  frames.reserve(gs.size());
  for (const auto& g : gs.graphs) {
    const auto x = encode_graph(g, gs.codec);
    frames.push_back(Eigen::Map<const Vector>(
        x.data(), static_cast<Eigen::Index>(x.size())));
  }
  return frames;
}

}  // namespace

PipelineConfig PipelineConfig::from_text(std::string_view text) {
  PipelineConfig cfg;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(
        pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) +
                        " is not 'key = value'");
    }
    cfg.set(trim(std::string_view(stripped).substr(0, eq)),
            trim(std::string_view(stripped).substr(eq + 1)));
  }
  return cfg;
}

PipelineConfig PipelineConfig::from_file(const fs::path& path) {
  return from_text(read_text_file(path));
}

void PipelineConfig::set(const std::string& key, const std::string& value) {
  if (!known_keys().contains(key)) {
    throw ConfigError("unknown config key '" + key + "'");
  }
  values_[key] = value;
}

bool PipelineConfig::has(const std::string& key) const {
  return values_.contains(key);
}

std::string PipelineConfig::get_string(const std::string& key,
                                       const std::string& fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

std::int64_t PipelineConfig::get_int(const std::string& key,
                                     std::int64_t fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  std::int64_t v = 0;
  const auto& s = it->second;
  if (std::from_chars(s.data(), s.data() + s.size(), v).ptr !=
      s.data() + s.size()) {
    throw ConfigError("config key '" + key + "' is not an integer: '" + s +
                      "'");
  }
  return v;
}

double PipelineConfig::get_double(const std::string& key,
                                  double fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  double v = 0.0;
  const auto& s = it->second;
  if (std::from_chars(s.data(), s.data() + s.size(), v).ptr !=
      s.data() + s.size()) {
    throw ConfigError("config key '" + key + "' is not a number: '" + s + "'");
  }
  return v;
}

bool PipelineConfig::get_bool(const std::string& key, bool fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  const auto& s = it->second;
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ConfigError("config key '" + key + "' is not a boolean: '" + s + "'");
}

StageContext StageContext::from_config(PipelineConfig config) {
  StageContext ctx;
  ctx.out_dir = config.get_string("out", "out");
  ctx.seed = static_cast<std::uint64_t>(config.get_int("seed", 1));
  ctx.jobs = static_cast<int>(config.get_int("jobs", 1));
  ctx.strict = config.get_bool("strict", false);
  if (ctx.jobs < 1) throw ConfigError("jobs must be >= 1");
  ctx.config = std::move(config);
  return ctx;
}

fs::path StageContext::trajectories_path() const {
  return config.get_string("trajectories",
                           (out_dir / "trajectories.csv").string());
}

fs::path StageContext::regions_path() const {
  return config.get_string("regions", (out_dir / "regions.json").string());
}

fs::path StageContext::legal_positions_path() const {
  return config.get_string("legal_positions",
                           (out_dir / "legal_positions.csv").string());
}

fs::path StageContext::groundtruth_path() const {
  return config.get_string("groundtruth",
                           (out_dir / "groundtruth.json").string());
}

void run_synth(const StageContext& ctx) {
  const auto& cfg = ctx.config;
  SynthConfig sc;
  sc.rng_seed = ctx.seed;
  sc.lat_min = cfg.get_double("synth.lat_min", sc.lat_min);
  sc.lat_max = cfg.get_double("synth.lat_max", sc.lat_max);
  sc.lon_min = cfg.get_double("synth.lon_min", sc.lon_min);
  sc.lon_max = cfg.get_double("synth.lon_max", sc.lon_max);
  sc.n_stations = static_cast<int>(cfg.get_int("synth.n_stations", 30));
  sc.capacity_min = static_cast<int>(cfg.get_int("synth.capacity_min", 10));
  sc.capacity_max = static_cast<int>(cfg.get_int("synth.capacity_max", 40));
  sc.rides_per_period =
      static_cast<int>(cfg.get_int("synth.rides_per_period", 2000));
  sc.drift = drift_model_from_string(cfg.get_string("synth.drift", "constant"));
  sc.drift_amplitude =
      static_cast<int>(cfg.get_int("synth.drift_amplitude", 0));
  sc.noise_sigma_km = cfg.get_double("synth.noise_sigma_km", 0.02);
  sc.n_periods = static_cast<int>(cfg.get_int("synth.n_periods", 8));
  sc.granularity = granularity_from(cfg);
  sc.start_epoch = cfg.get_int("synth.start_epoch", sc.start_epoch);
  sc.min_separation_km = cfg.get_double("synth.min_separation_km", 0.0);
  sc.n_bikes = static_cast<int>(cfg.get_int("synth.n_bikes", 0));
  sc.extra_positions =
      static_cast<int>(cfg.get_int("synth.extra_positions", 0));

  const auto out = generate_synthetic_city(sc);
  fs::create_directories(ctx.out_dir);
  write_text_file(ctx.out_dir / "trajectories.csv", out.trajectory_csv);
  write_text_file(ctx.out_dir / "legal_positions.csv",
                  out.legal_positions_csv);
  write_text_file(ctx.out_dir / "regions.json", out.regions_json);
  write_json_file(ctx.out_dir / "groundtruth.json", to_json(out.truth));
}

void run_cluster(const StageContext& ctx) {
  const auto in = load_partitioned(ctx);
  const auto params = cluster_params_from(ctx.config);

  std::vector<const SpatioTemporalKey*> keys;
  std::vector<const std::vector<TrajectoryRecord>*> bucket_records;
  for (const auto& [key, records] : in.partition.buckets) {
    keys.push_back(&key);
    bucket_records.push_back(&records);
  }

  std::vector<ClusterSet> results(keys.size());
  parallel_for(keys.size(), ctx.jobs, [&](std::size_t i) {
    HaversineMetric metric;
    results[i] = cluster_drop_offs(extract_positions(*bucket_records[i]),
                                   params, metric);
  });

  json report;
  report["rejected"] = in.partition.rejected.size();
  report["row_errors"] = in.row_errors;
  json buckets = json::array();
  for (std::size_t i = 0; i < keys.size(); ++i) {
    const auto path = cluster_file(ctx, *keys[i]);
    fs::create_directories(path.parent_path());
    write_json_file(path, to_json(results[i]));

    std::string plot = "index,rho,delta,label\n";
    for (std::size_t p = 0; p < results[i].rho.size(); ++p) {
      plot += std::to_string(p) + "," + std::to_string(results[i].rho[p]) +
              "," + std::to_string(results[i].delta[p]) + "," +
              std::to_string(results[i].label[p]) + "\n";
    }
    fs::create_directories(ctx.out_dir / "plots");
    write_text_file(ctx.out_dir / "plots" /
                        ("decision_" + sanitize(keys[i]->region_id) + "_p" +
                         std::to_string(keys[i]->period_index) + ".csv"),
                    plot);

    buckets.push_back(json{{"region", keys[i]->region_id},
                           {"period", keys[i]->period_index},
                           {"records", bucket_records[i]->size()},
                           {"clusters", results[i].cluster_count()},
                           {"no_centers", results[i].no_centers}});
  }
  report["buckets"] = std::move(buckets);
  write_json_file(ctx.out_dir / "partition_report.json", report);
}

void run_graph(const StageContext& ctx) {
  const auto in = load_partitioned(ctx);
  GraphBuildOptions opts;
  opts.min_station_size =
      static_cast<int>(ctx.config.get_int("cluster.min_station_size", 5));
  const double alpha = ctx.config.get_double("graph.alpha", 1.0);
  const double percentile = ctx.config.get_double("graph.percentile", 0.25);

  std::vector<const SpatioTemporalKey*> keys;
  std::vector<const std::vector<TrajectoryRecord>*> bucket_records;
  for (const auto& [key, records] : in.partition.buckets) {
    keys.push_back(&key);
    bucket_records.push_back(&records);
  }

  std::vector<StationGraph> graphs(keys.size());
  parallel_for(keys.size(), ctx.jobs, [&](std::size_t i) {
    const auto clusters =
        cluster_set_from_json(read_json_file(cluster_file(ctx, *keys[i])));
    StationGraph g = build_station_graph(clusters, *bucket_records[i], opts);
    double theta_p = 0.0, theta_u = 0.0;
    if (ctx.config.has("graph.theta_p") || ctx.config.has("graph.theta_u")) {
      theta_p = ctx.config.get_double("graph.theta_p", 0.0);
      theta_u = ctx.config.get_double("graph.theta_u", 0.0);
    } else if (!g.empty()) {
      std::vector<double> revenue(g.size());
      for (std::size_t v = 0; v < g.size(); ++v) {
        revenue[v] = station_revenue(g, v, alpha);
      }
      theta_p = nearest_rank_percentile(std::move(revenue), percentile);
      if (g.total_rides() > 0) {
        std::vector<double> utility(g.size());
        for (std::size_t v = 0; v < g.size(); ++v) {
          utility[v] = station_utility(g, v);
        }
        theta_u = nearest_rank_percentile(std::move(utility), percentile);
      }
    }
    graphs[i] = remove_inferior(g, theta_p, theta_u, alpha);
  });

  for (std::size_t i = 0; i < keys.size(); ++i) {
    const auto path =
        graph_file(ctx, keys[i]->region_id, keys[i]->period_index);
    fs::create_directories(path.parent_path());
    write_json_file(path, to_json(graphs[i]));
  }
}

void run_sequence(const StageContext& ctx) {
  const auto regions = discover_graphs(ctx);
  if (regions.empty()) {
    throw InvalidInputError("graph stage produced no regions");
  }
  SequenceOptions opts;
  opts.codec = codec_options_from(ctx.config);
  const auto granularity = granularity_from(ctx.config);
  for (const auto& [region, files] : regions) {
    std::map<std::int64_t, StationGraph> by_period;
    for (const auto& [period, path] : files) {
      by_period[period] = station_graph_from_json(read_json_file(path));
    }
    const auto gs = build_graph_sequence(by_period, region, granularity, opts);
    write_json_file(ctx.out_dir / ("sequence_" + sanitize(region) + ".json"),
                    to_json(gs));
  }
}

void run_train(const StageContext& ctx) {
  const auto regions = discover_sequences(ctx);
  if (regions.empty()) {
    throw InvalidInputError("no sequence files; run the sequence stage first");
  }
  const auto tc = train_config_from(ctx.config, ctx.seed);
  parallel_for(regions.size(), ctx.jobs, [&](std::size_t i) {
    const auto& region = regions[i];
    const auto gs = graph_sequence_from_json(
        read_json_file(ctx.out_dir / ("sequence_" + region + ".json")));
    const auto result = train_ggnn(gs, tc);
    write_json_file(ctx.out_dir / ("model_" + region + ".json"),
                    checkpoint_to_json(result.model, gs.codec));

    std::string plot = "epoch,loss\n";
    for (std::size_t e = 0; e < result.epoch_loss.size(); ++e) {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%zu,%.17g\n", e, result.epoch_loss[e]);
      plot += buf;
    }
    fs::create_directories(ctx.out_dir / "plots");
    write_text_file(ctx.out_dir / "plots" / ("loss_" + region + ".csv"), plot);
  });
}

void run_predict(const StageContext& ctx) {
  const auto regions = discover_sequences(ctx);
  if (regions.empty()) {
    throw InvalidInputError("no sequence files; run the sequence stage first");
  }
  const int min_station_size =
      static_cast<int>(ctx.config.get_int("cluster.min_station_size", 5));
  for (const auto& region : regions) {
    const auto gs = graph_sequence_from_json(
        read_json_file(ctx.out_dir / ("sequence_" + region + ".json")));
    const auto cp = checkpoint_from_json(
        read_json_file(ctx.out_dir / ("model_" + region + ".json")));
    if (cp.codec.dimension() != gs.codec.dimension()) {
      throw ContractError("model checkpoint grid does not match sequence");
    }
    const auto predicted =
        predict_next_graph(cp.model, gs, min_station_size);
    write_json_file(ctx.out_dir / ("predicted_" + region + ".json"),
                    to_json(predicted));
  }
}

void run_recommend(const StageContext& ctx) {
  const auto regions = discover_sequences(ctx);
  if (regions.empty()) {
    throw InvalidInputError("no sequence files; run the sequence stage first");
  }
  const double theta_d = ctx.config.get_double("recommend.theta_d_km", 0.1);
  const auto positions = load_legal_positions_csv(ctx.legal_positions_path());
  for (const auto& region : regions) {
    const auto predicted = station_graph_from_json(
        read_json_file(ctx.out_dir / ("predicted_" + region + ".json")));
    const auto rec = fine_tune_layout(predicted, positions, theta_d);
    write_json_file(ctx.out_dir / ("recommendation_" + region + ".json"),
                    to_json(rec));
  }
}

namespace {

struct TruthLabels {
  std::map<std::string, int> by_key;

  static std::string key(const std::string& bike, const GeoPoint& p) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "|%.17g|%.17g", p.latitude, p.longitude);
    return bike + buf;
  }
};

std::optional<TruthLabels> load_truth_labels(const StageContext& ctx) {
  if (!fs::exists(ctx.groundtruth_path())) return std::nullopt;
  const auto truth =
      ground_truth_from_json(read_json_file(ctx.groundtruth_path()));
  TruthLabels labels;
  for (const auto& p : truth.points) {
    labels.by_key.emplace(TruthLabels::key(p.bike_id, p.location), p.station);
  }
  return labels;
}

// Mean clustering AUC over the fold's test periods, when labels exist.
std::optional<double> fold_cluster_auc(
    const StageContext& ctx, const std::string& region,
    const GraphSequence& gs, const std::vector<std::size_t>& test,
    const TruthLabels& labels, const AucOptions& auc_options) {
  std::vector<double> aucs;
  for (const std::size_t p : test) {
    SpatioTemporalKey key{gs.region_id, gs.period_of(p), gs.granularity};
    key.region_id = region;
    const auto path = cluster_file(ctx, key);
    if (!fs::exists(path)) continue;
    const auto set = cluster_set_from_json(read_json_file(path));
    std::vector<int> predicted, truth;
    for (std::size_t i = 0; i < set.points.points.size(); ++i) {
      const auto& pt = set.points.points[i];
      const auto it =
          labels.by_key.find(TruthLabels::key(pt.bike_id, pt.location));
      if (it == labels.by_key.end()) continue;
      predicted.push_back(set.label[i]);
      truth.push_back(it->second);
    }
    if (predicted.size() < 2) continue;
    try {
      aucs.push_back(pairwise_comembership_auc(predicted, truth, auc_options));
    } catch (const NumericalError&) {
      // one-class period; skip
    }
  }
  if (aucs.empty()) return std::nullopt;
  return mean(aucs);
}

json optional_number(const std::optional<double>& v) {
  return v ? json(*v) : json(nullptr);
}

}  // namespace

void run_eval(const StageContext& ctx) {
  const auto regions = discover_sequences(ctx);
  if (regions.empty()) {
    throw InvalidInputError("no sequence files; run the sequence stage first");
  }
  const int k = static_cast<int>(ctx.config.get_int("eval.k", 5));
  AucOptions auc_options;
  auc_options.max_pairs =
      static_cast<std::size_t>(ctx.config.get_int("eval.max_pairs", 100000));
  auc_options.seed = ctx.seed;
  const auto tc = train_config_from(ctx.config, ctx.seed);
  const auto truth_labels = load_truth_labels(ctx);

  json all_regions;
  for (const auto& region : regions) {
    const auto gs = graph_sequence_from_json(
        read_json_file(ctx.out_dir / ("sequence_" + region + ".json")));
    const auto frames = encoded_frames(gs);
    const auto plan = kfold_splits(frames.size(), k, ctx.seed);

    json per_fold = json::array();
    std::vector<double> fold_rmse, fold_persist, fold_auc;
    std::string plot = "fold,rmse_model,rmse_persistence,auc\n";
    for (int f = 0; f < k; ++f) {
      const auto test = plan.test_indices(f);
      std::set<std::size_t> test_set(test.begin(), test.end());

      // Training pairs (t -> t+1) whose target period is not under test.
      std::vector<Vector> inputs, targets;
      for (std::size_t t = 0; t + 1 < frames.size(); ++t) {
        if (!test_set.contains(t + 1)) {
          inputs.push_back(frames[t]);
          targets.push_back(frames[t + 1]);
        }
      }
      std::optional<double> rmse_model, rmse_persist, auc;
      if (!inputs.empty()) {
        const auto trained = train_pairs(inputs, targets, tc);
        std::vector<double> rm, rp;
        for (const std::size_t p : test) {
          if (p == 0) continue;  // no history to predict from
          const auto prefix = std::span<const Vector>(frames).first(p);
          const Vector y = predict_next_vector(trained.model, prefix);
          rm.push_back(vector_rmse(
              std::span<const double>(y.data(), static_cast<std::size_t>(y.size())),
              std::span<const double>(frames[p].data(),
                                      static_cast<std::size_t>(frames[p].size()))));
          rp.push_back(vector_rmse(
              std::span<const double>(frames[p - 1].data(),
                                      static_cast<std::size_t>(frames[p - 1].size())),
              std::span<const double>(frames[p].data(),
                                      static_cast<std::size_t>(frames[p].size()))));
        }
        if (!rm.empty()) {
          rmse_model = mean(rm);
          rmse_persist = mean(rp);
        }
      }
      if (truth_labels) {
        auc = fold_cluster_auc(ctx, region, gs, test, *truth_labels,
                               auc_options);
      }

      if (rmse_model) fold_rmse.push_back(*rmse_model);
      if (rmse_persist) fold_persist.push_back(*rmse_persist);
      if (auc) fold_auc.push_back(*auc);
      per_fold.push_back(json{{"fold", f},
                              {"rmse_model", optional_number(rmse_model)},
                              {"rmse_persistence", optional_number(rmse_persist)},
                              {"auc", optional_number(auc)}});
      char buf[160];
      std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g\n", f,
                    rmse_model.value_or(std::nan("")),
                    rmse_persist.value_or(std::nan("")),
                    auc.value_or(std::nan("")));
      plot += buf;
    }

    json region_json;
    region_json["k"] = k;
    region_json["per_fold"] = std::move(per_fold);
    region_json["rmse_model"] = optional_number(
        fold_rmse.empty() ? std::nullopt
                          : std::optional<double>(mean(fold_rmse)));
    region_json["rmse_persistence"] = optional_number(
        fold_persist.empty() ? std::nullopt
                             : std::optional<double>(mean(fold_persist)));
    region_json["auc"] = optional_number(
        fold_auc.empty() ? std::nullopt
                         : std::optional<double>(mean(fold_auc)));
    all_regions[region] = std::move(region_json);

    fs::create_directories(ctx.out_dir / "plots");
    write_text_file(ctx.out_dir / "plots" / ("eval_" + region + ".csv"), plot);
  }
  write_json_file(ctx.out_dir / "metrics.json",
                  json{{"regions", std::move(all_regions)}});
}

void run_pipeline(const StageContext& ctx) {
  if (ctx.config.get_bool("synth.enabled", true)) {
    run_synth(ctx);
  }
  run_cluster(ctx);
  run_graph(ctx);
  run_sequence(ctx);
  run_train(ctx);
  run_predict(ctx);
  run_recommend(ctx);
  run_eval(ctx);
}

}  // namespace bsdp
