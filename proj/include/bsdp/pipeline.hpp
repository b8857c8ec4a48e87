#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>

namespace bsdp {

// Flat key=value configuration ('#' comments). Keys are validated against
// the known set so typos fail loudly.
class PipelineConfig {
 public:
  static PipelineConfig from_file(const std::filesystem::path& path);
  static PipelineConfig from_text(std::string_view text);

  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const;

  std::string get_string(const std::string& key,
                         const std::string& fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  const std::map<std::string, std::string>& entries() const {
    return values_;
  }

 private:
  std::map<std::string, std::string> values_;
};

struct StageContext {
  PipelineConfig config;
  std::filesystem::path out_dir;
  std::uint64_t seed = 1;
  int jobs = 1;
  bool strict = false;

  static StageContext from_config(PipelineConfig config);

  std::filesystem::path trajectories_path() const;
  std::filesystem::path regions_path() const;
  std::filesystem::path legal_positions_path() const;
  std::filesystem::path groundtruth_path() const;
};

void run_synth(const StageContext& ctx);
void run_cluster(const StageContext& ctx);
void run_graph(const StageContext& ctx);
void run_sequence(const StageContext& ctx);
void run_train(const StageContext& ctx);
void run_predict(const StageContext& ctx);
void run_recommend(const StageContext& ctx);
void run_eval(const StageContext& ctx);
void run_pipeline(const StageContext& ctx);

}  // namespace bsdp
