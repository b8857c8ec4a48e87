#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "bsdp/cluster.hpp"
#include "bsdp/graph_sequence.hpp"
#include "bsdp/grid_codec.hpp"
#include "bsdp/gru.hpp"
#include "bsdp/recommend.hpp"
#include "bsdp/station_graph.hpp"
#include "bsdp/synth.hpp"

namespace bsdp {

nlohmann::json to_json(const ClusterSet& set);
ClusterSet cluster_set_from_json(const nlohmann::json& j);

// Distances are recomputed from vertex coordinates on load; edges carry d_km
// for readers but it is not authoritative.
nlohmann::json to_json(const StationGraph& g);
StationGraph station_graph_from_json(const nlohmann::json& j);

nlohmann::json to_json(const GridCodec& codec);
GridCodec grid_codec_from_json(const nlohmann::json& j);

nlohmann::json to_json(const GraphSequence& gs);
GraphSequence graph_sequence_from_json(const nlohmann::json& j);

struct ModelCheckpoint {
  GruModel model;
  GridCodec codec;
};

nlohmann::json checkpoint_to_json(const GruModel& model,
                                  const GridCodec& codec);
ModelCheckpoint checkpoint_from_json(const nlohmann::json& j);

nlohmann::json to_json(const LayoutRecommendation& rec);

nlohmann::json to_json(const GroundTruth& truth);
GroundTruth ground_truth_from_json(const nlohmann::json& j);

nlohmann::json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path,
                     const nlohmann::json& j);
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path,
                     std::string_view content);

}  // namespace bsdp
