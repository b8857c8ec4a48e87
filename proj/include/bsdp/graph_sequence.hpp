#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "bsdp/grid_codec.hpp"
#include "bsdp/ingest.hpp"
#include "bsdp/station_graph.hpp"

namespace bsdp {

// Time-ordered station graphs for one region at a fixed granularity.
// graphs[k] covers period first_period + k; gaps hold empty graphs and are
// listed in missing_periods.
struct GraphSequence {
  std::string region_id;
  Granularity granularity = Granularity::week;
  std::int64_t first_period = 0;
  std::vector<StationGraph> graphs;
  std::vector<std::int64_t> missing_periods;
  GridCodec codec;

  std::size_t size() const { return graphs.size(); }
  std::int64_t period_of(std::size_t index) const {
    return first_period + static_cast<std::int64_t>(index);
  }
};

struct SequenceOptions {
  CodecFitOptions codec;
};

// Requires >= 2 distinct periods; fits the shared codec over every graph.
GraphSequence build_graph_sequence(
    const std::map<std::int64_t, StationGraph>& graphs_by_period,
    const std::string& region_id, Granularity granularity,
    const SequenceOptions& options = {});

}  // namespace bsdp
